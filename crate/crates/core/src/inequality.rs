//! Functional inequalities evaluated on computed spectra and profiles, the
//! closed-form `L2` projection onto a mass constraint, and the eigenfunction
//! lower bound for the exclusion process.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::check::{Check, Verdict};
use crate::error::{Error, Result};
use crate::profile::ProfileTable;
use crate::rng;
use crate::spectral::{self, MixFunctionals, SpectralData};

/// Minimum of `||mu - π||^2_{2,π}` over distributions with
/// `mu(A) >= π(A) + δ π(A^c)`, which equals `δ^2 (1 - π(A)) / π(A)`.
pub fn lagrange_min_distance(pi_a: f64, delta: f64) -> Result<f64> {
    if !(pi_a > 0.0 && pi_a < 1.0) {
        return Err(Error::InvalidArgument(format!("π(A) = {pi_a} outside (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("δ = {delta} outside (0, 1)")));
    }
    Ok(delta * delta * (1.0 - pi_a) / pi_a)
}

/// Result of the numeric minimisation over the constrained simplex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimplexMinimum {
    pub value: f64,
    /// Minimising distribution over `n` points, `A = {0, .., a-1}`.
    pub mu: Vec<f64>,
}

/// Euclidean projection of `y` onto `{x >= 0, sum x = s}`.
pub fn project_scaled_simplex(y: &[f64], s: f64) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in u.iter().enumerate() {
        cum += v;
        let t = (cum - s) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Minimises `||mu - π||^2_{2,π}` over distributions on `n` uniform points
/// with `mu(A) >= π(A) + δ π(A^c)` where `|A| = a`.
///
/// The feasible set is swept by the mass `s = mu(A)`; for each `s` the two
/// blocks are solved by projected gradient descent from a random start, and
/// `s` is optimised by golden-section search.
pub fn simplex_min_distance(n: usize, a: usize, delta: f64, seed: u64) -> Result<SimplexMinimum> {
    if a == 0 || a >= n {
        return Err(Error::InvalidArgument(format!("need 0 < |A| = {a} < n = {n}")));
    }
    let pi_a = a as f64 / n as f64;
    let s_min = pi_a + delta * (1.0 - pi_a);
    let mut rng = rng::stream(seed, 0);
    let start: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let nf = n as f64;
    let block = |s: f64, y0: &[f64]| -> Vec<f64> {
        let mut x = project_scaled_simplex(y0, s);
        let step = 0.25 / nf;
        for _ in 0..200 {
            let grad: Vec<f64> = x.iter().map(|m| 2.0 * (nf * m - 1.0)).collect();
            let y: Vec<f64> = x.iter().zip(&grad).map(|(m, g)| m - step * g).collect();
            let next = project_scaled_simplex(&y, s);
            let moved = next.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            x = next;
            if moved < 1e-16 {
                break;
            }
        }
        x
    };
    let eval = |s: f64| -> (f64, Vec<f64>) {
        let mut mu = block(s, &start[..a]);
        mu.extend(block(1.0 - s, &start[a..]));
        let v = mu.iter().map(|m| (nf * m - 1.0).powi(2)).sum::<f64>() / nf;
        (v, mu)
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (s_min, 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = eval(x1).0;
    let mut f2 = eval(x2).0;
    while hi - lo > 1e-12 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = eval(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = eval(x2).0;
        }
    }
    let (edge_v, edge_mu) = eval(s_min);
    let (mid_v, mid_mu) = eval(0.5 * (lo + hi));
    Ok(if edge_v <= mid_v { SimplexMinimum { value: edge_v, mu: edge_mu } } else { SimplexMinimum { value: mid_v, mu: mid_mu } })
}

/// Outcome of the eigenfunction lower bound on the exclusion mixing time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenfunctionBound {
    pub k: usize,
    pub delta: f64,
    pub eps: f64,
    pub lambda: f64,
    /// `E_π|f|` and `(E_π f^2)^{1/2}` of the chosen eigenfunction.
    pub l1: f64,
    pub l2: f64,
    /// `4 δ log k - log(16/ε)`.
    pub exponent: f64,
    pub feasible: bool,
    /// `(4 δ log k - log(16/ε)) / (2 λ)` when feasible, else `0`.
    pub t_bound: f64,
}

/// Lower bound on the `(1-ε)` mixing time of `EX(k)` from the second
/// eigenfunction, valid when `||f||_1 >= k^{-1/4+δ} ||f||_2` and the exponent
/// is nonnegative.
pub fn eigenfunction_lower_bound(sd: &SpectralData, k: usize, delta: f64, eps: f64) -> Result<EigenfunctionBound> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be at least 2")));
    }
    if sd.n() < 2 {
        return Err(Error::InvalidArgument("need at least two vertices".into()));
    }
    let f = sd.eigenfunction(1);
    let n = f.len() as f64;
    let l1 = f.iter().map(|x| x.abs()).sum::<f64>() / n;
    let l2 = (f.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    let kf = k as f64;
    let exponent = 4.0 * delta * kf.ln() - (16.0 / eps).ln();
    let feasible = l1 >= kf.powf(-0.25 + delta) * l2 && exponent >= 0.0;
    let lambda = sd.gap();
    let t_bound = if feasible { exponent / (2.0 * lambda) } else { 0.0 };
    Ok(EigenfunctionBound { k, delta, eps, lambda, l1, l2, exponent, feasible, t_bound })
}

/// Checks `log(||f||_2 / (2 ||f||_1)) <= λ / c_LS` for every eigenfunction,
/// using the upper bracket of `c_LS` so a pass is conservative.
pub fn distortion_checks(sd: &SpectralData, c_ls_upper: f64) -> Vec<Check> {
    let n = sd.n();
    (1..n)
        .map(|i| {
            let f = sd.eigenfunction(i);
            let l1 = f.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
            let l2 = (f.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
            let lhs = (l2 / (2.0 * l1)).ln();
            let rhs = sd.eigenvalues()[i] / c_ls_upper;
            Check::le("eigenfunction distortion", format!("eigenfunction {i}"), lhs, rhs, 1e-12)
        })
        .collect()
}

/// Every inequality check on one graph, with the constant of the
/// `t_sp(1/2) log log n` comparison reported separately.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    pub checks: Vec<Check>,
    /// `t_sp(1/2) c_LS / log log n`, using the `c_LS` upper bracket.
    pub t_sp_half_constant: f64,
}

impl InequalityReport {
    pub fn all_hold(&self) -> bool {
        !self.checks.iter().any(|c| c.verdict.is_failure())
    }
}

/// Random distributions used as initial laws: point masses, uniform laws on
/// random subsets and random weight vectors.
pub fn sample_distributions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..count {
        let mut rng = rng::stream(seed, i as u64);
        let mu = match i % 3 {
            0 => {
                let mut m = vec![0.0; n];
                m[rng.random_range(0..n)] = 1.0;
                m
            }
            1 => {
                let size = rng.random_range(1..=n);
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(&mut rng);
                let mut m = vec![0.0; n];
                for &v in &idx[..size] {
                    m[v] = 1.0 / size as f64;
                }
                m
            }
            _ => {
                let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|x| x / s).collect()
            }
        };
        out.push(mu);
    }
    out
}

/// Random nonnegative, non-constant test functions.
pub fn sample_nonnegative_functions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..n.min(count))
        .map(|v| (0..n).map(|x| if x == v { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut i = 0u64;
    while out.len() < count {
        let mut rng = rng::stream(seed, 1000 + i);
        i += 1;
        let size = rng.random_range(1..n.max(2));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut u = vec![0.0; n];
        for &v in &idx[..size] {
            u[v] = if i % 2 == 0 { 1.0 } else { rng.random::<f64>() + 0.01 };
        }
        out.push(u);
    }
    out
}

/// Evaluates the functional inequalities on one graph.
pub fn inequality_suite(sd: &SpectralData, table: &ProfileTable, mixf: &MixFunctionals, seed: u64) -> InequalityReport {
    let n = sd.n();
    let nf = n as f64;
    let c_up = mixf.c_ls.upper;
    let c_lo = mixf.c_ls.lower;
    let mut checks = Vec::new();

    // Spectral profile against the log-Sobolev constant.
    for m in 1..n {
        let d = m as f64 / nf;
        let lam = table.lambda(d);
        let rhs_up = c_up * (1.0 / d).ln();
        let rhs_lo = c_lo * (1.0 / d).ln();
        let cons = (1.0 - d) * lam.lower >= rhs_up * (1.0 - 1e-12);
        let opt = (1.0 - d) * lam.upper >= rhs_lo * (1.0 - 1e-12);
        checks.push(Check::new(
            "profile dominates log-Sobolev",
            format!("delta = {d:.6}"),
            rhs_up,
            (1.0 - d) * lam.lower,
            Verdict::bracketed(cons, opt),
        ));
    }

    // Rayleigh quotient of nonnegative functions against the profile.
    for (i, u) in sample_nonnegative_functions(n, 32, seed).iter().enumerate() {
        let var = sd.variance(u);
        if var <= 1e-14 {
            continue;
        }
        let lhs = sd.dirichlet(u) / var;
        let l1 = u.iter().sum::<f64>() / nf;
        let lam = table.lambda(4.0 * l1 * l1 / var);
        let cons = lhs >= 0.5 * lam.upper * (1.0 - 1e-12);
        let opt = lhs >= 0.5 * lam.lower * (1.0 - 1e-12);
        checks.push(Check::new(
            "nonnegative Rayleigh quotient",
            format!("sample {i}"),
            0.5 * lam.upper,
            lhs,
            Verdict::bracketed(cons, opt),
        ));
    }

    // Contraction after the profile-determined time, and Poincaré decay.
    for (i, mu) in sample_distributions(n, 24, seed ^ 0x5eed).iter().enumerate() {
        let d0 = sd.l2_sq_distance(mu);
        if d0 <= 1e-14 {
            continue;
        }
        for c in [0.5, 0.25] {
            let lam = table.lambda(4.0 / (c * d0));
            let t = (1.0 / c).ln() / lam.upper;
            let dt = sd.l2_sq_distance(&sd.evolve(mu, t));
            checks.push(Check::le("profile contraction", format!("sample {i}, c = {c}, t = {t:.6}"), dt, c * d0, 1e-10));
        }
        for t in [0.0, 0.3, 1.0, 3.0] {
            let dt = sd.l2_sq_distance(&sd.evolve(mu, t));
            let rhs = d0 * (-2.0 * sd.gap() * t).exp();
            checks.push(Check::le("Poincaré decay", format!("sample {i}, t = {t}"), dt, rhs, 1e-10));
        }
    }

    // Sup-norm mixing time against the profile integrals, and the single-walk
    // sandwich.
    let logn = nf.ln();
    for e in &mixf.per_eps {
        let eps = e.eps;
        let sp = table.t_sp_at(eps);
        let es = table.t_evolving_sets_at(eps);
        checks.push(Check::new(
            "sup-norm mixing below spectral profile bound",
            format!("eps = {eps}"),
            e.t_mix_linf.value,
            sp.upper,
            Verdict::bracketed(e.t_mix_linf.lower <= sp.lower, e.t_mix_linf.lower <= sp.upper),
        ));
        // The isoperimetric sandwich bounds the integrand below 1/2 only; on
        // [1/2, 4/ε] it gives Λ ≥ gap, hence a tail of 2 rel log(8/ε) rather
        // than rel log(8/ε). The literal comparison is reported, the corrected
        // one is checked.
        let tail = mixf.rel * (8.0 / eps).ln();
        checks.push(Check::new(
            "spectral profile bound below evolving-sets bound",
            format!("eps = {eps}, tail doubled"),
            sp.lower,
            es.upper + tail,
            Verdict::bracketed(sp.upper <= (es.lower + tail) * (1.0 + 1e-9), sp.lower <= (es.upper + tail) * (1.0 + 1e-9)),
        ));
        checks.push(Check::new(
            "spectral profile bound below literal evolving-sets bound",
            format!("eps = {eps}"),
            sp.lower,
            es.upper,
            Verdict::ReportOnly,
        ));
        let rel = mixf.rel;
        let half = spectral::t_mix(sd, eps / 2.0);
        let rtol = 2.0 * spectral::BISECTION_RTOL;
        checks.push(Check::le("relaxation lower bound", format!("eps = {eps}"), rel * eps.ln().abs(), half.value, rtol));
        checks.push(Check::le("TV below sup-norm mixing", format!("eps = {eps}"), half.lower, e.t_mix_linf.value, rtol));
        checks.push(Check::le("sup-norm mixing upper bound", format!("eps = {eps}"), e.t_mix_linf.lower, rel * (nf / eps).ln(), rtol));
        if n >= 3 {
            let linf = spectral::t_mix_linf(sd, eps * nf / (logn * logn));
            checks.push(Check::le("diagonal decay time via sup-norm", format!("eps = {eps}"), e.r_star.lower, linf.value, rtol));
        }
    }

    let t_sp_half_constant = if n >= 3 {
        let sp = table.t_sp_at(0.5);
        sp.upper * c_up / logn.ln()
    } else {
        f64::NAN
    };
    checks.push(Check::report("t_sp(1/2) log-Sobolev constant", "C = t_sp(1/2) c_LS / log log n", t_sp_half_constant));
    if n >= 3 {
        for e in &mixf.per_eps {
            let v = e.r_star.value * c_up * logn / logn.ln();
            checks.push(Check::report("diagonal decay ratio", format!("r_*(eps) c_LS log n / log log n, eps = {}", e.eps), v));
        }
    }
    checks.extend(distortion_checks(sd, c_up));
    InequalityReport { checks, t_sp_half_constant }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_closed_form() {
        assert!((lagrange_min_distance(0.5, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(lagrange_min_distance(0.3, 1e-9).unwrap() < 1e-17);
        assert!(lagrange_min_distance(0.0, 0.5).is_err());
    }

    #[test]
    fn scaled_simplex_projection() {
        let p = project_scaled_simplex(&[0.2, 0.9, -0.3], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_eq!(project_scaled_simplex(&[0.25, 0.75], 1.0), vec![0.25, 0.75]);
    }

    #[test]
    fn simplex_minimum_matches_closed_form() {
        let m = simplex_min_distance(8, 2, 0.3, 1).unwrap();
        let exact = lagrange_min_distance(0.25, 0.3).unwrap();
        assert!((m.value - exact).abs() < 1e-6, "{} vs {exact}", m.value);
    }
}
