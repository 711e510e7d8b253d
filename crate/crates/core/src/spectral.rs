//! Dense spectral analysis of the single-walk generator.
//!
//! The generator is `L(x, y) = r` for every edge `{x, y}` and
//! `L(x, x) = -deg(x) r`, where `r` is the graph's edge rate (`1/d` on a
//! `d`-regular graph, giving unit total rate). The stationary law is uniform.
//! All heat kernels and time functionals are evaluated from one symmetric
//! eigendecomposition of `-L`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Largest vertex count accepted by the dense eigensolver.
pub const DENSE_CAP: usize = 2000;

/// Relative tolerance of every bisection on time functionals.
pub const BISECTION_RTOL: f64 = 1e-6;

/// Number of random restarts used for the log-Sobolev upper bracket.
pub const LOG_SOBOLEV_RESTARTS: usize = 64;

/// Eigen-data of `-L` with `pi`-orthonormal eigenfunctions.
#[derive(Debug, Clone)]
pub struct SpectralData {
    n: usize,
    /// Ascending eigenvalues `0 = λ_1 <= λ_2 <= ... <= λ_n` of `-L`.
    eigenvalues: Vec<f64>,
    /// Euclidean-orthonormal eigenvectors as columns; the `pi`-orthonormal
    /// eigenfunctions are `sqrt(n)` times these columns.
    vectors: DMatrix<f64>,
    /// Squared eigenvector entries, `sq[(x, i)] = vectors[(x, i)]^2`.
    squares: DMatrix<f64>,
    /// The generator `L` itself.
    generator: DMatrix<f64>,
    max_exit_rate: f64,
}

/// The generator matrix `L` of the single walk.
pub fn generator(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let r = g.rate_per_edge();
    let mut l = DMatrix::zeros(n, n);
    for &(u, v) in g.edges() {
        l[(u, v)] = r;
        l[(v, u)] = r;
        l[(u, u)] -= r;
        l[(v, v)] -= r;
    }
    l
}

/// Eigendecomposes the single-walk generator of `g`.
///
/// Fails when `n` exceeds [`DENSE_CAP`] or when the solver output does not
/// satisfy orthonormality and reconstruction to `1e-8`.
pub fn eigendecompose(g: &Graph) -> Result<SpectralData> {
    let n = g.n();
    if n > DENSE_CAP {
        return Err(Error::CapExceeded { what: "dense eigensolve".into(), size: n, cap: DENSE_CAP });
    }
    let l = generator(g);
    let neg = -&l;
    let eig = neg
        .clone()
        .try_symmetric_eigen(1e-14, 0)
        .ok_or_else(|| Error::Numerical(format!("symmetric eigensolver did not converge for n = {n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    // Fix the sign of the constant eigenvector.
    if vectors.column(0).sum() < 0.0 {
        vectors.column_mut(0).neg_mut();
    }
    let scale = l.amax().max(1.0);
    if eigenvalues[0].abs() > 1e-9 * scale {
        return Err(Error::Numerical(format!("bottom eigenvalue {} is not zero", eigenvalues[0])));
    }
    let ortho = (vectors.transpose() * &vectors - DMatrix::identity(n, n)).amax();
    let recon = (&vectors * DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone())) * vectors.transpose() - &neg).amax();
    if ortho > 1e-8 || recon > 1e-8 * scale {
        return Err(Error::Numerical(format!(
            "eigendecomposition check failed: orthonormality error {ortho:.3e}, reconstruction error {recon:.3e}"
        )));
    }
    let squares = vectors.map(|x| x * x);
    Ok(SpectralData { n, eigenvalues, vectors, squares, generator: l, max_exit_rate: g.max_exit_rate() })
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.max_exit_rate
    }

    /// Spectral gap `λ_2`.
    pub fn gap(&self) -> f64 {
        if self.n < 2 {
            f64::INFINITY
        } else {
            self.eigenvalues[1]
        }
    }

    /// Relaxation time `1 / λ_2`.
    pub fn rel(&self) -> f64 {
        1.0 / self.gap()
    }

    /// The `i`-th `pi`-orthonormal eigenfunction (0-based; `i = 0` is constant).
    pub fn eigenfunction(&self, i: usize) -> Vec<f64> {
        let s = (self.n as f64).sqrt();
        self.vectors.column(i).iter().map(|x| x * s).collect()
    }

    /// `⟨f, g⟩_π` for the uniform `pi`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / self.n as f64
    }

    /// Dirichlet form `E(h, h) = ⟨-L h, h⟩_π`.
    pub fn dirichlet(&self, h: &[f64]) -> f64 {
        let hv = DVector::from_column_slice(h);
        -(hv.transpose() * &self.generator * &hv)[(0, 0)] / self.n as f64
    }

    /// `Var_π(h)`.
    pub fn variance(&self, h: &[f64]) -> f64 {
        let n = self.n as f64;
        let m = h.iter().sum::<f64>() / n;
        h.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n
    }

    fn decay(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.n, self.eigenvalues.iter().map(|l| (-l * t).exp()))
    }

    /// Heat kernel `P_t = exp(t L)`.
    pub fn heat_kernel(&self, t: f64) -> DMatrix<f64> {
        assert!(t >= 0.0, "heat kernel needs t >= 0");
        let d = self.decay(t);
        let scaled = DMatrix::from_fn(self.n, self.n, |x, i| self.vectors[(x, i)] * d[i]);
        let p = scaled * self.vectors.transpose();
        debug_assert!(self.maxdiag_gap(&p) < 1e-9, "sup-norm identity violated");
        p
    }

    /// Difference between the two sides of the sup-norm identity
    /// `max_{x,y} |n P_t(x,y) - 1| = max_x n P_t(x,x) - 1`.
    pub fn maxdiag_gap(&self, p: &DMatrix<f64>) -> f64 {
        let n = self.n as f64;
        let lhs = p.iter().map(|v| (n * v - 1.0).abs()).fold(0.0, f64::max);
        let rhs = (0..self.n).map(|x| n * p[(x, x)] - 1.0).fold(f64::NEG_INFINITY, f64::max);
        (lhs - rhs).abs()
    }

    /// Row `P_t(x, ·)`.
    pub fn heat_row(&self, x: usize, t: f64) -> Vec<f64> {
        let d = self.decay(t);
        let coef: Vec<f64> = (0..self.n).map(|i| self.vectors[(x, i)] * d[i]).collect();
        (0..self.n)
            .map(|y| (0..self.n).map(|i| coef[i] * self.vectors[(y, i)]).sum::<f64>())
            .collect()
    }

    /// Diagonal `P_t(x, x)` for every `x`.
    pub fn heat_diagonal(&self, t: f64) -> Vec<f64> {
        let d = self.decay(t);
        (&self.squares * d).iter().copied().collect()
    }

    /// Evolves a row distribution: `mu P_t`.
    pub fn evolve(&self, mu: &[f64], t: f64) -> Vec<f64> {
        let m = DVector::from_column_slice(mu);
        let coef = self.vectors.transpose() * m;
        let d = self.decay(t);
        let c = coef.component_mul(&d);
        (&self.vectors * c).iter().copied().collect()
    }

    /// Worst-start total variation distance `max_x ||P_t(x, ·) - π||_TV`.
    pub fn tv_worst(&self, t: f64) -> f64 {
        let p = self.heat_kernel(t);
        let u = 1.0 / self.n as f64;
        (0..self.n)
            .map(|x| 0.5 * p.row(x).iter().map(|v| (v - u).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max_x n P_t(x, x) - 1`, the sup-norm distance to stationarity.
    pub fn linf_worst(&self, t: f64) -> f64 {
        let n = self.n as f64;
        self.heat_diagonal(t).iter().map(|p| n * p - 1.0).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_x ||P_t(x, ·) - π||_{2,π} = max_x sqrt(n P_{2t}(x, x) - 1)`.
    pub fn l2_worst(&self, t: f64) -> f64 {
        self.linf_worst(2.0 * t).max(0.0).sqrt()
    }

    /// `max_v P_t(v, v) - 1/n`.
    pub fn diag_excess(&self, t: f64) -> f64 {
        let u = 1.0 / self.n as f64;
        self.heat_diagonal(t).iter().map(|p| p - u).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `||mu - π||^2_{2,π}` for a distribution `mu`.
    pub fn l2_sq_distance(&self, mu: &[f64]) -> f64 {
        let n = self.n as f64;
        mu.iter().map(|m| (n * m - 1.0).powi(2)).sum::<f64>() / n
    }
}

/// Solution of a monotone time equation by bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSolve {
    /// Smallest bracket point known to satisfy the threshold.
    pub value: f64,
    /// Largest bracket point known to violate it.
    pub lower: f64,
    /// False when no finite time reached the threshold.
    pub bracketed: bool,
}

/// First time at which a non-increasing function drops to `target` or below.
///
/// Returns `+inf` with `bracketed = false` when doubling up to `1e12` never
/// reaches the target. Panics if the bracket endpoints contradict
/// monotonicity.
pub fn first_time_below(f: impl Fn(f64) -> f64, target: f64) -> TimeSolve {
    if f(0.0) <= target {
        return TimeSolve { value: 0.0, lower: 0.0, bracketed: true };
    }
    let mut hi = 1.0;
    while f(hi) > target {
        hi *= 2.0;
        if hi > 1e12 {
            return TimeSolve { value: f64::INFINITY, lower: hi, bracketed: false };
        }
    }
    let mut lo = if hi == 1.0 { 0.0 } else { hi / 2.0 };
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    assert!(f(lo) > target && f(hi) <= target, "bisected quantity is not monotone on [{lo}, {hi}]");
    TimeSolve { value: hi, lower: lo, bracketed: true }
}

/// Time functionals at one accuracy `eps`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsFunctionals {
    pub eps: f64,
    /// Total-variation mixing time from the worst start.
    pub t_mix: TimeSolve,
    /// L2 mixing time from the worst start.
    pub t_mix_l2: TimeSolve,
    /// Sup-norm mixing time `inf{t : max_x n P_t(x,x) - 1 <= eps}`.
    pub t_mix_linf: TimeSolve,
    /// Diagonal decay below `eps / (log n)^2`.
    pub r_star: TimeSolve,
    /// Diagonal decay below `eps / log n`.
    pub t_star: TimeSolve,
    /// Diagonal decay below `eps / t_star`.
    pub s_star: TimeSolve,
}

/// Relaxation time, per-accuracy functionals and the log-Sobolev bracket.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixFunctionals {
    pub rel: f64,
    pub per_eps: Vec<EpsFunctionals>,
    pub c_ls: LogSobolevBracket,
    /// Names of functionals whose bisection never bracketed the threshold.
    pub unbracketed: Vec<String>,
}

/// Computes every time functional at each accuracy in `eps_list`.
pub fn mixing_functionals(sd: &SpectralData, eps_list: &[f64], seed: u64) -> Result<MixFunctionals> {
    let mut per_eps = Vec::new();
    let mut unbracketed = Vec::new();
    let logn = (sd.n() as f64).ln();
    for &eps in eps_list {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("accuracy {eps} outside (0, 1)")));
        }
        let e = eps_functionals(sd, eps, logn);
        for (name, ts) in [
            ("t_mix", e.t_mix),
            ("t_mix_l2", e.t_mix_l2),
            ("t_mix_linf", e.t_mix_linf),
            ("r_star", e.r_star),
            ("t_star", e.t_star),
            ("s_star", e.s_star),
        ] {
            if !ts.bracketed {
                unbracketed.push(format!("{name}({eps})"));
            }
        }
        per_eps.push(e);
    }
    Ok(MixFunctionals {
        rel: sd.rel(),
        per_eps,
        c_ls: log_sobolev_bracket(sd, LOG_SOBOLEV_RESTARTS, seed),
        unbracketed,
    })
}

fn eps_functionals(sd: &SpectralData, eps: f64, logn: f64) -> EpsFunctionals {
    let t_star = t_star(sd, eps);
    let s_target = if t_star.value > 0.0 { eps / t_star.value } else { f64::INFINITY };
    EpsFunctionals {
        eps,
        t_mix: t_mix(sd, eps),
        t_mix_l2: first_time_below(|t| sd.l2_worst(t), eps),
        t_mix_linf: t_mix_linf(sd, eps),
        r_star: first_time_below(|t| sd.diag_excess(t), eps / (logn * logn)),
        t_star,
        s_star: first_time_below(|t| sd.diag_excess(t), s_target),
    }
}

/// Total-variation mixing time from the worst start.
pub fn t_mix(sd: &SpectralData, eps: f64) -> TimeSolve {
    first_time_below(|t| sd.tv_worst(t), eps)
}

/// Sup-norm mixing time.
pub fn t_mix_linf(sd: &SpectralData, eps: f64) -> TimeSolve {
    first_time_below(|t| sd.linf_worst(t), eps)
}

/// `inf{t : max_v P_t(v,v) - 1/n <= eps / log n}`.
pub fn t_star(sd: &SpectralData, eps: f64) -> TimeSolve {
    first_time_below(|t| sd.diag_excess(t), eps / (sd.n() as f64).ln())
}

/// `inf{t : max_v P_t(v,v) - 1/n <= eps / t_star(eps)}`.
pub fn s_star(sd: &SpectralData, eps: f64) -> TimeSolve {
    let ts = t_star(sd, eps).value;
    let target = if ts > 0.0 { eps / ts } else { f64::INFINITY };
    first_time_below(|t| sd.diag_excess(t), target)
}

/// Two-sided bracket on the log-Sobolev constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogSobolevBracket {
    /// `gap (1 - 2/n) / log(n - 1)` (or `gap / 2` for `n = 2`).
    pub lower: f64,
    /// Minimum of the numeric search and `gap / 2`.
    pub upper: f64,
    /// Best ratio found by the numeric search alone.
    pub search_best: f64,
}

/// `Ent_π(f) = E_π[f log(f / E_π f)]` for positive `f`.
pub fn entropy(f: &[f64]) -> f64 {
    let n = f.len() as f64;
    let m = f.iter().sum::<f64>() / n;
    f.iter().map(|&x| if x > 0.0 { x * (x / m).ln() } else { 0.0 }).sum::<f64>() / n
}

/// Brackets `c_LS = inf E(h,h) / Ent_π(h^2)`.
///
/// The lower end is the universal finite-chain bound in terms of the gap and
/// the smallest stationary mass. The upper end is the best value found by
/// gradient descent over `h = exp(y)` from `restarts` starting points, capped
/// by `gap / 2`, which is the limit of the ratio along `h = 1 + s f_2`.
pub fn log_sobolev_bracket(sd: &SpectralData, restarts: usize, seed: u64) -> LogSobolevBracket {
    let n = sd.n();
    let gap = sd.gap();
    let lower = if n <= 2 { gap / 2.0 } else { gap * (1.0 - 2.0 / n as f64) / ((n - 1) as f64).ln() };
    let f2 = if n >= 2 { sd.eigenfunction(1) } else { vec![0.0; n] };
    let mut best = f64::INFINITY;
    for r in 0..restarts {
        let mut rng = rng::stream(seed, r as u64);
        let scale = [0.5, 1.0, 2.0, 4.0][r % 4];
        let y0: Vec<f64> = match (r / 4) % 3 {
            0 => (0..n).map(|_| scale * noise(&mut rng)).collect::<Vec<f64>>(),
            1 => {
                let spike = rng.random_range(0..n);
                (0..n)
                    .map(|v| if v == spike { 2.0 * scale } else { 0.0 } + 0.05 * noise(&mut rng))
                    .collect()
            }
            _ => f2.iter().map(|x| scale * x + 0.05 * noise(&mut rng)).collect(),
        };
        if let Some(v) = descend_log_sobolev(sd, y0) {
            best = best.min(v);
        }
    }
    LogSobolevBracket { lower, upper: best.min(gap / 2.0), search_best: best }
}

fn noise(rng: &mut rng::TrialRng) -> f64 {
    StandardNormal.sample(rng)
}

fn ls_ratio_and_grad(sd: &SpectralData, y: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = y.len() as f64;
    let h: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    let h2: Vec<f64> = h.iter().map(|x| x * x).collect();
    let ent = entropy(&h2);
    if !(ent > 1e-14) {
        return None;
    }
    let hv = DVector::from_column_slice(&h);
    let lh = -(sd.generator() * &hv);
    let e = hv.dot(&lh) / n;
    let m = h2.iter().sum::<f64>() / n;
    let ratio = e / ent;
    let grad = (0..y.len())
        .map(|x| {
            let ge = 2.0 * lh[x] / n;
            let gent = 2.0 * h[x] * (h2[x] / m).ln() / n;
            (ge * ent - e * gent) / (ent * ent) * h[x]
        })
        .collect();
    Some((ratio, grad))
}

fn descend_log_sobolev(sd: &SpectralData, mut y: Vec<f64>) -> Option<f64> {
    let (mut val, mut grad) = ls_ratio_and_grad(sd, &y)?;
    let mut step = 1.0;
    for _ in 0..2000 {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2 < 1e-24 {
            break;
        }
        let mut accepted = false;
        while step > 1e-12 {
            let trial: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            if let Some((tv, tg)) = ls_ratio_and_grad(sd, &trial) {
                if tv <= val - 1e-4 * step * gnorm2 {
                    let mean = trial.iter().sum::<f64>() / trial.len() as f64;
                    y = trial.iter().map(|v| v - mean).collect();
                    val = tv;
                    grad = tg;
                    step *= 2.0;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Some(val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph;

    #[test]
    fn k4_gap_and_heat_kernel() {
        let sd = eigendecompose(&graph::complete(4).unwrap()).unwrap();
        assert!((sd.gap() - 4.0 / 3.0).abs() < 1e-12);
        let p0 = sd.heat_kernel(0.0);
        assert!((p0 - DMatrix::identity(4, 4)).amax() < 1e-12);
        // P_t(x,x) = 1/4 + 3/4 e^{-4t/3} on K4.
        let t = 0.7;
        let diag = sd.heat_diagonal(t);
        assert!((diag[0] - (0.25 + 0.75 * (-4.0 * t / 3.0_f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn bisection_finds_threshold() {
        let ts = first_time_below(|t| (-t).exp(), 0.25);
        assert!((ts.value - 4.0_f64.ln()).abs() < 1e-5);
        assert!(ts.bracketed);
        assert_eq!(first_time_below(|_| 0.1, 0.5).value, 0.0);
        assert!(!first_time_below(|_| 1.0, 0.5).bracketed);
    }

    #[test]
    fn constant_is_bottom_eigenfunction() {
        let sd = eigendecompose(&graph::cycle(7).unwrap()).unwrap();
        let f = sd.eigenfunction(0);
        assert!(f.iter().all(|x| (x - 1.0).abs() < 1e-10));
        assert!(sd.eigenvalues()[0].abs() < 1e-12);
    }

    #[test]
    fn log_sobolev_bracket_is_tight_on_complete_graph() {
        // For K_n with rate 1/(n-1) the universal lower bound is attained.
        let sd = eigendecompose(&graph::complete(4).unwrap()).unwrap();
        let b = log_sobolev_bracket(&sd, 32, 1);
        let exact = (4.0 / 3.0) * 0.5 / 3.0_f64.ln();
        assert!((b.lower - exact).abs() < 1e-12);
        assert!(b.upper >= b.lower - 1e-12);
        assert!((b.upper - exact).abs() < 1e-4, "upper {} vs exact {exact}", b.upper);
    }
}
