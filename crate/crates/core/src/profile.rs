//! Spectral and isoperimetric profiles and their mixing-time integrals.
//!
//! `Λ(δ)` is the minimum of `E(h,h) / Var_π(h)` over non-constant `h`
//! supported on a set of measure at most `δ`, and `Φ(δ)` is the minimum edge
//! conductance `Q(A, A^c) / π(A)` over sets with `π(A) <= δ`. Both are step
//! functions of `δ` that only change at multiples of `1/n`, so they are stored
//! per support size `m = ⌊δ n⌋`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::SpectralData;

/// Largest vertex count for exhaustive subset enumeration.
pub const EXACT_PROFILE_CAP: usize = 20;

/// Grid ratio used on the first pass of every profile integral.
pub const GRID_RATIO: f64 = 1.1;

/// Relative change below which integral refinement stops.
pub const REFINE_RTOL: f64 = 0.01;

/// How a [`ProfileTable`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMethod {
    /// Exhaustive enumeration of supports and sets.
    Exact,
    /// Gap-based lower brackets and sweep-cut upper brackets.
    Heuristic,
}

/// A closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn point(v: f64) -> Self {
        Bracket { lower: v, upper: v }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lower - tol && v <= self.upper + tol
    }
}

/// One grid point of the profile table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub delta: f64,
    pub lambda: Bracket,
    pub phi: Bracket,
    /// Both Cheeger-type inequalities hold for the brackets at this point.
    pub cheeger_ok: bool,
}

/// Profiles of one graph and the derived mixing-time integrals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileTable {
    pub method: ProfileMethod,
    pub n: usize,
    pub eps: f64,
    pub gap: f64,
    pub rel: f64,
    pub max_exit_rate: f64,
    /// `lambda_by_size[m - 1]` brackets `Λ` for supports of size at most `m`.
    pub lambda_by_size: Vec<Bracket>,
    /// `phi_by_size[m - 1]` brackets `Φ` over sets of size at most `m`.
    pub phi_by_size: Vec<Bracket>,
    pub grid: Vec<ProfilePoint>,
    /// `∫_{4/n}^{4/ε} 2 dδ / (δ Λ(δ))`, bracketed.
    pub t_sp: Bracket,
    /// `max|L(x,x)| ∫_{4/n}^{min(4/ε, 1/2)} 4 dδ / (δ Φ(δ)^2) + rel log(8/ε)`.
    pub t_evolving_sets: Bracket,
}

impl ProfileTable {
    fn size_of(&self, delta: f64) -> usize {
        (delta * self.n as f64 + 1e-9).floor().max(0.0) as usize
    }

    /// Bracket on `Λ(δ)`; `+inf` below `1/n`, the gap at and above `1`.
    pub fn lambda(&self, delta: f64) -> Bracket {
        let m = self.size_of(delta);
        if m == 0 {
            Bracket::point(f64::INFINITY)
        } else if m >= self.n {
            Bracket::point(self.gap)
        } else {
            self.lambda_by_size[m - 1]
        }
    }

    /// Bracket on `Φ(δ)`; `+inf` below `1/n` and `0` at and above `1`.
    pub fn phi(&self, delta: f64) -> Bracket {
        let m = self.size_of(delta);
        if m == 0 {
            Bracket::point(f64::INFINITY)
        } else if m >= self.n {
            Bracket::point(0.0)
        } else {
            self.phi_by_size[m - 1]
        }
    }

    /// `t_sp(ε)` bracketed. A smaller `Λ` gives a larger integral, so the
    /// lower bracket of `Λ` yields the upper bracket of the integral.
    pub fn t_sp_at(&self, eps: f64) -> Bracket {
        let a = 4.0 / self.n as f64;
        let b = 4.0 / eps;
        Bracket {
            lower: refine_integral(self, a, b, |t, d| 2.0 / (d * t.lambda(d).upper)),
            upper: refine_integral(self, a, b, |t, d| 2.0 / (d * t.lambda(d).lower)),
        }
    }

    /// `t_evolving-sets(ε)` bracketed.
    pub fn t_evolving_sets_at(&self, eps: f64) -> Bracket {
        let a = 4.0 / self.n as f64;
        let b = (4.0 / eps).min(0.5);
        let tail = if eps <= 8.0 { self.rel * (8.0 / eps).ln() } else { 0.0 };
        let m = self.max_exit_rate;
        Bracket {
            lower: m * refine_integral(self, a, b, |t, d| 4.0 / (d * t.phi(d).upper.powi(2))) + tail,
            upper: m * refine_integral(self, a, b, |t, d| 4.0 / (d * t.phi(d).lower.powi(2))) + tail,
        }
    }

    /// True when every grid point satisfies the Cheeger sandwich.
    pub fn cheeger_holds(&self) -> bool {
        self.grid.iter().all(|p| p.cheeger_ok)
    }

    /// True when the upper and lower `Λ` brackets are non-increasing in size.
    pub fn lambda_monotone(&self) -> bool {
        self.lambda_by_size.windows(2).all(|w| {
            w[1].lower <= w[0].lower * (1.0 + 1e-12) + 1e-15 && w[1].upper <= w[0].upper * (1.0 + 1e-12) + 1e-15
        })
    }
}

/// Computes the profile table, by enumeration when `n <= 20`.
pub fn profiles(g: &Graph, sd: &SpectralData, eps: f64) -> Result<ProfileTable> {
    let method = if g.n() <= EXACT_PROFILE_CAP { ProfileMethod::Exact } else { ProfileMethod::Heuristic };
    profiles_with(g, sd, eps, method)
}

/// Computes the profile table with an explicit method.
pub fn profiles_with(g: &Graph, sd: &SpectralData, eps: f64, method: ProfileMethod) -> Result<ProfileTable> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("accuracy {eps} must be positive")));
    }
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidArgument("profiles need at least two vertices".into()));
    }
    if method == ProfileMethod::Exact && n > EXACT_PROFILE_CAP {
        return Err(Error::CapExceeded { what: "profile enumeration".into(), size: n, cap: EXACT_PROFILE_CAP });
    }
    let (lambda_by_size, phi_by_size) = match method {
        ProfileMethod::Exact => {
            let (l, p) = exact_profiles(g, sd);
            (l.into_iter().map(Bracket::point).collect(), p.into_iter().map(Bracket::point).collect())
        }
        ProfileMethod::Heuristic => heuristic_profiles(g, sd),
    };
    let mut table = ProfileTable {
        method,
        n,
        eps,
        gap: sd.gap(),
        rel: sd.rel(),
        max_exit_rate: sd.max_exit_rate(),
        lambda_by_size,
        phi_by_size,
        grid: Vec::new(),
        t_sp: Bracket::point(0.0),
        t_evolving_sets: Bracket::point(0.0),
    };
    let a = 4.0 / n as f64;
    let b = 4.0 / eps;
    table.grid = grid_points(&table, a, b, GRID_RATIO)
        .into_iter()
        .map(|delta| {
            let lambda = table.lambda(delta);
            let phi = table.phi(delta);
            let cheeger_ok = cheeger_ok(lambda, phi, delta, table.max_exit_rate);
            ProfilePoint { delta, lambda, phi, cheeger_ok }
        })
        .collect();
    table.t_sp = table.t_sp_at(eps);
    table.t_evolving_sets = table.t_evolving_sets_at(eps);
    Ok(table)
}

/// Checks `Φ²/(2M) <= Λ <= Φ/(1-δ)` bracket-wise; only meaningful for `δ < 1`.
fn cheeger_ok(lambda: Bracket, phi: Bracket, delta: f64, max_exit: f64) -> bool {
    if delta >= 1.0 || !phi.lower.is_finite() || !lambda.lower.is_finite() {
        return true;
    }
    let tol = 1e-9;
    phi.lower.powi(2) / (2.0 * max_exit) <= lambda.upper * (1.0 + tol) + tol
        && lambda.lower <= phi.upper / (1.0 - delta) * (1.0 + tol) + tol
}

/// Geometric points between `a` and `b` with ratio `ratio`, merged with every
/// breakpoint `m / n` inside the range.
fn grid_points(t: &ProfileTable, a: f64, b: f64, ratio: f64) -> Vec<f64> {
    if !(b > a) {
        return Vec::new();
    }
    let mut pts = vec![a];
    let mut x = a;
    while x * ratio < b {
        x *= ratio;
        pts.push(x);
    }
    pts.push(b);
    for m in 1..=t.n {
        let d = m as f64 / t.n as f64;
        if d > a && d < b {
            pts.push(d);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * q.abs());
    pts
}

/// Integral of `f` over `[a, b]` on the grid. Each cell integrates
/// `δ f(δ)` at the geometric midpoint against `dδ / δ` in closed form, which is
/// exact when `δ f(δ)` is constant on the cell.
fn grid_integral<F: Fn(&ProfileTable, f64) -> f64>(t: &ProfileTable, a: f64, b: f64, ratio: f64, f: &F) -> f64 {
    let pts = grid_points(t, a, b, ratio);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = (lo * hi).sqrt();
        let v = f(t, mid) * mid;
        if v.is_infinite() {
            return f64::INFINITY;
        }
        if v > 0.0 {
            total += v * (hi / lo).ln();
        }
    }
    total
}

fn refine_integral<F: Fn(&ProfileTable, f64) -> f64>(t: &ProfileTable, a: f64, b: f64, f: F) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut ratio = GRID_RATIO;
    let mut prev = grid_integral(t, a, b, ratio, &f);
    for _ in 0..12 {
        ratio = ratio.sqrt();
        let next = grid_integral(t, a, b, ratio, &f);
        let change = if next.is_finite() && prev.is_finite() {
            (next - prev).abs() / next.abs().max(1e-300)
        } else {
            0.0
        };
        prev = next;
        if change < REFINE_RTOL {
            break;
        }
    }
    prev
}

/// Smallest generalized Rayleigh quotient `E(h,h) / Var_π(h)` over `h`
/// supported on `support`.
pub fn support_lambda(neg_l: &DMatrix<f64>, support: &[usize]) -> f64 {
    let n = neg_l.nrows();
    let m = support.len();
    if m == 0 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    let mf = m as f64;
    if m == n {
        return f64::INFINITY;
    }
    // B = (I - J/n)/n restricted to the support has inverse square root
    // sqrt(n) (I + c J/m) with c = 1/sqrt(1 - m/n) - 1.
    let c = 1.0 / (1.0 - mf / nf).sqrt() - 1.0;
    let binv = DMatrix::from_fn(m, m, |i, j| nf.sqrt() * (if i == j { 1.0 } else { 0.0 } + c / mf));
    let a = DMatrix::from_fn(m, m, |i, j| neg_l[(support[i], support[j])] / nf);
    let mat = &binv * a * &binv;
    let sym = (&mat + mat.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Exact `Λ_m` and `Φ_m` for `m = 1..n-1` by enumerating all subsets.
fn exact_profiles(g: &Graph, sd: &SpectralData) -> (Vec<f64>, Vec<f64>) {
    let n = g.n();
    let neg_l = -sd.generator();
    let rate = g.rate_per_edge();
    let mut lam = vec![f64::INFINITY; n];
    let mut phi = vec![f64::INFINITY; n];
    let mut support = Vec::with_capacity(n);
    for mask in 1u32..((1u32 << n) - 1) {
        let m = mask.count_ones() as usize;
        support.clear();
        support.extend((0..n).filter(|&v| mask & (1 << v) != 0));
        let l = support_lambda(&neg_l, &support);
        if l < lam[m] {
            lam[m] = l;
        }
        let boundary = g.edges().iter().filter(|&&(u, v)| ((mask >> u) & 1) != ((mask >> v) & 1)).count();
        let p = rate * boundary as f64 / m as f64;
        if p < phi[m] {
            phi[m] = p;
        }
    }
    let mut lam_out = Vec::with_capacity(n - 1);
    let mut phi_out = Vec::with_capacity(n - 1);
    let (mut bl, mut bp) = (f64::INFINITY, f64::INFINITY);
    for m in 1..n {
        bl = bl.min(lam[m]);
        bp = bp.min(phi[m]);
        lam_out.push(bl);
        phi_out.push(bp);
    }
    (lam_out, phi_out)
}

/// Sweep orders of the first few non-trivial eigenvectors, both directions.
fn sweep_orders(sd: &SpectralData) -> Vec<Vec<usize>> {
    let n = sd.n();
    let mut orders = Vec::new();
    for i in 1..n.min(6) {
        let f = sd.eigenfunction(i);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
        let mut rev = idx.clone();
        rev.reverse();
        orders.push(idx);
        orders.push(rev);
    }
    orders
}

/// Brackets for large graphs: `Λ >= gap`, `Φ >= (1-δ) gap`, and sweep-cut
/// upper bounds for both, combined with `Λ <= Φ / (1-δ)`.
fn heuristic_profiles(g: &Graph, sd: &SpectralData) -> (Vec<Bracket>, Vec<Bracket>) {
    let n = g.n();
    let gap = sd.gap();
    let rate = g.rate_per_edge();
    let neg_l = -sd.generator();
    let orders = sweep_orders(sd);
    let mut phi_hi = vec![f64::INFINITY; n];
    let mut lam_hi = vec![f64::INFINITY; n];
    // Sizes at which a full support eigenproblem is solved.
    let mut ladder: Vec<usize> = Vec::new();
    let mut s = 1usize;
    while s < n {
        ladder.push(s);
        s = (s * 5 / 4).max(s + 1);
    }
    let ladder_cap = 200;
    for order in &orders {
        let mut inside = vec![false; n];
        let mut boundary = 0i64;
        for (j, &v) in order.iter().enumerate().take(n - 1) {
            for &u in g.neighbors(v) {
                if inside[u] {
                    boundary -= 1;
                } else {
                    boundary += 1;
                }
            }
            inside[v] = true;
            let m = j + 1;
            let p = rate * boundary as f64 / m as f64;
            phi_hi[m] = phi_hi[m].min(p);
            if m <= ladder_cap && ladder.binary_search(&m).is_ok() {
                let l = support_lambda(&neg_l, &order[..m]);
                lam_hi[m] = lam_hi[m].min(l);
            }
        }
    }
    let mut lam = Vec::with_capacity(n - 1);
    let mut phi = Vec::with_capacity(n - 1);
    let (mut bl, mut bp) = (f64::INFINITY, f64::INFINITY);
    for m in 1..n {
        let delta = m as f64 / n as f64;
        bp = bp.min(phi_hi[m]);
        bl = bl.min(lam_hi[m]).min(bp / (1.0 - delta));
        let lam_lower = gap.min(bl);
        lam.push(Bracket { lower: lam_lower, upper: bl });
        phi.push(Bracket { lower: ((1.0 - delta) * gap).min(bp), upper: bp });
    }
    (lam, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{graph, spectral};

    #[test]
    fn k4_single_vertex_conductance_is_one() {
        let g = graph::complete(4).unwrap();
        let sd = spectral::eigendecompose(&g).unwrap();
        let t = profiles(&g, &sd, 0.25).unwrap();
        assert!((t.phi(0.25).lower - 1.0).abs() < 1e-12);
        assert!(t.lambda_monotone());
        assert!(t.cheeger_holds());
    }

    #[test]
    fn lambda_at_full_mass_is_gap() {
        let g = graph::cycle(6).unwrap();
        let sd = spectral::eigendecompose(&g).unwrap();
        let t = profiles(&g, &sd, 0.1).unwrap();
        assert_eq!(t.lambda(1.0).lower, sd.gap());
        assert!(t.lambda(5.0 / 6.0).lower >= sd.gap() - 1e-12);
        assert_eq!(t.lambda(0.1).lower, f64::INFINITY);
    }

    #[test]
    fn empty_range_integrals_vanish() {
        let g = graph::complete(4).unwrap();
        let sd = spectral::eigendecompose(&g).unwrap();
        // 4/n = 1 and 4/eps = 1/2 leave an empty range.
        let t = profiles(&g, &sd, 8.0).unwrap();
        assert_eq!(t.t_sp.upper, 0.0);
    }
}
