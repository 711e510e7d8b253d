//! Round-analysis quantities and negative-association tests.
//!
//! Deterministic quantities (Nice sets, the sets `Q(S)`, Chernoff exponents)
//! are computed exactly from the heat kernel. Probabilistic bounds are
//! compared against Monte Carlo frequencies with a three-sigma allowance and
//! a minimum number of conditioning hits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::Verdict;
use crate::error::{Error, Result};
use crate::exact::{self, ProcessKind};
use crate::graph::{Graph, OutAdjacency};
use crate::rng;
use crate::simulate::{positions_at, stream_rate, Mode, Particles};
use crate::spectral::{self, SpectralData};
use crate::stats::{self, Estimate};

/// Conditional estimates based on fewer hits are inconclusive.
pub const MIN_HITS: usize = 50;

/// Allowance, in standard errors, for Monte Carlo comparisons.
pub const SIGMAS: f64 = 3.0;

/// Largest `n` for which the `Q(a)` table is tabulated.
pub const Q_TABLE_CAP: usize = 16;

fn validate_set(n: usize, s: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &v in s {
        if v >= n {
            return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::InvalidArgument(format!("vertex {v} repeated")));
        }
    }
    Ok(())
}

/// `P_T(u, S)` for every `u`.
pub fn hit_mass(sd: &SpectralData, s: &[usize], t: f64) -> Vec<f64> {
    let p = sd.heat_kernel(t);
    (0..sd.n()).map(|u| s.iter().map(|&w| p[(u, w)]).sum()).collect()
}

/// `Σ_{u : v → u} mass[u]` for every `v`.
pub fn out_sums(adj: &dyn OutAdjacency, mass: &[f64]) -> Vec<f64> {
    (0..mass.len()).map(|v| adj.out_of(v).iter().map(|&u| mass[u]).sum()).collect()
}

/// Nice set of `S` at time `T` with its counting bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NiceReport {
    pub s: Vec<usize>,
    pub t: f64,
    pub e_t: Vec<f64>,
    /// `d̂ (1/32 + |S|/n)`.
    pub threshold: f64,
    pub nice: Vec<usize>,
    pub complement_size: usize,
    /// `(1/32 + |S|/n)^-1 (d_max_in / d̂) |S|`.
    pub counting_bound: f64,
    pub counting_holds: bool,
    /// `Pr_{π_S}[X_T ∈ Nice(S)]`; `NaN` for empty `S`.
    pub pi_s_hit: f64,
    /// `π(Nice(S))`.
    pub pi_nice: f64,
}

/// Computes `e_T(v, S)`, `Nice(S)` and the counting bound exactly.
pub fn nice_set(adj: &dyn OutAdjacency, sd: &SpectralData, s: &[usize], t: f64) -> Result<NiceReport> {
    let n = adj.base_graph().n();
    if sd.n() != n {
        return Err(Error::InvalidArgument("spectral data belongs to another graph".into()));
    }
    validate_set(n, s)?;
    let frac = 1.0 / 32.0 + s.len() as f64 / n as f64;
    let d_hat = adj.out_degree() as f64;
    let p = sd.heat_kernel(t);
    let mass: Vec<f64> = (0..n).map(|u| s.iter().map(|&w| p[(u, w)]).sum()).collect();
    let e_t = out_sums(adj, &mass);
    let threshold = d_hat * frac;
    let nice: Vec<usize> = (0..n).filter(|&v| e_t[v] < threshold).collect();
    let complement_size = n - nice.len();
    let counting_bound = s.len() as f64 * adj.max_in_degree() as f64 / (frac * d_hat);
    let mut in_nice = vec![false; n];
    for &v in &nice {
        in_nice[v] = true;
    }
    let pi_s_hit = if s.is_empty() {
        f64::NAN
    } else {
        s.iter().map(|&w| (0..n).filter(|&v| in_nice[v]).map(|v| p[(w, v)]).sum::<f64>()).sum::<f64>() / s.len() as f64
    };
    Ok(NiceReport {
        s: s.to_vec(),
        t,
        e_t,
        threshold,
        pi_nice: nice.len() as f64 / n as f64,
        nice,
        complement_size,
        counting_holds: complement_size as f64 <= counting_bound,
        counting_bound,
        pi_s_hit,
    })
}

/// `(1/d) log L(λ, θ, d, r) = -λθ + (e^λ - 1)(1/32 + r/n)`.
pub fn chernoff_exponent(lambda: f64, theta: f64, r_frac: f64) -> f64 {
    -lambda * theta + lambda.exp_m1() * (1.0 / 32.0 + r_frac)
}

/// `L(λ, θ, d, r)`.
pub fn chernoff_bound(lambda: f64, theta: f64, d: f64, r_frac: f64) -> f64 {
    (d * chernoff_exponent(lambda, theta, r_frac)).exp()
}

/// Minimiser of the exponent over `λ ≥ 0`: `log(θ / (1/32 + r/n))` when
/// positive, else `0` (the vacuous bound).
pub fn optimal_lambda(theta: f64, r_frac: f64) -> f64 {
    (theta / (1.0 / 32.0 + r_frac)).ln().max(0.0)
}

/// One point of the exponent-sign grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPoint {
    pub k_frac: f64,
    pub r_frac: f64,
    pub theta: f64,
    pub exponent: f64,
}

/// Exponent at `λ = 0.05`, `θ = 9/16 - k/2n` over a `side × side` grid of
/// `k/n ∈ [0, 1/2]` and `|R|/n ∈ [0, 1/2 - k/2n]`.
pub fn exponent_sign_grid(side: usize) -> Vec<ExponentPoint> {
    let lambda = 0.05;
    let steps = side.max(2) - 1;
    let mut out = Vec::with_capacity(side * side);
    for i in 0..=steps {
        let k_frac = 0.5 * i as f64 / steps as f64;
        let theta = 9.0 / 16.0 - k_frac / 2.0;
        let r_max = 0.5 - k_frac / 2.0;
        for j in 0..=steps {
            let r_frac = r_max * j as f64 / steps as f64;
            out.push(ExponentPoint { k_frac, r_frac, theta, exponent: chernoff_exponent(lambda, theta, r_frac) });
        }
    }
    out
}

/// Empirical `Pr[v ∈ BN(S)_θ | v ∈ N(S)]` at one vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnRow {
    pub v: usize,
    pub hits: usize,
    pub frequency: Estimate,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnReport {
    pub theta: f64,
    pub lambda: f64,
    /// `L(λ*, θ, d̂, |S|)`.
    pub bound: f64,
    pub rows: Vec<BnRow>,
    pub verdict: Verdict,
}

/// Simulates the exclusion process from `S` for time `T` and compares the
/// frequency of many occupied out-neighbours at Nice vertices with the
/// Chernoff bound at the optimal `λ`.
pub fn bn_gn_estimate(
    adj: &dyn OutAdjacency,
    sd: &SpectralData,
    s: &[usize],
    t: f64,
    theta: f64,
    trials: usize,
    seed: u64,
) -> Result<BnReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("theta {theta} outside (0, 1)")));
    }
    let g = adj.base_graph();
    let n = g.n();
    let nice = nice_set(adj, sd, s, t)?;
    let d_hat = adj.out_degree() as f64;
    let r_frac = s.len() as f64 / n as f64;
    let lambda = optimal_lambda(theta, r_frac);
    let bound = chernoff_bound(lambda, theta, d_hat, r_frac);
    let outs: Vec<Vec<usize>> = (0..n).map(|v| adj.out_of(v)).collect();
    let counts: Vec<(Vec<usize>, Vec<usize>)> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let pos = positions_at(g, Mode::Standard, s, &[t], rng::stream(seed, i as u64))?;
            let mut occ = vec![false; n];
            for &v in &pos[0] {
                occ[v] = true;
            }
            let mut hit = vec![0; n];
            let mut bad = vec![0; n];
            for &v in &nice.nice {
                if occ[v] {
                    hit[v] += 1;
                    let c = outs[v].iter().filter(|&&u| occ[u]).count();
                    if c as f64 > theta * d_hat {
                        bad[v] += 1;
                    }
                }
            }
            Ok((hit, bad))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &v in &nice.nice {
        let hits: usize = counts.iter().map(|c| c.0[v]).sum();
        let bads: usize = counts.iter().map(|c| c.1[v]).sum();
        let frequency = stats::proportion(bads, hits);
        let verdict = if hits < MIN_HITS {
            Verdict::Inconclusive
        } else {
            Verdict::from_bool(frequency.mean <= bound + SIGMAS * frequency.stderr)
        };
        rows.push(BnRow { v, hits, frequency, verdict });
    }
    let verdict = combine(rows.iter().map(|r| r.verdict));
    Ok(BnReport { theta, lambda, bound, rows, verdict })
}

/// Fails if anything fails, passes if something passes, else inconclusive.
pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut any_pass = false;
    let mut any_inconclusive = false;
    for v in verdicts {
        match v {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Pass => any_pass = true,
            Verdict::Inconclusive => any_inconclusive = true,
            Verdict::ReportOnly => {}
        }
    }
    if any_pass && !any_inconclusive {
        Verdict::Pass
    } else if any_pass || any_inconclusive {
        Verdict::Inconclusive
    } else {
        Verdict::ReportOnly
    }
}

/// Joint trajectory statistics from a full interchange run on `[0, T]`.
struct QTrial {
    /// Final position of each starting vertex.
    map: Vec<usize>,
    /// `interacted[a * n + x]`: the particles from `a` and `x` interacted by `t_*`.
    interacted: Vec<bool>,
}

fn q_trial(g: &Graph, t_star: f64, t_big: f64, seed: u64, index: u64) -> QTrial {
    use rand::Rng;
    use rand_distr::{Distribution, Exp};
    let n = g.n();
    let mut rng = rng::stream(seed, index);
    let clock = Exp::new(stream_rate(g, Mode::Modified)).expect("positive rate");
    let edges = g.edges();
    let mut p = Particles::full(n);
    let mut interacted = vec![false; n * n];
    let mut s = clock.sample(&mut rng);
    while s <= t_big {
        let (x, y) = edges[rng.random_range(0..edges.len())];
        let coin: bool = rng.random();
        if s <= t_star {
            let (a, b) = (p.occ[x], p.occ[y]);
            interacted[a * n + b] = true;
            interacted[b * n + a] = true;
        }
        if coin {
            p.swap(x, y);
        }
        s += clock.sample(&mut rng);
    }
    QTrial { map: p.pos, interacted }
}

/// Estimated `Q(a, u, x, v, ε)` tables and the black-weight statistic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QWeightReport {
    pub eps: f64,
    pub t_star: f64,
    pub t_big: f64,
    /// Largest estimated `Q` among cells with at least [`MIN_HITS`] conditioning hits.
    pub max_q: Estimate,
    /// Cell `(a, u, x, v)` of the largest estimate.
    pub argmax: (usize, usize, usize, usize),
    /// `max_{z,z'} P_{t_*}(z, z')`.
    pub p_max: f64,
    pub verdict: Verdict,
    /// Mean of `Σ_a 1{a ∈ B} Q(a)` over uniform black sets at the argmax
    /// `(u, x, v)` cell.
    pub weighted_mean: Estimate,
    /// `((k - 1) / n) Σ_a Q(a)` at the same cell.
    pub weighted_predicted: f64,
    /// Frequency of `max_{u,x,v} Σ_a 1{a ∈ B} Q(a) > k/n + 1/16`; report only.
    pub exceedance: f64,
}

/// Monte Carlo tables of `Q(a)` on a small graph, the bound by the largest
/// heat-kernel entry at `t_*(ε)`, and the black-weight statistic for
/// stationary black sets of size `k - 1`.
pub fn q_weight_checks(g: &Graph, sd: &SpectralData, k: usize, eps: f64, t_big: f64, trials: usize, seed: u64) -> Result<QWeightReport> {
    let n = g.n();
    if n > Q_TABLE_CAP {
        return Err(Error::CapExceeded { what: "Q(a) table".into(), size: n, cap: Q_TABLE_CAP });
    }
    if !(eps > 0.0 && eps < 1.0) || k < 2 || k > n {
        return Err(Error::InvalidArgument("need eps in (0,1) and 2 <= k <= n".into()));
    }
    let t_star = spectral::t_star(sd, eps).value;
    if t_star > t_big {
        return Err(Error::InvalidArgument(format!("t_* = {t_star} exceeds T = {t_big}")));
    }
    let samples: Vec<QTrial> = (0..trials).into_par_iter().map(|i| q_trial(g, t_star, t_big, seed, i as u64)).collect();
    // num[((a * n + u) * n + x) * n + v], den[x * n + v].
    let mut num = vec![0usize; n * n * n * n];
    let mut den = vec![0usize; n * n];
    for s in &samples {
        for x in 0..n {
            let v = s.map[x];
            den[x * n + v] += 1;
            for a in 0..n {
                if a != x && !s.interacted[a * n + x] {
                    num[((a * n + s.map[a]) * n + x) * n + v] += 1;
                }
            }
        }
    }
    let q = |a: usize, u: usize, x: usize, v: usize| -> f64 {
        let d = den[x * n + v];
        if d == 0 {
            0.0
        } else {
            num[((a * n + u) * n + x) * n + v] as f64 / d as f64
        }
    };
    let mut best = (f64::NEG_INFINITY, (0, 0, 0, 0));
    for x in 0..n {
        for v in 0..n {
            if den[x * n + v] < MIN_HITS {
                continue;
            }
            for a in 0..n {
                for u in 0..n {
                    let val = q(a, u, x, v);
                    if val > best.0 {
                        best = (val, (a, u, x, v));
                    }
                }
            }
        }
    }
    let (a, u, x, v) = best.1;
    let hits = den[x * n + v];
    let max_q = stats::proportion(num[((a * n + u) * n + x) * n + v], hits);
    let p_t = sd.heat_kernel(t_star);
    let p_max = p_t.iter().copied().fold(0.0, f64::max);
    let verdict = if hits < MIN_HITS {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(max_q.mean <= p_max + SIGMAS * max_q.stderr)
    };

    // Black-weight statistic over uniform (k-1)-subsets.
    use rand::seq::index::sample;
    let threshold = k as f64 / n as f64 + 1.0 / 16.0;
    let weights_at = |blacks: &[usize], u: usize, x: usize, v: usize| blacks.iter().map(|&a| q(a, u, x, v)).sum::<f64>();
    let cells: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|u| (0..n).flat_map(move |x| (0..n).map(move |v| (u, x, v))))
        .filter(|&(_, x, v)| den[x * n + v] >= MIN_HITS)
        .collect();
    let draws = trials.min(20_000);
    let results: Vec<(f64, bool)> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(rng::mix(seed, 1), i as u64);
            let blacks: Vec<usize> = sample(&mut r, n, k - 1).into_vec();
            let at = weights_at(&blacks, u, x, v);
            let worst = cells.iter().map(|&(uu, xx, vv)| weights_at(&blacks, uu, xx, vv)).fold(0.0, f64::max);
            (at, worst > threshold)
        })
        .collect();
    let weighted_mean = stats::estimate(&results.iter().map(|r| r.0).collect::<Vec<_>>());
    let weighted_predicted = (k - 1) as f64 / n as f64 * (0..n).map(|aa| q(aa, u, x, v)).sum::<f64>();
    let exceedance = results.iter().filter(|r| r.1).count() as f64 / draws.max(1) as f64;
    Ok(QWeightReport {
        eps,
        t_star,
        t_big,
        max_q,
        argmax: best.1,
        p_max,
        verdict,
        weighted_mean,
        weighted_predicted,
        exceedance,
    })
}

/// `m_{ε,n,k} = max{log(εn / (e² k)), (εn / 2k)(1/2 - εn/k)}`.
pub fn black_exponent_m(eps: f64, n: usize, k: usize) -> f64 {
    let x = eps * n as f64 / k as f64;
    let a = (x / std::f64::consts::E.powi(2)).ln();
    let b = 0.5 * x * (0.5 - x);
    a.max(b)
}

/// Black-neighbour frequency at one time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlackLdRow {
    pub s: f64,
    /// Largest per-vertex frequency of at least `(k/n + ε) d̂` black out-neighbours.
    pub worst: Estimate,
    pub worst_vertex: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlackLdReport {
    pub k: usize,
    pub eps: f64,
    pub m: f64,
    /// `exp(-d̂ ε m)`.
    pub bound: f64,
    pub burn_in: f64,
    pub rows: Vec<BlackLdRow>,
    /// Times in `s_grid` below the burn-in, skipped.
    pub skipped: Vec<f64>,
    pub verdict: Verdict,
}

/// Runs `k - 1` black particles from `blacks` and compares, at each time of
/// `s_grid` at or beyond `t_mix^∞(n^-10)`, the frequency of crowded
/// out-neighbourhoods with `exp(-d̂ ε m_{ε,n,k})`.
#[allow(clippy::too_many_arguments)]
pub fn black_ld_check(
    adj: &dyn OutAdjacency,
    sd: &SpectralData,
    k: usize,
    blacks: &[usize],
    eps: f64,
    s_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<BlackLdReport> {
    let g = adj.base_graph();
    let n = g.n();
    if k < 2 || 2 * k > n {
        return Err(Error::InvalidArgument(format!("need 2 <= k <= n/2, got k = {k}, n = {n}")));
    }
    if blacks.len() != k - 1 {
        return Err(Error::InvalidArgument(format!("expected {} black vertices", k - 1)));
    }
    validate_set(n, blacks)?;
    let burn_in = spectral::t_mix_linf(sd, (n as f64).powi(-10)).value;
    let (times, skipped): (Vec<f64>, Vec<f64>) = s_grid.iter().partition(|&&s| s >= burn_in);
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    let d_hat = adj.out_degree() as f64;
    let m = black_exponent_m(eps, n, k);
    let bound = (-d_hat * eps * m).exp();
    let level = (k as f64 / n as f64 + eps) * d_hat;
    let outs: Vec<Vec<usize>> = (0..n).map(|v| adj.out_of(v)).collect();
    let per_trial: Vec<Vec<Vec<bool>>> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let pos = positions_at(g, Mode::Standard, blacks, &sorted, rng::stream(seed, i as u64))?;
            Ok(pos
                .iter()
                .map(|p| {
                    let mut occ = vec![false; n];
                    for &v in p {
                        occ[v] = true;
                    }
                    (0..n).map(|v| outs[v].iter().filter(|&&u| occ[u]).count() as f64 >= level).collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let rows: Vec<BlackLdRow> = sorted
        .iter()
        .enumerate()
        .map(|(ti, &s)| {
            let (worst_vertex, worst) = (0..n)
                .map(|v| (v, stats::proportion(per_trial.iter().filter(|t| t[ti][v]).count(), trials)))
                .max_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
                .expect("nonempty graph");
            let verdict = Verdict::from_bool(worst.mean <= bound + SIGMAS * worst.stderr);
            BlackLdRow { s, worst, worst_vertex, verdict }
        })
        .collect();
    let verdict = combine(rows.iter().map(|r| r.verdict));
    Ok(BlackLdReport { k, eps, m, bound, burn_in, rows, skipped, verdict })
}

/// `Q(S)` size bound and the no-white-neighbour probability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhiteReport {
    pub s: Vec<usize>,
    pub t: f64,
    pub eps: f64,
    /// `{v : Σ_{u : v → u} P_T(u, S) < d̂ / 16}`.
    pub q_set: Vec<usize>,
    /// `8 ε n d_max_in / d̂`.
    pub size_bound: f64,
    /// Verdict of the size bound, or `None` with a reason when skipped.
    pub size_verdict: Option<Verdict>,
    pub skip_reason: Option<String>,
    /// `(31/32)^(d̂/32)`.
    pub neighbour_bound: f64,
    /// Largest empirical no-neighbour frequency over `v ∉ Q(S)`.
    pub worst_neighbour: Option<Estimate>,
    pub neighbour_verdict: Verdict,
}

/// Exact `Q(S)` with its size bound (when `|S|/n ≥ 1/4` and
/// `T ≥ rel log(1/ε)`) and a Monte Carlo test of the no-neighbour bound.
#[allow(clippy::too_many_arguments)]
pub fn white_set_checks(
    adj: &dyn OutAdjacency,
    sd: &SpectralData,
    s: &[usize],
    t: f64,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<WhiteReport> {
    let g = adj.base_graph();
    let n = g.n();
    validate_set(n, s)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps {eps} outside (0, 1)")));
    }
    let d_hat = adj.out_degree() as f64;
    let sums = out_sums(adj, &hit_mass(sd, s, t));
    let q_set: Vec<usize> = (0..n).filter(|&v| sums[v] < d_hat / 16.0).collect();
    let size_bound = 8.0 * eps * n as f64 * adj.max_in_degree() as f64 / d_hat;
    let mut skip = Vec::new();
    if (s.len() as f64) < n as f64 / 4.0 {
        skip.push(format!("|S|/n = {} below 1/4", s.len() as f64 / n as f64));
    }
    if t < sd.rel() * (1.0 / eps).ln().abs() {
        skip.push(format!("T = {t} below rel log(1/eps) = {}", sd.rel() * (1.0 / eps).ln().abs()));
    }
    let (size_verdict, skip_reason) = if skip.is_empty() {
        (Some(Verdict::from_bool(q_set.len() as f64 <= size_bound)), None)
    } else {
        (None, Some(skip.join("; ")))
    };
    let neighbour_bound = (31.0f64 / 32.0).powf(d_hat / 32.0);
    let mut in_q = vec![false; n];
    for &v in &q_set {
        in_q[v] = true;
    }
    let outs: Vec<Vec<usize>> = (0..n).map(|v| adj.out_of(v)).collect();
    let (worst_neighbour, neighbour_verdict) = if s.is_empty() || trials == 0 {
        (None, Verdict::ReportOnly)
    } else {
        let lonely: Vec<Vec<bool>> = (0..trials)
            .into_par_iter()
            .map(|i| -> Result<_> {
                let pos = positions_at(g, Mode::Standard, s, &[t], rng::stream(seed, i as u64))?;
                let mut occ = vec![false; n];
                for &v in &pos[0] {
                    occ[v] = true;
                }
                Ok((0..n).map(|v| !outs[v].iter().any(|&u| occ[u])).collect())
            })
            .collect::<Result<_>>()?;
        let worst = (0..n)
            .filter(|&v| !in_q[v])
            .map(|v| stats::proportion(lonely.iter().filter(|l| l[v]).count(), trials))
            .max_by(|a, b| a.mean.total_cmp(&b.mean));
        match worst {
            Some(w) => (Some(w), Verdict::from_bool(w.mean <= neighbour_bound + SIGMAS * w.stderr)),
            None => (None, Verdict::ReportOnly),
        }
    };
    Ok(WhiteReport {
        s: s.to_vec(),
        t,
        eps,
        q_set,
        size_bound,
        size_verdict,
        skip_reason,
        neighbour_bound,
        worst_neighbour,
        neighbour_verdict,
    })
}

/// Covariance of two occupation indicators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovRow {
    pub t: f64,
    pub u: usize,
    pub v: usize,
    pub cov: Estimate,
    /// `cov ≤ 3σ`.
    pub verdict: Verdict,
}

fn occupation_samples(g: &Graph, init: &[usize], times: &[f64], trials: usize, seed: u64) -> Result<Vec<Vec<Vec<bool>>>> {
    let n = g.n();
    (0..trials)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let pos = positions_at(g, Mode::Standard, init, times, rng::stream(seed, i as u64))?;
            Ok(pos
                .iter()
                .map(|p| {
                    let mut occ = vec![false; n];
                    for &v in p {
                        occ[v] = true;
                    }
                    occ
                })
                .collect())
        })
        .collect()
}

fn cov_verdict(cov: &Estimate) -> Verdict {
    Verdict::from_bool(cov.mean <= SIGMAS * cov.stderr)
}

/// All pairwise occupation covariances of the exclusion process started
/// from `init`, at each time of `times`.
pub fn na_covariances(g: &Graph, init: &[usize], times: &[f64], trials: usize, seed: u64) -> Result<Vec<CovRow>> {
    validate_set(g.n(), init)?;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let samples = occupation_samples(g, init, &sorted, trials, seed)?;
    let n = g.n();
    let mut rows = Vec::new();
    for (ti, &t) in sorted.iter().enumerate() {
        let ind: Vec<Vec<f64>> =
            (0..n).map(|v| samples.iter().map(|s| if s[ti][v] { 1.0 } else { 0.0 }).collect()).collect();
        for u in 0..n {
            for v in u + 1..n {
                let cov = stats::covariance(&ind[u], &ind[v]);
                rows.push(CovRow { t, u, v, verdict: cov_verdict(&cov), cov });
            }
        }
    }
    Ok(rows)
}

/// Conditional covariances given the occupation pattern `pilot` on a set `D`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CnaReport {
    pub t: f64,
    pub pilot: Vec<(usize, bool)>,
    pub hits: usize,
    pub rows: Vec<CovRow>,
    pub verdict: Verdict,
}

/// Covariances of occupation indicators outside `D`, conditioned on the
/// occupation of `D` matching `pilot`, by rejection.
pub fn cna_probe(g: &Graph, init: &[usize], t: f64, pilot: &[(usize, bool)], trials: usize, seed: u64) -> Result<CnaReport> {
    let n = g.n();
    validate_set(n, init)?;
    validate_set(n, &pilot.iter().map(|p| p.0).collect::<Vec<_>>())?;
    let samples = occupation_samples(g, init, &[t], trials, seed)?;
    let kept: Vec<&Vec<bool>> =
        samples.iter().map(|s| &s[0]).filter(|occ| pilot.iter().all(|&(v, b)| occ[v] == b)).collect();
    let hits = kept.len();
    let mut in_d = vec![false; n];
    for &(v, _) in pilot {
        in_d[v] = true;
    }
    let mut rows = Vec::new();
    if hits >= MIN_HITS {
        let free: Vec<usize> = (0..n).filter(|&v| !in_d[v]).collect();
        let ind: Vec<Vec<f64>> =
            (0..n).map(|v| kept.iter().map(|o| if o[v] { 1.0 } else { 0.0 }).collect()).collect();
        for (i, &u) in free.iter().enumerate() {
            for &v in &free[i + 1..] {
                let cov = stats::covariance(&ind[u], &ind[v]);
                rows.push(CovRow { t, u, v, verdict: cov_verdict(&cov), cov });
            }
        }
    }
    let verdict = if hits < MIN_HITS { Verdict::Inconclusive } else { combine(rows.iter().map(|r| r.verdict)) };
    Ok(CnaReport { t, pilot: pilot.to_vec(), hits, rows, verdict })
}

/// Exact pairwise covariances under the uniform law on `k`-subsets of the
/// vertices, by enumeration of the exclusion state space.
pub fn exact_stationary_covariances(g: &Graph, k: usize) -> Result<Vec<(usize, usize, f64)>> {
    let ex = exact::build_exact(g, k, ProcessKind::Ex)?;
    let n = g.n();
    let total = ex.n_states() as f64;
    let mut single = vec![0.0; n];
    let mut pair = vec![0.0; n * n];
    for s in ex.states() {
        for &a in s {
            single[a] += 1.0;
            for &b in s {
                pair[a * n + b] += 1.0;
            }
        }
    }
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            out.push((u, v, pair[u * n + v] / total - single[u] / total * single[v] / total));
        }
    }
    Ok(out)
}

/// `max_v E[N̂_{t_*(ε)}(v)]` against two bounds. The literal bound is
/// `8 d ε` (plain graphs) or `4 ε (d_max_in + d̂)` (inflated graphs). It
/// presumes `max_{x,y} P_{T - t_*}(x, y) ≤ ε / t_*`, which fails when `1/n`
/// exceeds `ε / t_*`. The general bound replaces `ε` by `t_* p*` with
/// `p* = max_{x,y} P_{T - t_*}(x, y)` and holds at every size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionReport {
    pub eps: f64,
    pub t_star: f64,
    pub t_big: f64,
    pub worst: Estimate,
    pub worst_vertex: usize,
    pub literal_bound: f64,
    pub literal_verdict: Verdict,
    /// `max_{x,y} P_{T - t_*}(x, y)`.
    pub p_star: f64,
    pub general_bound: f64,
    pub verdict: Verdict,
}

/// Estimates `E[N̂_{t_*(ε)}(v)]` for every `v` on fresh modified streams.
pub fn interaction_check(
    adj: &dyn OutAdjacency,
    sd: &SpectralData,
    eps: f64,
    t_big: f64,
    inflated: bool,
    trials: usize,
    seed: u64,
) -> Result<InteractionReport> {
    let g = adj.base_graph();
    let n = g.n();
    let t_star = spectral::t_star(sd, eps).value;
    if t_star > t_big {
        return Err(Error::InvalidArgument(format!("t_* = {t_star} exceeds T = {t_big}")));
    }
    let shape = |x: f64| {
        if inflated {
            4.0 * x * (adj.max_in_degree() + adj.out_degree()) as f64
        } else {
            8.0 * g.d() as f64 * x
        }
    };
    let p_star = sd.heat_kernel(t_big - t_star).iter().copied().fold(0.0, f64::max);
    let literal_bound = shape(eps);
    let general_bound = shape(t_star * p_star);
    let per_v: Vec<Estimate> = (0..n)
        .map(|v| -> Result<Estimate> {
            let xs: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|i| -> Result<f64> {
                    let seed_i = rng::mix(rng::mix(seed, v as u64), i as u64);
                    crate::simulate::hat_interactions_fresh(adj, Mode::Modified, v, t_star, t_big, seed_i).map(|c| c as f64)
                })
                .collect::<Result<_>>()?;
            Ok(stats::estimate(&xs))
        })
        .collect::<Result<_>>()?;
    let (worst_vertex, worst) =
        per_v.iter().copied().enumerate().max_by(|a, b| a.1.mean.total_cmp(&b.1.mean)).expect("nonempty graph");
    let within = |b: f64| Verdict::from_bool(worst.mean <= b + SIGMAS * worst.stderr);
    Ok(InteractionReport {
        eps,
        t_star,
        t_big,
        worst,
        worst_vertex,
        literal_bound,
        literal_verdict: within(literal_bound),
        p_star,
        general_bound,
        verdict: within(general_bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph;
    use crate::spectral::eigendecompose;

    #[test]
    fn empty_set_is_all_nice() {
        let g = graph::cycle(8).unwrap();
        let sd = eigendecompose(&g).unwrap();
        let r = nice_set(&g, &sd, &[], 1.0).unwrap();
        assert!(r.e_t.iter().all(|&x| x == 0.0));
        assert_eq!(r.nice.len(), 8);
        assert!(r.counting_holds);
    }

    #[test]
    fn chernoff_at_zero_lambda_is_vacuous() {
        assert_eq!(chernoff_bound(0.0, 0.4, 10.0, 0.2), 1.0);
        assert_eq!(optimal_lambda(0.01, 0.3), 0.0);
    }

    #[test]
    fn exponent_grid_worst_point() {
        let grid = exponent_sign_grid(10);
        assert_eq!(grid.len(), 100);
        let worst = grid.iter().map(|p| p.exponent).fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= -0.0008, "{worst}");
    }

    #[test]
    fn stationary_covariance_on_triangle() {
        let g = graph::complete(3).unwrap();
        for (_, _, c) in exact_stationary_covariances(&g, 2).unwrap() {
            assert!((c + 1.0 / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_start_has_zero_covariance() {
        let g = graph::cycle(6).unwrap();
        for row in na_covariances(&g, &[0, 2, 4], &[0.0], 100, 1).unwrap() {
            assert_eq!(row.cov.mean, 0.0);
            assert_eq!(row.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn full_set_has_empty_q() {
        let g = graph::cycle(8).unwrap();
        let sd = eigendecompose(&g).unwrap();
        let all: Vec<usize> = (0..8).collect();
        let r = white_set_checks(&g, &sd, &all, 1.0, 0.05, 0, 1).unwrap();
        assert!(r.q_set.is_empty());
    }
}
