//! Report-only ratios of exact exclusion mixing times to the scales
//! predicted by the upper and lower bounds.

use exmix_core::exact::{self, ProcessKind};
use exmix_core::graph::{self, Graph, GraphSpec};
use exmix_core::simulate::{positions_at, Mode};
use exmix_core::spectral::{self, SpectralData};
use exmix_core::{rng, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// TV accuracy of every mixing time in this module.
pub const MIX_EPS: f64 = 0.25;

/// Time step of the Monte Carlo mixing-time proxy.
pub const PROXY_DT: f64 = 0.05;

/// Largest `n^k` for which the `RW(k)` mixing time is computed.
pub const RW_PRODUCT_CAP: usize = 20_000;

/// Ratios for one `(graph, k)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub graph: String,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub mix_ex: f64,
    pub mix_rw1: f64,
    /// `None` when `n^k` exceeds [`RW_PRODUCT_CAP`].
    pub mix_rw_k: Option<f64>,
    pub rel: f64,
    pub r_star: f64,
    /// `mix^EX(k) / ((rel + r_*(ε)) log(4n))`.
    pub upper_shape: f64,
    /// `mix^EX(k) / mix^RW(k)`.
    pub oliveira: Option<f64>,
    /// `mix^EX(k) / (rel log(4n))`.
    pub high_degree_shape: f64,
    /// `mix^EX(k) / (d log(dk))` on hypercubes, `mix^EX(k) / (side^2 log(k+1))`
    /// on tori.
    pub family_shape: Option<f64>,
}

/// Exact ratios for one graph and particle count.
pub fn ratio_row(spec: &GraphSpec, g: &Graph, sd: &SpectralData, k: usize, eps: f64) -> Result<RatioRow> {
    let n = g.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..{n}")));
    }
    let mix_ex = exact::build_exact(g, k, ProcessKind::Ex)?.mix_time(MIX_EPS)?.value;
    let mix_rw1 = spectral::t_mix(sd, MIX_EPS).value;
    let mix_rw_k = match n.checked_pow(k as u32) {
        Some(size) if size <= RW_PRODUCT_CAP => Some(exact::rw_k_mix_time(g, sd, k, MIX_EPS)?.value),
        _ => None,
    };
    let rel = sd.rel();
    let logn = (n as f64).ln();
    let r_star = spectral::first_time_below(|t| sd.diag_excess(t), eps / (logn * logn)).value;
    let log4n = (n as f64 / MIX_EPS).ln();
    let d = g.d();
    let family_shape = match spec {
        GraphSpec::Hypercube { dim } => Some(mix_ex / (*dim as f64 * ((dim * k) as f64).ln())),
        GraphSpec::Torus { side, .. } => Some(mix_ex / ((side * side) as f64 * ((k + 1) as f64).ln())),
        _ => None,
    };
    Ok(RatioRow {
        graph: spec.name(),
        n,
        d,
        k,
        mix_ex,
        mix_rw1,
        mix_rw_k,
        rel,
        r_star,
        upper_shape: mix_ex / ((rel + r_star) * log4n),
        oliveira: mix_rw_k.map(|m| mix_ex / m),
        high_degree_shape: mix_ex / (rel * log4n),
        family_shape,
    })
}

/// Ratio rows for every configured graph and `k`, skipping pairs outside the
/// exact caps. Skipped pairs are returned with their reason.
pub fn shape_ratios(graphs: &[GraphSpec], k_list: &[usize], eps: f64) -> (Vec<RatioRow>, Vec<(String, usize, String)>) {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for spec in graphs {
        let built = graph::build_graph(spec).and_then(|g| spectral::eigendecompose(&g).map(|sd| (g, sd)));
        let (g, sd) = match built {
            Ok(x) => x,
            Err(e) => {
                skipped.push((spec.name(), 0, e.to_string()));
                continue;
            }
        };
        for &k in k_list {
            if k >= g.n() {
                continue;
            }
            match ratio_row(spec, &g, &sd, k, eps) {
                Ok(r) => rows.push(r),
                Err(e) => skipped.push((spec.name(), k, e.to_string())),
            }
        }
    }
    (rows, skipped)
}

/// The instance set on which the `mix^EX(k) / mix^RW(k)` ratio is pinned.
pub fn oliveira_instances() -> Vec<(GraphSpec, usize)> {
    let mut out = vec![(GraphSpec::Complete { n: 4 }, 1), (GraphSpec::Complete { n: 4 }, 2)];
    for k in 1..=3 {
        out.push((GraphSpec::Cycle { n: 6 }, k));
    }
    for k in 1..=3 {
        out.push((GraphSpec::Hypercube { dim: 3 }, k));
    }
    out
}

/// Hypercube `Q_d` with `k = 2^(d-1)` particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypercubeShapeRow {
    pub d: usize,
    pub k: usize,
    /// `d log(dk)`.
    pub scale: f64,
    /// Exact worst-start mixing time when the state space fits the cap.
    pub mix_exact: Option<f64>,
    /// Mixing time of the half-cube occupancy count from the half-cube start.
    pub mix_proxy: f64,
    pub exact_ratio: Option<f64>,
    pub proxy_ratio: f64,
}

/// Stationary law of the number of particles with first coordinate 1 when
/// `k` of the `2^d` vertices are occupied uniformly.
fn half_count_law(n: usize, k: usize) -> Vec<f64> {
    let half = n / 2;
    let ln_choose = |a: usize, b: usize| -> f64 {
        if b > a {
            return f64::NEG_INFINITY;
        }
        (1..=b).map(|i| ((a - b + i) as f64 / i as f64).ln()).sum()
    };
    let total = ln_choose(n, k);
    (0..=k).map(|j| (ln_choose(half, j) + ln_choose(half, k - j) - total).exp()).collect()
}

/// Monte Carlo mixing time of the half-cube count statistic, started from
/// all particles in `{x_1 = 0}`, on a time grid of spacing `dt`. The first
/// grid time whose estimated TV is at most [`MIX_EPS`] is refined by linear
/// interpolation with its predecessor.
pub fn hypercube_proxy_mix(d: usize, trials: usize, dt: f64, seed: u64) -> Result<f64> {
    let g = graph::hypercube(d)?;
    let n = g.n();
    let k = n / 2;
    let init: Vec<usize> = (0..n).filter(|v| v & 1 == 0).collect();
    let law = half_count_law(n, k);
    let horizon = 2.0 * d as f64 * ((d * k) as f64).ln();
    let steps = (horizon / dt).ceil() as usize;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let width = k + 1;
    // counts[ti * width + j] = number of trials with j particles in {x_1 = 1} at times[ti].
    let counts = (0..trials)
        .into_par_iter()
        .map(|i| positions_at(&g, Mode::Standard, &init, &times, rng::stream(seed, i as u64)))
        .try_fold(
            || vec![0u32; times.len() * width],
            |mut acc, pos| -> Result<Vec<u32>> {
                for (ti, p) in pos?.iter().enumerate() {
                    acc[ti * width + p.iter().filter(|&&v| v & 1 == 1).count()] += 1;
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u32; times.len() * width],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let mut prev = (0.0, 1.0);
    for (ti, &t) in times.iter().enumerate() {
        let row = &counts[ti * width..(ti + 1) * width];
        let tv = 0.5 * row.iter().zip(&law).map(|(&c, &p)| (c as f64 / trials as f64 - p).abs()).sum::<f64>();
        if tv <= MIX_EPS {
            let (t0, tv0) = prev;
            return Ok(if ti == 0 { 0.0 } else { t0 + (tv0 - MIX_EPS) / (tv0 - tv) * (t - t0) });
        }
        prev = (t, tv);
    }
    Err(Error::Numerical(format!("half-cube statistic on Q{d} did not mix by {horizon}")))
}

/// Shape ratios `mix / (d log(dk))` for `Q_d`, `d` in `dims`.
pub fn hypercube_shape_ratios(dims: &[usize], trials: usize, seed: u64) -> Result<Vec<HypercubeShapeRow>> {
    dims.iter()
        .map(|&d| {
            let n = 1usize << d;
            let k = n / 2;
            let scale = d as f64 * ((d * k) as f64).ln();
            let mix_exact = match exact::state_count(n, k, ProcessKind::Ex) {
                Some(c) if c <= exact::STATE_CAP => {
                    let g = graph::hypercube(d)?;
                    Some(exact::build_exact(&g, k, ProcessKind::Ex)?.mix_time(MIX_EPS)?.value)
                }
                _ => None,
            };
            let mix_proxy = hypercube_proxy_mix(d, trials, PROXY_DT, rng::mix(seed, d as u64))?;
            Ok(HypercubeShapeRow {
                d,
                k,
                scale,
                mix_exact,
                mix_proxy,
                exact_ratio: mix_exact.map(|m| m / scale),
                proxy_ratio: mix_proxy / scale,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_count_law_is_hypergeometric() {
        let law = half_count_law(8, 4);
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // C(4,2)^2 / C(8,4) = 36 / 70.
        assert!((law[2] - 36.0 / 70.0).abs() < 1e-12);
    }

    #[test]
    fn single_particle_ratio_is_one() {
        let spec = GraphSpec::Cycle { n: 6 };
        let g = graph::build_graph(&spec).unwrap();
        let sd = spectral::eigendecompose(&g).unwrap();
        let row = ratio_row(&spec, &g, &sd, 1, 0.01).unwrap();
        assert!((row.oliveira.unwrap() - 1.0).abs() < 1e-5);
        assert!((row.mix_ex - row.mix_rw1).abs() < 1e-5 * row.mix_rw1);
    }
}
