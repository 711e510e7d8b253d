//! Exact finite-state computations for `RW(k)`, `EX(k)` and `IP(k)` on tiny
//! instances.
//!
//! States are enumerated explicitly: `EX(k)` states are sorted `k`-subsets,
//! `IP(k)` states are `k`-tuples of distinct vertices and `RW(k)` states are
//! arbitrary `k`-tuples. Every ringing edge of rate `r` swaps the contents of
//! its endpoints (for `RW(k)` each walker instead jumps along each incident
//! edge at rate `r`), so all generators are symmetric and the uniform law on
//! the state list is stationary.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, Graph};
use crate::spectral::{SpectralData, TimeSolve, BISECTION_RTOL};

/// Largest admissible state count.
pub const STATE_CAP: usize = 200_000;

/// Largest state count for which distributions use the dense exponential.
pub const EXPM_CAP: usize = 600;

/// Largest state count for dense eigendecompositions.
pub const DENSE_EIGEN_CAP: usize = 2000;

/// Largest automorphism group enumerated for worst-start reduction.
pub const AUTOMORPHISM_CAP: usize = 50_000;

/// Which multi-particle process a state space describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    /// `k` independent walkers.
    Rw,
    /// Exclusion process: unlabeled particles.
    Ex,
    /// Interchange process: labeled particles.
    Ip,
}

impl ProcessKind {
    pub fn name(self) -> &'static str {
        match self {
            ProcessKind::Rw => "rw",
            ProcessKind::Ex => "ex",
            ProcessKind::Ip => "ip",
        }
    }
}

impl std::str::FromStr for ProcessKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rw" => Ok(ProcessKind::Rw),
            "ex" => Ok(ProcessKind::Ex),
            "ip" => Ok(ProcessKind::Ip),
            other => Err(Error::Parse(format!("unknown process '{other}' (expected rw, ex or ip)"))),
        }
    }
}

/// Number of states of `kind` with `k` particles on `n` vertices, or `None`
/// on overflow.
pub fn state_count(n: usize, k: usize, kind: ProcessKind) -> Option<usize> {
    match kind {
        ProcessKind::Rw => {
            let mut c: usize = 1;
            for _ in 0..k {
                c = c.checked_mul(n)?;
            }
            Some(c)
        }
        ProcessKind::Ex => {
            if k > n {
                return Some(0);
            }
            let mut c: u128 = 1;
            for i in 0..k {
                c = c * (n - i) as u128 / (i + 1) as u128;
            }
            usize::try_from(c).ok()
        }
        ProcessKind::Ip => {
            if k > n {
                return Some(0);
            }
            let mut c: usize = 1;
            for i in 0..k {
                c = c.checked_mul(n - i)?;
            }
            Some(c)
        }
    }
}

/// Enumerated state space and sparse symmetric rate matrix.
#[derive(Debug, Clone)]
pub struct ExactProcess {
    kind: ProcessKind,
    graph: Graph,
    k: usize,
    states: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    /// Off-diagonal rates, merged per target.
    rows: Vec<Vec<(usize, f64)>>,
    exit: Vec<f64>,
    max_exit: f64,
}

fn enumerate_states(n: usize, k: usize, kind: ProcessKind) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, kind: ProcessKind, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let start = match kind {
            ProcessKind::Ex => cur.last().map_or(0, |&v| v + 1),
            _ => 0,
        };
        for v in start..n {
            if kind == ProcessKind::Ip && cur.contains(&v) {
                continue;
            }
            cur.push(v);
            rec(n, k, kind, cur, out);
            cur.pop();
        }
    }
    rec(n, k, kind, &mut cur, &mut out);
    out
}

/// Builds the exact process of `kind` with `k` particles on `g`.
pub fn build_exact(g: &Graph, k: usize, kind: ProcessKind) -> Result<ExactProcess> {
    let n = g.n();
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one particle".into()));
    }
    if kind != ProcessKind::Rw && k > n {
        return Err(Error::InvalidArgument(format!("{k} particles do not fit on {n} vertices")));
    }
    let count = state_count(n, k, kind).unwrap_or(usize::MAX);
    if count > STATE_CAP {
        return Err(Error::CapExceeded { what: format!("{} state space", kind.name()), size: count, cap: STATE_CAP });
    }
    let states = enumerate_states(n, k, kind);
    let index: HashMap<Vec<usize>, usize> = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let r = g.rate_per_edge();
    let mut rows = Vec::with_capacity(states.len());
    let mut exit = Vec::with_capacity(states.len());
    let mut next = Vec::with_capacity(k);
    for s in &states {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        match kind {
            ProcessKind::Rw => {
                for i in 0..k {
                    for &y in g.neighbors(s[i]) {
                        next.clear();
                        next.extend_from_slice(s);
                        next[i] = y;
                        *acc.entry(index[&next]).or_insert(0.0) += r;
                    }
                }
            }
            ProcessKind::Ex | ProcessKind::Ip => {
                for &(u, v) in g.edges() {
                    let hit = s.iter().any(|&x| x == u || x == v);
                    if !hit {
                        continue;
                    }
                    next.clear();
                    next.extend(s.iter().map(|&x| if x == u { v } else if x == v { u } else { x }));
                    if kind == ProcessKind::Ex {
                        next.sort_unstable();
                    }
                    if next != *s {
                        *acc.entry(index[&next]).or_insert(0.0) += r;
                    }
                }
            }
        }
        let mut row: Vec<(usize, f64)> = acc.into_iter().collect();
        row.sort_unstable_by_key(|e| e.0);
        exit.push(row.iter().map(|e| e.1).sum());
        rows.push(row);
    }
    let max_exit = exit.iter().copied().fold(0.0, f64::max);
    Ok(ExactProcess { kind, graph: g.clone(), k, states, index, rows, exit, max_exit })
}

impl ExactProcess {
    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    /// Index of a state; EX states are sorted before lookup.
    pub fn state_index(&self, state: &[usize]) -> Option<usize> {
        if self.kind == ProcessKind::Ex {
            let mut s = state.to_vec();
            s.sort_unstable();
            self.index.get(&s).copied()
        } else {
            self.index.get(state).copied()
        }
    }

    /// Off-diagonal transitions out of state `i`.
    pub fn transitions(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.max_exit
    }

    /// Dense generator matrix.
    pub fn generator_dense(&self) -> DMatrix<f64> {
        let m = self.n_states();
        let mut q = DMatrix::zeros(m, m);
        for i in 0..m {
            q[(i, i)] = -self.exit[i];
            for &(j, r) in &self.rows[i] {
                q[(i, j)] = r;
            }
        }
        q
    }

    /// `Q v` for a column vector `v`.
    pub fn apply_generator(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n_states())
            .map(|i| self.rows[i].iter().map(|&(j, r)| r * v[j]).sum::<f64>() - self.exit[i] * v[i])
            .collect()
    }

    /// Law at time `t` from the initial law `mu`.
    ///
    /// Uses the dense scaling-and-squaring exponential up to [`EXPM_CAP`]
    /// states and uniformisation beyond.
    pub fn evolve(&self, mu: &[f64], t: f64) -> Vec<f64> {
        assert!(t >= 0.0, "time must be nonnegative");
        if t == 0.0 {
            return mu.to_vec();
        }
        if self.n_states() <= EXPM_CAP {
            let p = (self.generator_dense() * t).exp();
            let m = nalgebra::DVector::from_column_slice(mu);
            (p.transpose() * m).iter().copied().collect()
        } else {
            let mut series = UniformSeries::new(self, mu.to_vec());
            series.at(self, t)
        }
    }

    /// Law at time `t` from state `init`.
    pub fn distribution(&self, init: usize, t: f64) -> Vec<f64> {
        let mut mu = vec![0.0; self.n_states()];
        mu[init] = 1.0;
        self.evolve(&mu, t)
    }

    /// Total-variation distance of `dist` from the uniform law.
    pub fn tv_to_uniform(&self, dist: &[f64]) -> f64 {
        let u = 1.0 / self.n_states() as f64;
        0.5 * dist.iter().map(|p| (p - u).abs()).sum::<f64>()
    }

    /// Exact TV distance to stationarity at time `t` from state `init`.
    pub fn exact_tv(&self, init: usize, t: f64) -> f64 {
        self.tv_to_uniform(&self.distribution(init, t))
    }

    /// Spectral gap of the generator by dense eigendecomposition.
    pub fn gap(&self) -> Result<f64> {
        let m = self.n_states();
        if m > DENSE_EIGEN_CAP {
            return Err(Error::CapExceeded { what: "dense exact-process eigensolve".into(), size: m, cap: DENSE_EIGEN_CAP });
        }
        if m < 2 {
            return Ok(f64::INFINITY);
        }
        let mut ev: Vec<f64> = (-self.generator_dense()).symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev[1])
    }

    /// One representative per orbit of the state space under graph
    /// automorphisms (and, for labeled processes, coordinate permutations).
    /// Falls back to every state when the automorphism group is too large.
    pub fn start_representatives(&self) -> Vec<usize> {
        let Some(auts) = graph::automorphisms(&self.graph, AUTOMORPHISM_CAP) else {
            return (0..self.n_states()).collect();
        };
        let mut seen = std::collections::HashSet::new();
        let mut reps = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            let key = auts
                .iter()
                .map(|sigma| {
                    let mut img: Vec<usize> = s.iter().map(|&v| sigma[v]).collect();
                    img.sort_unstable();
                    img
                })
                .min()
                .expect("identity is always an automorphism");
            if seen.insert(key) {
                reps.push(i);
            }
        }
        reps
    }

    /// Worst-start TV at time `t`, exhaustive over orbit representatives.
    pub fn worst_tv(&self, t: f64) -> f64 {
        let mut prop = Propagator::new(self);
        self.start_representatives()
            .into_iter()
            .map(|x| {
                let v = prop.tv(self, x, t);
                prop.forget();
                v
            })
            .fold(0.0, f64::max)
    }

    /// `inf{t : max_x ||P_t(x, ·) - π||_TV <= eps}`.
    pub fn mix_time(&self, eps: f64) -> Result<TimeSolve> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("accuracy {eps} outside (0, 1)")));
        }
        let mut prop = Propagator::new(self);
        let reps = self.start_representatives();
        let mut best = TimeSolve { value: 0.0, lower: 0.0, bracketed: true };
        for x in reps {
            let above = prop.tv(self, x, best.value) > eps;
            if above {
                best = first_time_below_from(|t| prop.tv(self, x, t), eps, best.value);
                if !best.bracketed {
                    break;
                }
            }
            prop.forget();
        }
        Ok(best)
    }
}

/// First time a non-increasing function reaches `target`, known to exceed it
/// at `from`.
fn first_time_below_from(mut f: impl FnMut(f64) -> f64, target: f64, from: f64) -> TimeSolve {
    let mut lo = from;
    let mut hi = if from > 0.0 { from * 2.0 } else { 1.0 };
    while f(hi) > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return TimeSolve { value: f64::INFINITY, lower: lo, bracketed: false };
        }
    }
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    assert!(f(lo) > target && f(hi) <= target, "total variation is not monotone on [{lo}, {hi}]");
    TimeSolve { value: hi, lower: lo, bracketed: true }
}

/// Poisson-weighted powers of the uniformised chain `K = I + Q / Λ`,
/// cached for one initial law.
struct UniformSeries {
    powers: Vec<Vec<f64>>,
    log_fact: Vec<f64>,
}

impl UniformSeries {
    fn new(_ep: &ExactProcess, mu: Vec<f64>) -> Self {
        UniformSeries { powers: vec![mu], log_fact: vec![0.0] }
    }

    fn ensure(&mut self, ep: &ExactProcess, terms: usize) {
        let lam = ep.max_exit.max(1e-300);
        while self.powers.len() < terms {
            let last = self.powers.last().expect("series starts non-empty");
            let qv = ep.apply_generator(last);
            let next: Vec<f64> = last.iter().zip(&qv).map(|(a, b)| a + b / lam).collect();
            self.powers.push(next);
            let j = self.log_fact.len();
            self.log_fact.push(self.log_fact[j - 1] + (j as f64).ln());
        }
    }

    fn at(&mut self, ep: &ExactProcess, t: f64) -> Vec<f64> {
        let lt = ep.max_exit * t;
        if lt == 0.0 {
            return self.powers[0].clone();
        }
        let terms = (lt + 12.0 * lt.sqrt() + 40.0).ceil() as usize;
        self.ensure(ep, terms);
        let mut out = vec![0.0; self.powers[0].len()];
        let ln_lt = lt.ln();
        for j in 0..terms {
            let w = (-lt + j as f64 * ln_lt - self.log_fact[j]).exp();
            if w < 1e-300 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(&self.powers[j]) {
                *o += w * p;
            }
        }
        out
    }
}

/// Computes rows of the transition semigroup by eigendecomposition for small
/// state spaces and by cached uniformisation otherwise.
enum Propagator {
    Eigen { values: Vec<f64>, vectors: DMatrix<f64> },
    Series(HashMap<usize, UniformSeries>),
}

impl Propagator {
    fn new(ep: &ExactProcess) -> Self {
        if ep.n_states() <= DENSE_EIGEN_CAP {
            let eig = (-ep.generator_dense()).symmetric_eigen();
            Propagator::Eigen { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
        } else {
            Propagator::Series(HashMap::new())
        }
    }

    fn row(&mut self, ep: &ExactProcess, x: usize, t: f64) -> Vec<f64> {
        match self {
            Propagator::Eigen { values, vectors } => {
                let m = values.len();
                let coef: Vec<f64> = (0..m).map(|i| vectors[(x, i)] * (-values[i] * t).exp()).collect();
                let mut out = vec![0.0; m];
                for i in 0..m {
                    let c = coef[i];
                    if c == 0.0 {
                        continue;
                    }
                    for (o, v) in out.iter_mut().zip(vectors.column(i).iter()) {
                        *o += c * v;
                    }
                }
                out
            }
            Propagator::Series(cache) => {
                let series = cache.entry(x).or_insert_with(|| {
                    let mut mu = vec![0.0; ep.n_states()];
                    mu[x] = 1.0;
                    UniformSeries::new(ep, mu)
                });
                series.at(ep, t)
            }
        }
    }

    /// Drops cached series so memory stays bounded across many starts.
    fn forget(&mut self) {
        if let Propagator::Series(cache) = self {
            cache.clear();
        }
    }

    fn tv(&mut self, ep: &ExactProcess, x: usize, t: f64) -> f64 {
        let row = self.row(ep, x, t);
        ep.tv_to_uniform(&row)
    }
}

/// TV distance between the `RW(k)` law at time `t` from `start` and the
/// uniform law on `V^k`, using the product of single-walk heat kernels.
pub fn rw_k_tv(sd: &SpectralData, start: &[usize], t: f64) -> f64 {
    let n = sd.n();
    let rows: Vec<Vec<f64>> = start.iter().map(|&x| sd.heat_row(x, t)).collect();
    let u = (n as f64).powi(-(start.len() as i32));
    fn rec(rows: &[Vec<f64>], depth: usize, acc: f64, u: f64, total: &mut f64) {
        if depth == rows.len() {
            *total += (acc - u).abs();
            return;
        }
        for &p in &rows[depth] {
            rec(rows, depth + 1, acc * p, u, total);
        }
    }
    let mut total = 0.0;
    rec(&rows, 0, 1.0, u, &mut total);
    0.5 * total
}

/// Multiset starts of `RW(k)` up to graph automorphisms.
pub fn rw_k_starts(g: &Graph, k: usize) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut all = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let start = cur.last().copied().unwrap_or(0);
        for v in start..n {
            cur.push(v);
            rec(n, k, cur, out);
            cur.pop();
        }
    }
    rec(n, k, &mut cur, &mut all);
    let Some(auts) = graph::automorphisms(g, AUTOMORPHISM_CAP) else {
        return all;
    };
    let mut seen = std::collections::HashSet::new();
    all.into_iter()
        .filter(|s| {
            let key = auts
                .iter()
                .map(|sigma| {
                    let mut img: Vec<usize> = s.iter().map(|&v| sigma[v]).collect();
                    img.sort_unstable();
                    img
                })
                .min()
                .expect("identity is always an automorphism");
            seen.insert(key)
        })
        .collect()
}

/// Worst-start TV mixing time of `RW(k)`.
pub fn rw_k_mix_time(g: &Graph, sd: &SpectralData, k: usize, eps: f64) -> Result<TimeSolve> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one walker".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("accuracy {eps} outside (0, 1)")));
    }
    let count = state_count(g.n(), k, ProcessKind::Rw).unwrap_or(usize::MAX);
    if count > STATE_CAP * 20 {
        return Err(Error::CapExceeded { what: "product state space".into(), size: count, cap: STATE_CAP * 20 });
    }
    let mut best = TimeSolve { value: 0.0, lower: 0.0, bracketed: true };
    for s in rw_k_starts(g, k) {
        if rw_k_tv(sd, &s, best.value) > eps {
            best = first_time_below_from(|t| rw_k_tv(sd, &s, t), eps, best.value);
        }
    }
    Ok(best)
}

/// `Δ_{x,y}(t)`: TV distance between the `IP(k)` laws from `x` and `y`.
pub fn delta_xy(ip: &ExactProcess, x: usize, y: usize, t: f64) -> f64 {
    let a = ip.distribution(x, t);
    let b = ip.distribution(y, t);
    0.5 * a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum::<f64>()
}

/// The chain of reductions from exclusion mixing to the last coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionChain {
    pub t: f64,
    pub k: usize,
    /// Worst-start `EX(k)` TV.
    pub ex_tv: f64,
    /// Worst-start `IP(k)` TV.
    pub ip_tv: f64,
    /// `max_{x,y} Δ_{x,y}(t)`.
    pub max_delta: f64,
    /// `max Δ` over pairs differing only in the last coordinate.
    pub max_delta_last: f64,
    /// `max_{(w,y)} ||L(w(t), y(t)) - L(w(t), U)||_TV`.
    pub max_tail_tv: f64,
    /// `ex_tv <= ip_tv <= max_delta`.
    pub contraction_holds: bool,
    /// `max_delta <= k max_delta_last`.
    pub interpolation_holds: bool,
    /// `max_delta_last <= 2 max_tail_tv`.
    pub tail_holds: bool,
}

/// Evaluates both sides of every inequality in the reduction chain.
pub fn reduction_chain(g: &Graph, k: usize, t: f64) -> Result<ReductionChain> {
    if k < 2 {
        return Err(Error::InvalidArgument("the reduction chain needs k >= 2".into()));
    }
    let ex = build_exact(g, k, ProcessKind::Ex)?;
    let ip = build_exact(g, k, ProcessKind::Ip)?;
    let ipm = build_exact(g, k - 1, ProcessKind::Ip)?;
    let m = ip.n_states();
    let rows: Vec<Vec<f64>> = (0..m).map(|x| ip.distribution(x, t)).collect();
    let ex_tv = (0..ex.n_states()).map(|x| ex.exact_tv(x, t)).fold(0.0, f64::max);
    let ip_tv = rows.iter().map(|r| ip.tv_to_uniform(r)).fold(0.0, f64::max);
    let tv = |a: &[f64], b: &[f64]| 0.5 * a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum::<f64>();
    let mut max_delta: f64 = 0.0;
    let mut max_delta_last: f64 = 0.0;
    for x in 0..m {
        for y in (x + 1)..m {
            let d = tv(&rows[x], &rows[y]);
            max_delta = max_delta.max(d);
            if ip.states[x][..k - 1] == ip.states[y][..k - 1] {
                max_delta_last = max_delta_last.max(d);
            }
        }
    }
    let n = g.n();
    let free = (n - (k - 1)) as f64;
    let mut max_tail_tv: f64 = 0.0;
    for x in 0..m {
        let w = &ip.states[x][..k - 1];
        let wi = ipm.state_index(w).expect("prefix is a valid state");
        let q = ipm.distribution(wi, t);
        let mut reference = vec![0.0; m];
        for (j, s) in ip.states.iter().enumerate() {
            let pj = ipm.state_index(&s[..k - 1]).expect("prefix is a valid state");
            reference[j] = q[pj] / free;
        }
        max_tail_tv = max_tail_tv.max(tv(&rows[x], &reference));
    }
    let tol = 1e-10;
    Ok(ReductionChain {
        t,
        k,
        ex_tv,
        ip_tv,
        max_delta,
        max_delta_last,
        max_tail_tv,
        contraction_holds: ex_tv <= ip_tv + tol && ip_tv <= max_delta + tol,
        interpolation_holds: max_delta <= k as f64 * max_delta_last + tol,
        tail_holds: max_delta_last <= 2.0 * max_tail_tv + tol,
    })
}

/// Spectral gaps of the exact processes against the single-walk gap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapRow {
    pub k: usize,
    pub kind: ProcessKind,
    pub gap: f64,
    pub rw1_gap: f64,
    pub discrepancy: f64,
}

/// Computes `gap(EX(k))` and `gap(IP(k))` for each `k` and compares with the
/// single-walk gap.
pub fn aldous_check(g: &Graph, k_list: &[usize]) -> Result<Vec<GapRow>> {
    let rw1 = build_exact(g, 1, ProcessKind::Rw)?.gap()?;
    let mut rows = Vec::new();
    for &k in k_list {
        for kind in [ProcessKind::Ex, ProcessKind::Ip] {
            let gap = build_exact(g, k, kind)?.gap()?;
            rows.push(GapRow { k, kind, gap, rw1_gap: rw1, discrepancy: (gap - rw1).abs() });
        }
    }
    Ok(rows)
}

/// One time point of the interchange-versus-independent-walks probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRow {
    pub t: f64,
    /// Worst-start `IP(k)` TV.
    pub tv_ip: f64,
    /// Worst-start `RW(k)` TV over the same distinct-coordinate starts.
    pub tv_rw: f64,
    /// Some start has `IP(k)` TV above its `RW(k)` TV.
    pub flagged: bool,
}

/// Compares `IP(k)` and `RW(k)` TV distances from every common start.
pub fn interchange_probe(g: &Graph, sd: &SpectralData, k: usize, t_grid: &[f64]) -> Result<Vec<ProbeRow>> {
    let ip = build_exact(g, k, ProcessKind::Ip)?;
    let reps = ip.start_representatives();
    let mut out = Vec::new();
    let mut prop = Propagator::new(&ip);
    for &t in t_grid {
        let mut tv_ip: f64 = 0.0;
        let mut tv_rw: f64 = 0.0;
        let mut flagged = false;
        for &x in &reps {
            let a = prop.tv(&ip, x, t);
            let b = rw_k_tv(sd, &ip.states[x], t);
            tv_ip = tv_ip.max(a);
            tv_rw = tv_rw.max(b);
            flagged |= a > b + 1e-12;
        }
        out.push(ProbeRow { t, tv_ip, tv_rw, flagged });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral;

    #[test]
    fn state_counts_on_c4() {
        let g = graph::cycle(4).unwrap();
        assert_eq!(build_exact(&g, 2, ProcessKind::Ex).unwrap().n_states(), 6);
        assert_eq!(build_exact(&g, 2, ProcessKind::Ip).unwrap().n_states(), 12);
        assert_eq!(state_count(4, 2, ProcessKind::Rw), Some(16));
    }

    #[test]
    fn point_start_tv_at_zero() {
        let g = graph::cycle(5).unwrap();
        let ex = build_exact(&g, 2, ProcessKind::Ex).unwrap();
        assert!((ex.exact_tv(0, 0.0) - (1.0 - 1.0 / 10.0)).abs() < 1e-15);
    }

    #[test]
    fn ex1_mixing_equals_single_walk() {
        let g = graph::cycle(6).unwrap();
        let sd = spectral::eigendecompose(&g).unwrap();
        let ex = build_exact(&g, 1, ProcessKind::Ex).unwrap();
        let a = ex.mix_time(0.25).unwrap().value;
        let b = spectral::t_mix(&sd, 0.25).value;
        assert!((a - b).abs() < 1e-5 * b);
    }

    #[test]
    fn uniformisation_matches_dense_exponential() {
        let g = graph::cycle(6).unwrap();
        let ip = build_exact(&g, 2, ProcessKind::Ip).unwrap();
        let dense = ip.distribution(3, 0.8);
        let mut mu = vec![0.0; ip.n_states()];
        mu[3] = 1.0;
        let mut series = UniformSeries::new(&ip, mu);
        let unif = series.at(&ip, 0.8);
        let err = dense.iter().zip(&unif).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "max difference {err}");
    }

    #[test]
    fn rw_product_tv_matches_enumerated_chain() {
        let g = graph::cycle(4).unwrap();
        let sd = spectral::eigendecompose(&g).unwrap();
        let rw = build_exact(&g, 2, ProcessKind::Rw).unwrap();
        let start = rw.state_index(&[0, 1]).unwrap();
        let a = rw.exact_tv(start, 0.7);
        let b = rw_k_tv(&sd, &[0, 1], 0.7);
        assert!((a - b).abs() < 1e-12);
    }
}
