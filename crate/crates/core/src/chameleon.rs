//! The chameleon process and its reduced ink chains.
//!
//! A run keeps one particle per vertex. The `k - 1` black particles are
//! labeled and follow the interchange process; the remaining particles are
//! red, pink or white. Rounds consist of a constant-colour relaxation phase
//! followed by a unit pinkening phase, after which the pink particles are
//! depinked. Goodness of a configuration is decided by a nested Monte Carlo
//! estimate that is memoised per colour configuration.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, ProcessKind};
use crate::graph::Graph;
use crate::profile::ProfileTable;
use crate::rng::{self, TrialRng};
use crate::simulate::{stream_rate, Mode, EMPTY};
use crate::spectral::{self, SpectralData};
use crate::stats::{self, Estimate};

/// Default number of inner trials of the goodness estimator.
pub const DEFAULT_GOODNESS_TRIALS: usize = 2000;

/// Runs are truncated after this many multiples of the expected number of
/// rounds to absorption.
pub const TRUNCATION_FACTOR: f64 = 50.0;

/// Tolerance used when rounding `α m` up to an integer.
const CEIL_TOL: f64 = 1e-9;

/// Fewer filled runs than this make the missing-ink report unreliable.
pub const MIN_FILLED_RUNS: usize = 100;

fn ceil_tol(x: f64) -> usize {
    (x - CEIL_TOL).ceil().max(0.0) as usize
}

/// Colour of the particle sitting on a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Colour {
    Black = 0,
    Red = 1,
    Pink = 2,
    White = 3,
}

/// Which part of the schedule the process is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    BurnIn,
    ConstantColour,
    Pinkening,
    AtDepinking,
}

/// Full state of a chameleon run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChameleonState {
    /// Colour of the particle at each vertex.
    pub colour: Vec<Colour>,
    /// `z[j]` is the vertex of black particle `j`.
    pub z: Vec<usize>,
    /// Label of the black particle at a vertex, or [`EMPTY`].
    black_label: Vec<usize>,
    pub red: usize,
    pub pink: usize,
    pub white: usize,
    pub round_index: usize,
    pub phase: Phase,
}

impl ChameleonState {
    /// Blacks at `w`, a single red particle at `y`, white elsewhere.
    pub fn new(n: usize, w: &[usize], y: usize) -> Result<Self> {
        if y >= n {
            return Err(Error::InvalidArgument(format!("vertex {y} out of range")));
        }
        let mut colour = vec![Colour::White; n];
        let mut black_label = vec![EMPTY; n];
        for (j, &v) in w.iter().enumerate() {
            if v >= n {
                return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
            }
            if black_label[v] != EMPTY {
                return Err(Error::InvalidArgument(format!("black vertices repeat {v}")));
            }
            black_label[v] = j;
            colour[v] = Colour::Black;
        }
        if black_label[y] != EMPTY {
            return Err(Error::InvalidArgument(format!("red vertex {y} is occupied by a black particle")));
        }
        if w.len() + 1 >= n {
            return Err(Error::InvalidArgument(format!(
                "need at least one white particle: {} blacks and one red on {n} vertices",
                w.len()
            )));
        }
        colour[y] = Colour::Red;
        Ok(ChameleonState {
            colour,
            z: w.to_vec(),
            black_label,
            red: 1,
            pink: 0,
            white: n - w.len() - 1,
            round_index: 0,
            phase: Phase::BurnIn,
        })
    }

    pub fn n(&self) -> usize {
        self.colour.len()
    }

    /// `|R| + |K| / 2`.
    pub fn ink(&self) -> f64 {
        self.red as f64 + 0.5 * self.pink as f64
    }

    /// Ink carried by the particle at `v`.
    pub fn ink_at(&self, v: usize) -> f64 {
        match self.colour[v] {
            Colour::Red => 1.0,
            Colour::Pink => 0.5,
            _ => 0.0,
        }
    }

    /// Number of non-black particles.
    pub fn free(&self) -> usize {
        self.red + self.pink + self.white
    }

    pub fn absorbed(&self) -> bool {
        self.pink == 0 && (self.red == 0 || self.white == 0)
    }

    #[inline]
    fn swap(&mut self, a: usize, b: usize) {
        self.colour.swap(a, b);
        let (la, lb) = (self.black_label[a], self.black_label[b]);
        if la != EMPTY || lb != EMPTY {
            self.black_label[a] = lb;
            self.black_label[b] = la;
            if la != EMPTY {
                self.z[la] = b;
            }
            if lb != EMPTY {
                self.z[lb] = a;
            }
        }
    }

    /// Colour vector with black particles unlabeled, used as the goodness key.
    pub fn colour_key(&self) -> Vec<u8> {
        self.colour.iter().map(|&c| c as u8).collect()
    }

    /// Checks that colours, counts and black labels describe a partition.
    pub fn check_partition(&self) -> Result<()> {
        let mut counts = [0usize; 4];
        for &c in &self.colour {
            counts[c as usize] += 1;
        }
        let ok_counts = counts[0] == self.z.len()
            && counts[1] == self.red
            && counts[2] == self.pink
            && counts[3] == self.white;
        let ok_labels = self.z.iter().enumerate().all(|(j, &v)| self.black_label[v] == j && self.colour[v] == Colour::Black);
        if ok_counts && ok_labels {
            Ok(())
        } else {
            Err(Error::Numerical(format!("chameleon partition broken: counts {counts:?}")))
        }
    }
}

/// Round durations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundSchedule {
    /// Every round lasts `t_round`.
    Fixed { t_round: f64 },
    /// A round starting with `r` red particles lasts `levels[i]` where
    /// `r ∧ (N - r)` lies in `(2^(i-1), 2^i]`.
    Variable { levels: Vec<f64> },
}

/// Parameters of the chameleon process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundParams {
    pub alpha: f64,
    pub schedule: RoundSchedule,
    pub burn_in: f64,
    pub goodness_trials: usize,
    /// Master seed of the memoised goodness estimates.
    pub seed: u64,
    /// Rounds plus burn-ins after which a run is declared truncated.
    pub max_steps: usize,
    /// Admit irregular graphs (the edge rate is then `1 / d_max`).
    pub allow_irregular: bool,
}

impl RoundParams {
    /// Fixed-round parameters: `t_round = C_round (t_*(ε) + s_*(ε) + rel) + 1`
    /// and burn-ins of length `t_mix^∞(n^-10)`.
    pub fn fixed(sd: &SpectralData, k: usize, alpha: f64, eps: f64, c_round: f64, seed: u64) -> Result<Self> {
        let n = sd.n();
        let t_star = spectral::t_star(sd, eps);
        let s_star = spectral::s_star(sd, eps);
        if !t_star.bracketed || !s_star.bracketed {
            return Err(Error::Numerical("t_* or s_* did not bracket".into()));
        }
        let t_round = c_round * (t_star.value + s_star.value + sd.rel()) + 1.0;
        let burn_in = spectral::t_mix_linf(sd, (n as f64).powi(-10)).value;
        let p = RoundParams {
            alpha,
            schedule: RoundSchedule::Fixed { t_round },
            burn_in,
            goodness_trials: DEFAULT_GOODNESS_TRIALS,
            seed,
            max_steps: default_max_steps(n, k, alpha)?,
            allow_irregular: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Variable-round parameters: `L_i = C_round / Λ(C_profile 2^i / n) + 1`
    /// and burn-ins of length `t_mix^∞(ĉ / k)`.
    #[allow(clippy::too_many_arguments)]
    pub fn variable(
        sd: &SpectralData,
        table: &ProfileTable,
        k: usize,
        alpha: f64,
        c_round: f64,
        c_profile: f64,
        c_hat: f64,
        seed: u64,
    ) -> Result<Self> {
        let n = sd.n();
        let levels = variable_levels(table, n, n - k + 1, c_round, c_profile);
        let burn_in = spectral::t_mix_linf(sd, c_hat / k as f64).value;
        let p = RoundParams {
            alpha,
            schedule: RoundSchedule::Variable { levels },
            burn_in,
            goodness_trials: DEFAULT_GOODNESS_TRIALS,
            seed,
            max_steps: default_max_steps(n, k, alpha)?,
            allow_irregular: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.25) {
            return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1/4)", self.alpha)));
        }
        let lengths: Vec<f64> = match &self.schedule {
            RoundSchedule::Fixed { t_round } => vec![*t_round],
            RoundSchedule::Variable { levels } => levels.clone(),
        };
        if lengths.is_empty() || lengths.iter().any(|&l| !(l > 1.0) || !l.is_finite()) {
            return Err(Error::InvalidArgument(format!("round lengths {lengths:?} must be finite and exceed 1")));
        }
        if !(self.burn_in > 0.0 && self.burn_in.is_finite()) {
            return Err(Error::InvalidArgument(format!("burn-in {} must be positive", self.burn_in)));
        }
        if self.goodness_trials == 0 {
            return Err(Error::InvalidArgument("goodness needs at least one trial".into()));
        }
        Ok(())
    }

    /// Duration of a round that starts with `r` red among `n_free` particles.
    pub fn round_length(&self, r: usize, n_free: usize) -> f64 {
        match &self.schedule {
            RoundSchedule::Fixed { t_round } => *t_round,
            RoundSchedule::Variable { levels } => levels[level_of(r, n_free).min(levels.len() - 1)],
        }
    }
}

/// Index `i` with `r ∧ (N - r) ∈ (2^(i-1), 2^i]`.
pub fn level_of(r: usize, n_free: usize) -> usize {
    let x = r.min(n_free - r).max(1);
    (usize::BITS - (x - 1).leading_zeros()) as usize
}

/// `L_i = C_round / Λ(C_profile 2^i / n) + 1` for `i = 0..=⌈log2(N/2)⌉`,
/// using the lower bracket of `Λ`.
pub fn variable_levels(table: &ProfileTable, n: usize, n_free: usize, c_round: f64, c_profile: f64) -> Vec<f64> {
    let top = level_of(n_free / 2, n_free).max(level_of(n_free.div_ceil(2), n_free));
    (0..=top)
        .map(|i| {
            let lambda = table.lambda(c_profile * (1u64 << i) as f64 / n as f64).lower;
            c_round / lambda + 1.0
        })
        .collect()
}

/// `max(50, ⌈50 E[rounds]⌉)` for the ink chain started at one red particle.
pub fn default_max_steps(n: usize, k: usize, alpha: f64) -> Result<usize> {
    let chain = DoobChain::new(n - k + 1, alpha)?;
    Ok(((TRUNCATION_FACTOR * chain.expected_rounds(1)?).ceil() as usize).max(50))
}

/// Nested Monte Carlo estimate of `H_t` and `p(M, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessEstimate {
    pub h_mean: f64,
    pub h_stderr: f64,
    pub p_hat: f64,
    pub good: bool,
    /// `|R| ∧ |W|`.
    pub m: usize,
}

/// Estimates `E[H_t]` and `Pr[H_t ≥ α m]` for a configuration without pink
/// particles by running the uncoloured dynamics for `t` and then marking
/// red-white pairs that ring during the following unit of time.
pub fn estimate_goodness(g: &Graph, colours: &[Colour], t: f64, alpha: f64, trials: usize, seed: u64) -> Result<GoodnessEstimate> {
    if colours.len() != g.n() {
        return Err(Error::InvalidArgument("colour vector length differs from n".into()));
    }
    if colours.contains(&Colour::Pink) {
        return Err(Error::InvalidArgument("goodness is defined for configurations without pink".into()));
    }
    if trials == 0 || !(t >= 0.0) {
        return Err(Error::InvalidArgument("need trials >= 1 and t >= 0".into()));
    }
    let red = colours.iter().filter(|&&c| c == Colour::Red).count();
    let white = colours.iter().filter(|&&c| c == Colour::White).count();
    let m = red.min(white);
    if m == 0 {
        return Ok(GoodnessEstimate { h_mean: 0.0, h_stderr: 0.0, p_hat: 0.0, good: false, m });
    }
    let threshold = ceil_tol(alpha * m as f64) as u64;
    let edges = g.edges();
    let std_clock = Exp::new(stream_rate(g, Mode::Standard)).expect("positive rate");
    let mod_clock = Exp::new(stream_rate(g, Mode::Modified)).expect("positive rate");
    let hs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let mut col: Vec<Colour> = colours.to_vec();
            let mut s = std_clock.sample(&mut rng);
            while s <= t {
                let (a, b) = edges[rng.random_range(0..edges.len())];
                col.swap(a, b);
                s += std_clock.sample(&mut rng);
            }
            let mut marked = vec![false; col.len()];
            let mut h = 0u64;
            let mut s = mod_clock.sample(&mut rng);
            while s <= 1.0 {
                let (a, b) = edges[rng.random_range(0..edges.len())];
                let coin: bool = rng.random();
                if !marked[a] && !marked[b] && red_white(col[a], col[b]) {
                    marked[a] = true;
                    marked[b] = true;
                    h += 1;
                }
                if coin {
                    col.swap(a, b);
                    marked.swap(a, b);
                }
                s += mod_clock.sample(&mut rng);
            }
            h as f64
        })
        .collect();
    let e = stats::estimate(&hs);
    let p_hat = hs.iter().filter(|&&h| h as u64 >= threshold).count() as f64 / trials as f64;
    Ok(GoodnessEstimate {
        h_mean: e.mean,
        h_stderr: e.stderr,
        p_hat,
        good: e.mean >= 2.0 * alpha * m as f64,
        m,
    })
}

#[inline]
fn red_white(a: Colour, b: Colour) -> bool {
    matches!((a, b), (Colour::Red, Colour::White) | (Colour::White, Colour::Red))
}

/// How a depinking resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepinkKind {
    /// All pink became red (`coin = true`) or white.
    Type1 { coin: bool },
    /// Pink split uniformly into halves.
    Type2,
}

/// Outcome of one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub start: f64,
    pub red_start: usize,
    pub cap: usize,
    /// Whether pinkening reached the cap.
    pub full: bool,
    /// Biased coin `d̂_i`; false when not full.
    pub biased_coin: bool,
    pub kind: DepinkKind,
    pub ink_after: f64,
    /// Burn-in periods completed before this round ended.
    pub burn_ins_so_far: usize,
}

/// Terminal status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fill {
    Filled,
    Emptied,
    Truncated,
}

/// State snapshot at an observation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub z: Vec<usize>,
    /// Ink carried at each vertex.
    pub ink: Vec<f64>,
}

/// Everything recorded about one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChameleonRunRecord {
    /// `(t, ink_t)` at the start and after every depinking.
    pub ink_samples: Vec<(f64, f64)>,
    pub rounds: Vec<RoundRecord>,
    pub burn_ins: usize,
    /// Round starts where `p̂ < α/2` forced an extra burn-in.
    pub low_p_hat_flags: usize,
    pub fill: Fill,
    pub end_time: f64,
    pub observations: Vec<Observation>,
}

impl ChameleonRunRecord {
    /// Ink after `i` rounds, holding the final value after absorption.
    pub fn ink_after_round(&self, i: usize) -> f64 {
        if i == 0 {
            self.ink_samples[0].1
        } else if i <= self.rounds.len() {
            self.rounds[i - 1].ink_after
        } else {
            self.rounds.last().map_or(self.ink_samples[0].1, |r| r.ink_after)
        }
    }

    /// Whether a burn-in beyond the initial one happened by the end of round `i`.
    pub fn extra_burn_in_by_round(&self, i: usize) -> bool {
        if i == 0 {
            return false;
        }
        match self.rounds.get(i.min(self.rounds.len()).wrapping_sub(1)) {
            Some(r) => r.burn_ins_so_far > 1,
            None => self.burn_ins > 1,
        }
    }
}

/// Memoised goodness decisions keyed by colour configuration and phase length.
#[derive(Debug, Default)]
pub struct GoodnessCache {
    map: Mutex<HashMap<Vec<u8>, GoodnessEstimate>>,
}

impl GoodnessCache {
    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A chameleon process on a fixed graph with fixed parameters.
#[derive(Debug)]
pub struct Chameleon<'a> {
    g: &'a Graph,
    k: usize,
    params: RoundParams,
    cache: GoodnessCache,
}

enum Verdict {
    Good(GoodnessEstimate),
    NotGood,
    LowPHat,
}

struct Runner<'r, 'a> {
    ch: &'r Chameleon<'a>,
    state: ChameleonState,
    now: f64,
    rng: TrialRng,
    std_clock: Exp<f64>,
    mod_clock: Exp<f64>,
    observe: &'r [f64],
    next_obs: usize,
    observations: Vec<Observation>,
}

impl Runner<'_, '_> {
    fn flush_observations(&mut self, before: f64, inclusive: bool) {
        while self.next_obs < self.observe.len() {
            let t = self.observe[self.next_obs];
            if t < before || (inclusive && t <= before) {
                self.observations.push(Observation {
                    t,
                    z: self.state.z.clone(),
                    ink: (0..self.state.n()).map(|v| self.state.ink_at(v)).collect(),
                });
                self.next_obs += 1;
            } else {
                break;
            }
        }
    }

    /// Uncoloured dynamics at the standard rate for `duration`.
    fn relax(&mut self, duration: f64) {
        let edges = self.ch.g.edges();
        let end = self.now + duration;
        let mut s = self.now + self.std_clock.sample(&mut self.rng);
        while s <= end {
            self.flush_observations(s, false);
            let (a, b) = edges[self.rng.random_range(0..edges.len())];
            self.state.swap(a, b);
            s += self.std_clock.sample(&mut self.rng);
        }
        self.flush_observations(end, false);
        self.now = end;
    }

    /// Unit pinkening phase on the modified stream with the given cap.
    fn pinken(&mut self, cap: usize) {
        let edges = self.ch.g.edges();
        let end = self.now + 1.0;
        let mut s = self.now + self.mod_clock.sample(&mut self.rng);
        while s <= end {
            self.flush_observations(s, false);
            let (a, b) = edges[self.rng.random_range(0..edges.len())];
            let coin: bool = self.rng.random();
            let st = &mut self.state;
            if st.pink < cap && red_white(st.colour[a], st.colour[b]) {
                st.colour[a] = Colour::Pink;
                st.colour[b] = Colour::Pink;
                st.red -= 1;
                st.white -= 1;
                st.pink += 2;
            } else if coin {
                st.swap(a, b);
            }
            s += self.mod_clock.sample(&mut self.rng);
        }
        self.flush_observations(end, false);
        self.now = end;
    }

    fn goodness(&self, t: f64) -> Result<GoodnessEstimate> {
        let mut key = self.state.colour_key();
        key.extend_from_slice(&t.to_bits().to_le_bytes());
        if let Some(e) = self.ch.cache.map.lock().expect("cache lock").get(&key) {
            return Ok(*e);
        }
        let p = &self.ch.params;
        let seed = rng::keyed_seed(p.seed, &key);
        let e = estimate_goodness(self.ch.g, &self.state.colour, t, p.alpha, p.goodness_trials, seed)?;
        self.ch.cache.map.lock().expect("cache lock").insert(key, e);
        Ok(e)
    }

    fn classify(&self) -> Result<Verdict> {
        let n_free = self.state.free();
        let t = self.ch.params.round_length(self.state.red, n_free) - 1.0;
        let e = self.goodness(t)?;
        Ok(if !e.good {
            Verdict::NotGood
        } else if e.p_hat < self.ch.params.alpha / 2.0 {
            Verdict::LowPHat
        } else {
            Verdict::Good(e)
        })
    }
}

impl<'a> Chameleon<'a> {
    pub fn new(g: &'a Graph, k: usize, params: RoundParams) -> Result<Self> {
        params.validate()?;
        if !params.allow_irregular {
            g.require_regular()?;
        }
        if k == 0 || k + 1 > g.n() {
            return Err(Error::InvalidArgument(format!("k = {k} needs 1 <= k < n = {}", g.n())));
        }
        Ok(Chameleon { g, k, params, cache: GoodnessCache::default() })
    }

    pub fn params(&self) -> &RoundParams {
        &self.params
    }

    pub fn cache(&self) -> &GoodnessCache {
        &self.cache
    }

    /// Number of non-black particles `n - k + 1`.
    pub fn n_free(&self) -> usize {
        self.g.n() - self.k + 1
    }

    /// One run from blacks at `w` and a red particle at `y`, recording the
    /// state at each (sorted) time in `observe`.
    pub fn run(&self, w: &[usize], y: usize, observe: &[f64], seed: u64) -> Result<ChameleonRunRecord> {
        if w.len() + 1 != self.k {
            return Err(Error::InvalidArgument(format!("expected {} black vertices, got {}", self.k - 1, w.len())));
        }
        if observe.windows(2).any(|p| p[0] > p[1]) || observe.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidArgument("observation times must be sorted and nonnegative".into()));
        }
        let state = ChameleonState::new(self.g.n(), w, y)?;
        let p = &self.params;
        let n_free = self.n_free();
        let mut run = Runner {
            ch: self,
            state,
            now: 0.0,
            rng: rng::stream(seed, 0),
            std_clock: Exp::new(stream_rate(self.g, Mode::Standard)).expect("positive rate"),
            mod_clock: Exp::new(stream_rate(self.g, Mode::Modified)).expect("positive rate"),
            observe,
            next_obs: 0,
            observations: Vec::new(),
        };
        run.flush_observations(0.0, false);
        let mut ink_samples = vec![(0.0, run.state.ink())];
        let mut rounds = Vec::new();
        let mut burn_ins = 0usize;
        let mut low_p_hat_flags = 0usize;
        let mut steps = 0usize;
        let mut truncated = false;
        let mut need_burn_in = true;

        'outer: while !run.state.absorbed() {
            // Burn-ins until a good configuration is reached.
            let good = loop {
                if need_burn_in {
                    if steps >= p.max_steps {
                        truncated = true;
                        break 'outer;
                    }
                    run.state.phase = Phase::BurnIn;
                    run.relax(p.burn_in);
                    burn_ins += 1;
                    steps += 1;
                }
                match run.classify()? {
                    Verdict::Good(e) => break e,
                    Verdict::NotGood => need_burn_in = true,
                    Verdict::LowPHat => {
                        low_p_hat_flags += 1;
                        need_burn_in = true;
                    }
                }
            };
            if steps >= p.max_steps {
                truncated = true;
                break;
            }
            steps += 1;
            let start = run.now;
            let red_start = run.state.red;
            let m = red_start.min(run.state.white);
            let cap = 2 * ceil_tol(p.alpha * m as f64);
            let length = p.round_length(red_start, n_free);
            run.state.phase = Phase::ConstantColour;
            run.relax(length - 1.0);
            run.state.phase = Phase::Pinkening;
            run.pinken(cap);
            run.state.phase = Phase::AtDepinking;
            if run.state.pink > cap {
                return Err(Error::CapExceeded { what: "pink set".into(), size: run.state.pink, cap });
            }
            let full = run.state.pink == cap;
            let q = (p.alpha / 2.0) / good.p_hat;
            let biased_coin = full && run.rng.random::<f64>() < q;
            let kind = depink(&mut run.state, biased_coin, &mut run.rng);
            #[cfg(debug_assertions)]
            run.state.check_partition()?;
            run.state.round_index += 1;
            rounds.push(RoundRecord {
                start,
                red_start,
                cap,
                full,
                biased_coin,
                kind,
                ink_after: run.state.ink(),
                burn_ins_so_far: burn_ins,
            });
            ink_samples.push((run.now, run.state.ink()));
            run.flush_observations(run.now, true);
            need_burn_in = false;
        }
        let fill = if truncated {
            Fill::Truncated
        } else if run.state.red == 0 {
            Fill::Emptied
        } else {
            Fill::Filled
        };
        let end_time = run.now;
        if let Some(&last) = observe.last() {
            if last > run.now {
                run.relax(last - run.now);
            }
            run.flush_observations(f64::INFINITY, true);
        }
        Ok(ChameleonRunRecord { ink_samples, rounds, burn_ins, low_p_hat_flags, fill, end_time, observations: run.observations })
    }

    /// Runs `trials` independent copies in parallel and summarises each
    /// record with `f`, keeping memory proportional to the summaries.
    pub fn run_many<T: Send>(
        &self,
        w: &[usize],
        y: usize,
        observe: &[f64],
        trials: usize,
        seed: u64,
        f: impl Fn(ChameleonRunRecord) -> T + Sync,
    ) -> Result<Vec<T>> {
        (0..trials)
            .into_par_iter()
            .map(|i| self.run(w, y, observe, rng::mix(seed, i as u64)).map(&f))
            .collect()
    }
}

fn depink(st: &mut ChameleonState, biased_coin: bool, rng: &mut TrialRng) -> DepinkKind {
    let pinks: Vec<usize> = (0..st.n()).filter(|&v| st.colour[v] == Colour::Pink).collect();
    let kind = if biased_coin {
        let coin: bool = rng.random();
        let c = if coin { Colour::Red } else { Colour::White };
        for &v in &pinks {
            st.colour[v] = c;
        }
        if coin {
            st.red += pinks.len();
        } else {
            st.white += pinks.len();
        }
        DepinkKind::Type1 { coin }
    } else {
        let mut order = pinks.clone();
        order.shuffle(rng);
        let half = order.len() / 2;
        for (i, &v) in order.iter().enumerate() {
            st.colour[v] = if i < half { Colour::Red } else { Colour::White };
        }
        st.red += half;
        st.white += order.len() - half;
        DepinkKind::Type2
    };
    st.pink = 0;
    kind
}

/// Single run with a fresh goodness cache.
pub fn run_chameleon(g: &Graph, w: &[usize], y: usize, params: &RoundParams, observe: &[f64], seed: u64) -> Result<ChameleonRunRecord> {
    Chameleon::new(g, w.len() + 1, params.clone())?.run(w, y, observe, seed)
}

/// Monte Carlo against exact value of `E[ink_t(b) 1{z(t) = c}]` for one
/// interchange state `(c, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InkIdentityRow {
    pub t: f64,
    pub c: Vec<usize>,
    pub b: usize,
    pub mc_value: f64,
    pub stderr: f64,
    pub exact_value: f64,
    pub z_score: f64,
}

/// Compares the chameleon ink at each `(c, b)` with the exact law of the
/// `k`-particle interchange process started from `(w, y)`, for every time in
/// `times` and every interchange state.
pub fn verify_ink_identity(
    g: &Graph,
    w: &[usize],
    y: usize,
    params: &RoundParams,
    times: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<InkIdentityRow>> {
    let k = w.len() + 1;
    let ip = exact::build_exact(g, k, ProcessKind::Ip)?;
    let mut start = w.to_vec();
    start.push(y);
    let init = ip
        .state_index(&start)
        .ok_or_else(|| Error::InvalidArgument("start is not an interchange state".into()))?;
    let ch = Chameleon::new(g, k, params.clone())?;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ns = ip.n_states();
    let samples = ch.run_many(w, y, &sorted, trials, seed, |rec| {
        rec.observations
            .iter()
            .map(|o| {
                let mut contrib = Vec::with_capacity(o.ink.len());
                let mut s = o.z.clone();
                s.push(0);
                for (b, &ink) in o.ink.iter().enumerate() {
                    if ink > 0.0 {
                        s[k - 1] = b;
                        contrib.push((ip.state_index(&s).expect("valid state"), ink));
                    }
                }
                contrib
            })
            .collect::<Vec<_>>()
    })?;
    let mut rows = Vec::new();
    for (ti, &t) in sorted.iter().enumerate() {
        let mut sum = vec![0.0; ns];
        let mut sumsq = vec![0.0; ns];
        for s in &samples {
            for &(idx, v) in &s[ti] {
                sum[idx] += v;
                sumsq[idx] += v * v;
            }
        }
        let exact_dist = ip.distribution(init, t);
        let nt = trials as f64;
        for idx in 0..ns {
            let mean = sum[idx] / nt;
            let var = (sumsq[idx] / nt - mean * mean).max(0.0) * nt / (nt - 1.0).max(1.0);
            // Each observation lies in [0, 1], so p (1 - p) bounds its variance
            // under the exact law; the floor keeps rarely visited states from
            // producing a zero standard error.
            let p = exact_dist[idx];
            let stderr = (var / nt).sqrt().max((p * (1.0 - p) / nt).sqrt());
            let est = Estimate { mean, stderr, samples: trials };
            let state = &ip.states()[idx];
            rows.push(InkIdentityRow {
                t,
                c: state[..k - 1].to_vec(),
                b: state[k - 1],
                mc_value: mean,
                stderr: est.stderr,
                exact_value: exact_dist[idx],
                z_score: est.z_score(exact_dist[idx]),
            });
        }
    }
    Ok(rows)
}

/// The ink chain conditioned on filling, on the states `1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoobChain {
    /// `N = n - k + 1`.
    pub size: usize,
    pub alpha: f64,
    /// Probability `α / 2` of a type-1 depinking.
    pub p: f64,
}

/// Result of the exhaustive drift computation for `Z = √(I ∧ (1-I)) / I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupermartingaleReport {
    /// `ratios[r - 1] = E[Z_next | r] / Z(r)` for `r = 1..N-1`.
    pub ratios: Vec<f64>,
    pub c: f64,
}

impl SupermartingaleReport {
    pub fn holds(&self) -> bool {
        self.c < 1.0
    }
}

/// Path of the holding-time chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YhatPath {
    /// `(time, state)` at the start and after every step.
    pub jumps: Vec<(f64, usize)>,
    /// States of the embedded chain, including lazy steps.
    pub embedded: Vec<usize>,
    pub absorbed: bool,
}

/// Tail statistics of one embedded path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    /// `t_up[i]` is the first step with `Y ≥ 2^i ∧ m`, for `i = 0..=ℓ̂`.
    pub t_up: Vec<Option<usize>>,
    /// First step with `Y < m`.
    pub t_below_m: Option<usize>,
    /// Steps between `T_ℓ̂↑` and the start of the final stretch at or above `m`.
    pub s: Option<usize>,
    /// Number of down-crossings of `m`.
    pub cross: usize,
}

impl DoobChain {
    pub fn new(size: usize, alpha: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidArgument(format!("ink chain needs N >= 2, got {size}")));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1/2)")));
        }
        Ok(DoobChain { size, alpha, p: alpha / 2.0 })
    }

    /// `Δ(r) = ⌈α (r ∧ (N - r))⌉`.
    pub fn delta(&self, r: usize) -> usize {
        ceil_tol(self.alpha * r.min(self.size - r) as f64)
    }

    /// Conditioned transition row `(state, probability)`.
    pub fn row(&self, r: usize) -> Vec<(usize, f64)> {
        assert!(r >= 1 && r <= self.size, "state {r} outside 1..={}", self.size);
        if r == self.size {
            return vec![(r, 1.0)];
        }
        let d = self.delta(r);
        let rf = r as f64;
        let mut row = vec![(r + d, (rf + d as f64) / (2.0 * rf) * self.p), (r, 1.0 - self.p)];
        if r > d {
            row.push((r - d, (rf - d as f64) / (2.0 * rf) * self.p));
        }
        row
    }

    /// Unconditioned ink chain row on `0..=N`.
    pub fn ink_row(&self, r: usize) -> Vec<(usize, f64)> {
        if r == 0 || r == self.size {
            return vec![(r, 1.0)];
        }
        let d = self.delta(r);
        vec![(r + d, self.p / 2.0), (r - d, self.p / 2.0), (r, 1.0 - self.p)]
    }

    /// `Z(r) = √(I ∧ (1 - I)) / I` with `I = r / N`.
    pub fn z(&self, r: usize) -> f64 {
        let i = r as f64 / self.size as f64;
        i.min(1.0 - i).max(0.0).sqrt() / i
    }

    /// Exhaustive one-step drift ratios of `Z` over the transient states.
    pub fn supermartingale_verify(&self) -> SupermartingaleReport {
        let ratios: Vec<f64> = (1..self.size)
            .map(|r| self.row(r).iter().map(|&(s, q)| q * self.z(s)).sum::<f64>() / self.z(r))
            .collect();
        let c = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        SupermartingaleReport { ratios, c }
    }

    /// Expected number of rounds for the unconditioned ink chain started at
    /// `start` to hit `0` or `N`.
    pub fn expected_rounds(&self, start: usize) -> Result<f64> {
        let m = self.size - 1;
        if start == 0 || start >= self.size {
            return Ok(0.0);
        }
        let mut a = DMatrix::<f64>::identity(m, m);
        for r in 1..self.size {
            for (s, q) in self.ink_row(r) {
                if s >= 1 && s < self.size {
                    a[(r - 1, s - 1)] -= q;
                }
            }
        }
        let h = a
            .lu()
            .solve(&DVector::from_element(m, 1.0))
            .ok_or_else(|| Error::Numerical("singular absorption system".into()))?;
        Ok(h[start - 1])
    }

    pub fn step(&self, r: usize, rng: &mut TrialRng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let row = self.row(r);
        for &(s, q) in &row {
            acc += q;
            if u < acc {
                return s;
            }
        }
        row[row.len() - 1].0
    }

    /// `E[1 - I_i]` for `i = 0..=steps` from `Y_0 = 1`.
    pub fn simulate_y(&self, steps: usize, trials: usize, seed: u64) -> Vec<Estimate> {
        let paths: Vec<Vec<f64>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng::stream(seed, t as u64);
                let mut r = 1;
                let mut out = Vec::with_capacity(steps + 1);
                for _ in 0..=steps {
                    out.push(1.0 - r as f64 / self.size as f64);
                    r = self.step(r, &mut rng);
                }
                out
            })
            .collect();
        (0..=steps)
            .map(|i| stats::estimate(&paths.iter().map(|p| p[i]).collect::<Vec<_>>()))
            .collect()
    }

    /// Holding time `L(r)` for every state from a per-level table.
    pub fn level_holding(&self, levels: &[f64]) -> Vec<f64> {
        (0..=self.size)
            .map(|r| if r == 0 || r == self.size { 0.0 } else { levels[level_of(r, self.size).min(levels.len() - 1)] })
            .collect()
    }

    /// Holding-time chain: stays `holding[r]` time units in `r` before each
    /// step, from `Y_0 = 1` up to `horizon` or absorption.
    pub fn simulate_yhat(&self, holding: &[f64], horizon: f64, rng: &mut TrialRng) -> Result<YhatPath> {
        if holding.len() != self.size + 1 || holding[1..self.size].iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidArgument("holding times must be positive on 1..N-1".into()));
        }
        let mut t = 0.0;
        let mut r = 1;
        let mut jumps = vec![(0.0, 1)];
        let mut embedded = vec![1];
        while r != self.size && t + holding[r] <= horizon {
            t += holding[r];
            r = self.step(r, rng);
            jumps.push((t, r));
            embedded.push(r);
        }
        Ok(YhatPath { jumps, embedded, absorbed: r == self.size })
    }

    /// `ℓ̂ = ⌈log2 N⌉ - 1`.
    pub fn ell_hat(&self) -> usize {
        (usize::BITS - (self.size - 1).leading_zeros()) as usize - 1
    }

    /// `m = ⌈N / 2⌉`.
    pub fn half(&self) -> usize {
        self.size.div_ceil(2)
    }

    /// Tail statistics of an embedded path that ends at absorption.
    pub fn tail_stats(&self, path: &[usize]) -> TailStats {
        let m = self.half();
        let t_up: Vec<Option<usize>> = (0..=self.ell_hat())
            .map(|i| {
                let level = (1usize << i).min(m);
                path.iter().position(|&y| y >= level)
            })
            .collect();
        let t_below_m = path.iter().position(|&y| y < m);
        let cross = path.windows(2).filter(|w| w[1] < m && m <= w[0]).count();
        let last_below = path.iter().rposition(|&y| y < m);
        let final_stretch = last_below.map_or(0, |j| j + 1);
        let s = match (t_up[self.ell_hat()], final_stretch < path.len()) {
            (Some(up), true) => Some(final_stretch.saturating_sub(up)),
            _ => None,
        };
        TailStats { t_up, t_below_m, s, cross }
    }
}

/// Empirical missing ink after `i` rounds against its decay bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingInkRow {
    pub round: usize,
    pub missing: Estimate,
    /// `√N c^i` plus the frequency of extra burn-ins by round `i`.
    pub bound: f64,
    pub burn_in_correction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingInkReport {
    pub rows: Vec<MissingInkRow>,
    pub filled_runs: usize,
    pub total_runs: usize,
    /// Set when fewer than [`MIN_FILLED_RUNS`] runs filled.
    pub warning: Option<String>,
}

/// `E[1 - ink_{t(i)} / N | Fill]` per round index from filled runs.
pub fn missing_ink_curves(records: &[ChameleonRunRecord], n_free: usize, c: f64, max_round: usize) -> MissingInkReport {
    let filled: Vec<&ChameleonRunRecord> = records.iter().filter(|r| r.fill == Fill::Filled).collect();
    let nf = n_free as f64;
    let rows = (0..=max_round)
        .map(|i| {
            let xs: Vec<f64> = filled.iter().map(|r| 1.0 - r.ink_after_round(i) / nf).collect();
            let extra = filled.iter().filter(|r| r.extra_burn_in_by_round(i)).count();
            let correction = if filled.is_empty() { 0.0 } else { extra as f64 / filled.len() as f64 };
            MissingInkRow {
                round: i,
                missing: stats::estimate(&xs),
                bound: nf.sqrt() * c.powi(i as i32) + correction,
                burn_in_correction: correction,
            }
        })
        .collect();
    let warning = (filled.len() < MIN_FILLED_RUNS)
        .then(|| format!("only {} filled runs; confidence intervals are wide", filled.len()));
    MissingInkReport { rows, filled_runs: filled.len(), total_runs: records.len(), warning }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph;

    fn quick_params(t_round: f64, burn_in: f64) -> RoundParams {
        RoundParams {
            alpha: 0.2,
            schedule: RoundSchedule::Fixed { t_round },
            burn_in,
            goodness_trials: 200,
            seed: 1,
            max_steps: 400,
            allow_irregular: true,
        }
    }

    #[test]
    fn doob_formulas() {
        let ch = DoobChain::new(10, 0.2).unwrap();
        assert_eq!(ch.delta(3), 1);
        let row = ch.row(4);
        let up = row.iter().find(|e| e.0 == 5).unwrap().1;
        assert!((up - 5.0 / 8.0 * 0.1).abs() < 1e-15);
        for r in 1..=10 {
            let s: f64 = ch.row(r).iter().map(|e| e.1).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(ch.row(10), vec![(10, 1.0)]);
    }

    #[test]
    fn supermartingale_constant_below_one() {
        let rep = DoobChain::new(5, 0.1).unwrap().supermartingale_verify();
        assert!(rep.holds(), "c = {}", rep.c);
    }

    #[test]
    fn expected_rounds_for_unit_steps() {
        // With Δ ≡ 1 the ink chain is a lazy simple walk: E = r (N - r) / p.
        let ch = DoobChain::new(5, 0.2).unwrap();
        assert!((ch.expected_rounds(1).unwrap() - 4.0 / 0.1).abs() < 1e-9);
    }

    #[test]
    fn levels_partition_dyadically() {
        assert_eq!(level_of(1, 20), 0);
        assert_eq!(level_of(2, 20), 1);
        assert_eq!(level_of(3, 20), 2);
        assert_eq!(level_of(4, 20), 2);
        assert_eq!(level_of(17, 20), 2);
    }

    #[test]
    fn empty_red_is_rejected_and_not_good() {
        let g = graph::cycle(4).unwrap();
        assert!(ChameleonState::new(4, &[0], 0).is_err());
        let cols = [Colour::Black, Colour::White, Colour::White, Colour::White];
        let e = estimate_goodness(&g, &cols, 1.0, 0.2, 10, 3).unwrap();
        assert_eq!(e.h_mean, 0.0);
        assert!(!e.good);
    }

    #[test]
    fn run_ends_absorbed_with_consistent_records() {
        let g = graph::cycle(4).unwrap();
        let params = quick_params(1.5, 0.25);
        let rec = run_chameleon(&g, &[0], 2, &params, &[0.0, 0.5, 3.0], 5).unwrap();
        assert_eq!(rec.observations.len(), 3);
        assert_eq!(rec.observations[0].ink[2], 1.0);
        assert_eq!(rec.ink_samples[0], (0.0, 1.0));
        for r in &rec.rounds {
            assert!(r.ink_after >= 0.0 && r.ink_after <= 3.0);
        }
        match rec.fill {
            Fill::Filled => assert_eq!(rec.rounds.last().unwrap().ink_after, 3.0),
            Fill::Emptied => assert_eq!(rec.rounds.last().unwrap().ink_after, 0.0),
            Fill::Truncated => {}
        }
    }

    #[test]
    fn ink_changes_only_at_type_one() {
        let g = graph::cycle(6).unwrap();
        let params = quick_params(2.0, 0.5);
        let ch = Chameleon::new(&g, 2, params).unwrap();
        for seed in 0..20 {
            let rec = ch.run(&[0], 3, &[], seed).unwrap();
            let mut ink = 1.0;
            for r in &rec.rounds {
                if r.kind == DepinkKind::Type2 {
                    assert_eq!(r.ink_after, ink);
                }
                ink = r.ink_after;
            }
        }
    }
}
