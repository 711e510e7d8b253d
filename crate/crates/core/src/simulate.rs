//! Graphical constructions driven by a single merged Poisson stream.
//!
//! In the standard construction the stream has rate `r |E|`, each event picks
//! a uniform edge and swaps the contents of its endpoints. In the modified
//! construction the stream has rate `2 r |E|` and each event also carries a
//! fair coin; the swap happens only when the coin shows 1. Every process
//! (`RW(1)`, `EX(k)`, `IP(k)`) is a deterministic function of the stream.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, OutAdjacency};
use crate::rng::{self, TrialRng};

/// Marker for an empty vertex in occupancy arrays.
pub const EMPTY: usize = usize::MAX;

/// Standard or modified graphical construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Standard,
    Modified,
}

/// One ring of the merged clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    /// Index into [`Graph::edges`].
    pub edge: usize,
    /// Whether the endpoints swap; always true in the standard construction.
    pub coin: bool,
}

/// Total rate of the merged clock.
pub fn stream_rate(g: &Graph, mode: Mode) -> f64 {
    let base = g.num_edges() as f64 * g.rate_per_edge();
    match mode {
        Mode::Standard => base,
        Mode::Modified => 2.0 * base,
    }
}

/// Unmaterialised event generator.
#[derive(Debug, Clone)]
pub struct EventSource {
    num_edges: usize,
    mode: Mode,
    clock: Exp<f64>,
    rng: TrialRng,
    now: f64,
}

impl EventSource {
    pub fn new(g: &Graph, mode: Mode, rng: TrialRng) -> Self {
        let rate = stream_rate(g, mode);
        EventSource {
            num_edges: g.num_edges(),
            mode,
            clock: Exp::new(rate).expect("stream rate is positive"),
            rng,
            now: 0.0,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Draws the next event.
    pub fn next_event(&mut self) -> Event {
        self.now += self.clock.sample(&mut self.rng);
        let edge = self.rng.random_range(0..self.num_edges);
        let coin = match self.mode {
            Mode::Standard => true,
            Mode::Modified => self.rng.random::<bool>(),
        };
        Event { time: self.now, edge, coin }
    }
}

/// Materialised stream of events on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct EventStream {
    pub mode: Mode,
    pub seed: u64,
    pub horizon: f64,
    pub events: Vec<Event>,
    edges: Vec<(usize, usize)>,
    n: usize,
    source: EventSource,
    pending: Event,
}

/// Samples the stream of `mode` on `[0, horizon]` from `seed`.
pub fn sample_events(g: &Graph, horizon: f64, mode: Mode, seed: u64) -> Result<EventStream> {
    if !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be nonnegative")));
    }
    let mut source = EventSource::new(g, mode, rng::stream(seed, 0));
    let pending = source.next_event();
    let mut es = EventStream {
        mode,
        seed,
        horizon: 0.0,
        events: Vec::new(),
        edges: g.edges().to_vec(),
        n: g.n(),
        source,
        pending,
    };
    es.extend_to(horizon);
    Ok(es)
}

impl EventStream {
    /// Extends the stream to a later horizon. The result equals sampling
    /// directly to that horizon.
    pub fn extend_to(&mut self, horizon: f64) {
        while self.pending.time <= horizon {
            self.events.push(self.pending);
            self.pending = self.source.next_event();
        }
        self.horizon = self.horizon.max(horizon);
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Events with `s < time <= t`.
    pub fn window(&self, s: f64, t: f64) -> &[Event] {
        let a = self.events.partition_point(|e| e.time <= s);
        let b = self.events.partition_point(|e| e.time <= t);
        &self.events[a..b.max(a)]
    }

    fn check_range(&self, s: f64, t: f64) -> Result<()> {
        if !(0.0 <= s && s <= t && t <= self.horizon) {
            return Err(Error::Range { start: s, end: t, horizon: self.horizon });
        }
        Ok(())
    }

    /// `I_{[s,t]}` as a map from position at time `s` to position at time `t`.
    pub fn interval_map(&self, s: f64, t: f64) -> Result<Vec<usize>> {
        self.check_range(s, t)?;
        let mut p = Particles::full(self.n);
        for ev in self.window(s, t) {
            if ev.coin {
                let (a, b) = self.edges[ev.edge];
                p.swap(a, b);
            }
        }
        Ok(p.pos)
    }

    /// Snapshots of `RW(1)`, `EX(k)` and `IP(k)` started from `init` at each
    /// time in `times`.
    pub fn run_processes(&self, init: &[usize], times: &[f64]) -> Result<Vec<Snapshot>> {
        let mut seen = vec![false; self.n];
        for &v in init {
            if v >= self.n {
                return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidArgument(format!("duplicate initial vertex {v}")));
            }
        }
        if init.is_empty() {
            return Err(Error::InvalidArgument("need at least one particle".into()));
        }
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let map = self.interval_map(0.0, t)?;
            let ip: Vec<usize> = init.iter().map(|&v| map[v]).collect();
            let mut ex = ip.clone();
            ex.sort_unstable();
            out.push(Snapshot { t, rw1: ip[0], ip, ex });
        }
        Ok(out)
    }

    /// `N_t(a, b)` for each pair: rings, of either coin value, of the edge
    /// joining the particles that started at `a` and `b`.
    pub fn interaction_counts(&self, pairs: &[(usize, usize)], t: f64) -> Result<Vec<u64>> {
        self.check_range(0.0, t)?;
        let mut p = Particles::full(self.n);
        let mut counts = vec![0u64; pairs.len()];
        for ev in self.window(0.0, t) {
            let (x, y) = self.edges[ev.edge];
            for (c, &(a, b)) in counts.iter_mut().zip(pairs) {
                let (pa, pb) = (p.pos[a], p.pos[b]);
                if (pa == x && pb == y) || (pa == y && pb == x) {
                    *c += 1;
                }
            }
            if ev.coin {
                p.swap(x, y);
            }
        }
        Ok(counts)
    }

    /// `N̂_t(v)`: interactions by time `t` between the particle started at `v`
    /// and the particles that at time `T` sit on out-neighbours of its
    /// time-`T` position.
    pub fn hat_interactions(&self, adj: &dyn OutAdjacency, v: usize, t: f64, horizon_t: f64) -> Result<u64> {
        if t > horizon_t {
            return Err(Error::InvalidArgument(format!("need t = {t} <= T = {horizon_t}")));
        }
        self.check_range(0.0, horizon_t)?;
        let map = self.interval_map(0.0, horizon_t)?;
        let mut inv = vec![0; self.n];
        for (a, &b) in map.iter().enumerate() {
            inv[b] = a;
        }
        let mut partner = vec![false; self.n];
        for u in adj.out_of(map[v]) {
            partner[inv[u]] = true;
        }
        Ok(count_partner_interactions(&self.edges, self.window(0.0, t), self.n, v, &partner))
    }
}

/// Counts rings of edges joining particle `v` to any particle flagged in
/// `partner`, replaying `events` from the identity configuration.
fn count_partner_interactions(edges: &[(usize, usize)], events: &[Event], n: usize, v: usize, partner: &[bool]) -> u64 {
    let mut p = Particles::full(n);
    let mut count = 0;
    for ev in events {
        let (x, y) = edges[ev.edge];
        let pv = p.pos[v];
        if pv == x || pv == y {
            let other = if pv == x { y } else { x };
            if partner[p.occ[other]] {
                count += 1;
            }
        }
        if ev.coin {
            p.swap(x, y);
        }
    }
    count
}

/// Positions of the tracked processes at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    /// Position of the first particle.
    pub rw1: usize,
    /// Labeled positions.
    pub ip: Vec<usize>,
    /// Sorted occupied set.
    pub ex: Vec<usize>,
}

/// Labeled particles on the vertices with swap dynamics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Particles {
    /// `pos[label]` is the vertex of particle `label`.
    pub pos: Vec<usize>,
    /// `occ[vertex]` is the label at `vertex` or [`EMPTY`].
    pub occ: Vec<usize>,
}

impl Particles {
    /// One particle per vertex, particle `v` at vertex `v`.
    pub fn full(n: usize) -> Self {
        Particles { pos: (0..n).collect(), occ: (0..n).collect() }
    }

    /// Particles labeled `0..init.len()` at the given distinct vertices.
    pub fn new(n: usize, init: &[usize]) -> Result<Self> {
        let mut occ = vec![EMPTY; n];
        for (i, &v) in init.iter().enumerate() {
            if v >= n {
                return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
            }
            if occ[v] != EMPTY {
                return Err(Error::InvalidArgument(format!("duplicate initial vertex {v}")));
            }
            occ[v] = i;
        }
        Ok(Particles { pos: init.to_vec(), occ })
    }

    /// Swaps the contents of vertices `a` and `b`.
    #[inline]
    pub fn swap(&mut self, a: usize, b: usize) {
        let (pa, pb) = (self.occ[a], self.occ[b]);
        self.occ[a] = pb;
        self.occ[b] = pa;
        if pa != EMPTY {
            self.pos[pa] = b;
        }
        if pb != EMPTY {
            self.pos[pb] = a;
        }
    }

    pub fn occupied(&self, v: usize) -> bool {
        self.occ[v] != EMPTY
    }
}

/// Runs labeled particles from `init` under a fresh stream and returns their
/// positions at each (sorted) time in `times`, without materialising events.
pub fn positions_at(g: &Graph, mode: Mode, init: &[usize], times: &[f64], rng: TrialRng) -> Result<Vec<Vec<usize>>> {
    let mut p = Particles::new(g.n(), init)?;
    let mut src = EventSource::new(g, mode, rng);
    let edges = g.edges();
    let mut out = Vec::with_capacity(times.len());
    let mut ev = src.next_event();
    for &t in times {
        while ev.time <= t {
            if ev.coin {
                let (a, b) = edges[ev.edge];
                p.swap(a, b);
            }
            ev = src.next_event();
        }
        out.push(p.pos.clone());
    }
    Ok(out)
}

/// Interaction count and time spent adjacent for one pair of particles, used
/// to compare interactions with a Poisson law of mean `2 r × adjacency time`
/// in the modified construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairInteraction {
    pub count: u64,
    pub adjacent_time: f64,
}

/// Tracks the particles started at `a` and `b` up to time `t`.
pub fn pair_interaction(g: &Graph, mode: Mode, a: usize, b: usize, t: f64, rng: TrialRng) -> Result<PairInteraction> {
    let mut p = Particles::new(g.n(), &[a, b])?;
    let mut src = EventSource::new(g, mode, rng);
    let edges = g.edges();
    let mut count = 0;
    let mut adjacent_time = 0.0;
    let mut last = 0.0;
    loop {
        let ev = src.next_event();
        let now = ev.time.min(t);
        if g.has_edge(p.pos[0], p.pos[1]) {
            adjacent_time += now - last;
        }
        last = now;
        if ev.time > t {
            break;
        }
        let (x, y) = edges[ev.edge];
        let (pa, pb) = (p.pos[0], p.pos[1]);
        if (pa == x && pb == y) || (pa == y && pb == x) {
            count += 1;
        }
        if ev.coin {
            p.swap(x, y);
        }
    }
    Ok(PairInteraction { count, adjacent_time })
}

/// `N̂_t(v)` on a fresh stream, without materialising it.
pub fn hat_interactions_fresh(adj: &dyn OutAdjacency, mode: Mode, v: usize, t: f64, horizon_t: f64, seed: u64) -> Result<u64> {
    let g = adj.base_graph();
    let es = sample_events(g, horizon_t, mode, seed)?;
    es.hat_interactions(adj, v, t, horizon_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph;

    #[test]
    fn zero_horizon_is_empty() {
        let g = graph::cycle(5).unwrap();
        let es = sample_events(&g, 0.0, Mode::Standard, 1).unwrap();
        assert!(es.events.is_empty());
        assert_eq!(es.interval_map(0.0, 0.0).unwrap(), (0..5).collect::<Vec<_>>());
    }

    #[test]
    fn extension_matches_direct_sampling() {
        let g = graph::cycle(6).unwrap();
        let direct = sample_events(&g, 5.0, Mode::Modified, 9).unwrap();
        let mut staged = sample_events(&g, 1.5, Mode::Modified, 9).unwrap();
        staged.extend_to(3.0);
        staged.extend_to(5.0);
        assert_eq!(direct.events, staged.events);
    }

    #[test]
    fn composition_law() {
        let g = graph::hypercube(3).unwrap();
        let es = sample_events(&g, 4.0, Mode::Modified, 3).unwrap();
        let a = es.interval_map(0.0, 1.3).unwrap();
        let b = es.interval_map(1.3, 4.0).unwrap();
        let c = es.interval_map(0.0, 4.0).unwrap();
        for v in 0..8 {
            assert_eq!(c[v], b[a[v]]);
        }
    }

    #[test]
    fn out_of_range_interval_is_rejected() {
        let g = graph::cycle(4).unwrap();
        let es = sample_events(&g, 1.0, Mode::Standard, 1).unwrap();
        assert!(es.interval_map(0.5, 2.0).is_err());
    }

    #[test]
    fn duplicate_start_is_rejected() {
        let g = graph::cycle(4).unwrap();
        let es = sample_events(&g, 1.0, Mode::Standard, 1).unwrap();
        assert!(es.run_processes(&[1, 1], &[0.5]).is_err());
    }
}
