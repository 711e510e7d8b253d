//! Finite undirected graphs, the families used in experiments, degree
//! inflation with directed dummy edges, and simple metric statistics.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Number of percolation samples tried before giving up on a large giant.
pub const PERCOLATION_RETRIES: usize = 100;

/// A finite, connected, simple undirected graph with a uniform edge rate.
///
/// Vertices are `0..n`. Every edge rings at `rate_per_edge`, which defaults to
/// `1 / d` where `d` is the maximum degree, so each vertex of a regular graph
/// has unit total jump rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    rate_per_edge: f64,
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph from an edge list, validating simplicity and connectivity.
    ///
    /// Edges are normalised to `(min, max)` and sorted.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Construction("graph must have at least one vertex".into()));
        }
        let mut list: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Construction(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::Construction(format!("self-loop at vertex {u}")));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Construction(format!("parallel edge {:?}", w[0])));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &list {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let max_deg = adj.iter().map(Vec::len).max().unwrap_or(0);
        let g = Graph {
            n,
            edges: list,
            adj,
            rate_per_edge: if max_deg == 0 { 1.0 } else { 1.0 / max_deg as f64 },
            labels: None,
        };
        if !g.is_connected() {
            return Err(Error::Construction("graph is disconnected".into()));
        }
        Ok(g)
    }

    /// Replaces the per-edge ringing rate.
    pub fn with_rate(mut self, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("edge rate must be positive, got {rate}")));
        }
        self.rate_per_edge = rate;
        Ok(self)
    }

    /// Attaches human-readable vertex names.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidArgument(format!("{} labels for {} vertices", labels.len(), self.n)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbour list of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Maximum degree; equals the common degree of a regular graph.
    pub fn d(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn is_regular(&self) -> bool {
        self.d() == self.min_degree()
    }

    /// Fails with [`Error::NotRegular`] unless every degree is equal.
    pub fn require_regular(&self) -> Result<()> {
        if self.is_regular() {
            Ok(())
        } else {
            Err(Error::NotRegular { min: self.min_degree(), max: self.d() })
        }
    }

    pub fn rate_per_edge(&self) -> f64 {
        self.rate_per_edge
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Largest total jump rate out of a vertex, `max_x |L(x, x)|`.
    pub fn max_exit_rate(&self) -> f64 {
        self.d() as f64 * self.rate_per_edge
    }

    /// Breadth-first distances from `root`; unreachable vertices get `usize::MAX`.
    pub fn bfs(&self, root: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::from([root]);
        dist[root] = 0;
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// All-pairs shortest-path distances.
    pub fn distance_matrix(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|v| self.bfs(v)).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(|&d| d != usize::MAX)
    }

    /// Serialises to the text format: a header `n m` then one `u v` line per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    /// Parses the text format written by [`Graph::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let (n, m) = parse_pair(header)?;
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            edges.push(parse_pair(line)?);
        }
        if edges.len() != m {
            return Err(Error::Parse(format!("header promises {m} edges, found {}", edges.len())));
        }
        Graph::new(n, edges)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Graph::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Parse(format!("expected two integers in line {line:?}")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("{e} in line {line:?}")))
    };
    let a = next()?;
    let b = next()?;
    Ok((a, b))
}

/// Declarative description of a graph, suitable for configs and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphSpec {
    /// Complete graph `K_n`.
    Complete { n: usize },
    /// Cycle `C_n`, `n >= 3`.
    Cycle { n: usize },
    /// Path `P_n` (irregular for `n >= 3`).
    Path { n: usize },
    /// Hypercube `Q_dim` on `{0,1}^dim`.
    Hypercube { dim: usize },
    /// Discrete torus `(Z / side Z)^dim`, `side >= 3`.
    Torus { side: usize, dim: usize },
    /// Cartesian product of two specified graphs.
    Product { left: Box<GraphSpec>, right: Box<GraphSpec> },
    /// Uniform-ish random `d`-regular graph from the configuration model.
    RandomRegular { n: usize, d: usize, seed: u64 },
    /// Largest component of bond percolation with parameter `p` on a torus.
    PercolationGiant { side: usize, dim: usize, p: f64, seed: u64 },
    /// Graph read from a text file.
    File { path: String },
}

impl GraphSpec {
    /// Short human-readable name such as `Q3` or `C6`.
    pub fn name(&self) -> String {
        match self {
            GraphSpec::Complete { n } => format!("K{n}"),
            GraphSpec::Cycle { n } => format!("C{n}"),
            GraphSpec::Path { n } => format!("P{n}"),
            GraphSpec::Hypercube { dim } => format!("Q{dim}"),
            GraphSpec::Torus { side, dim } => format!("T{side}^{dim}"),
            GraphSpec::Product { left, right } => format!("({}x{})", left.name(), right.name()),
            GraphSpec::RandomRegular { n, d, seed } => format!("RR(n={n},d={d},seed={seed})"),
            GraphSpec::PercolationGiant { side, dim, p, seed } => {
                format!("Perc(L={side},dim={dim},p={p},seed={seed})")
            }
            GraphSpec::File { path } => format!("file:{path}"),
        }
    }
}

/// Constructs the graph described by `spec`.
pub fn build_graph(spec: &GraphSpec) -> Result<Graph> {
    match spec {
        GraphSpec::Complete { n } => complete(*n),
        GraphSpec::Cycle { n } => cycle(*n),
        GraphSpec::Path { n } => path(*n),
        GraphSpec::Hypercube { dim } => hypercube(*dim),
        GraphSpec::Torus { side, dim } => torus(*side, *dim),
        GraphSpec::Product { left, right } => cartesian_product(&build_graph(left)?, &build_graph(right)?),
        GraphSpec::RandomRegular { n, d, seed } => random_regular(*n, *d, *seed),
        GraphSpec::PercolationGiant { side, dim, p, seed } => percolation_giant(*side, *dim, *p, *seed).map(|r| r.graph),
        GraphSpec::File { path } => Graph::read(Path::new(path)),
    }
}

pub fn complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidArgument("complete graph needs n >= 2".into()));
    }
    Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
}

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidArgument("cycle needs n >= 3".into()));
    }
    Graph::new(n, (0..n).map(|u| (u, (u + 1) % n)))
}

pub fn path(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidArgument("path needs n >= 2".into()));
    }
    Graph::new(n, (0..n - 1).map(|u| (u, u + 1)))
}

pub fn hypercube(dim: usize) -> Result<Graph> {
    if dim == 0 || dim > 20 {
        return Err(Error::InvalidArgument(format!("hypercube dimension {dim} outside 1..=20")));
    }
    let n = 1usize << dim;
    Graph::new(n, (0..n).flat_map(|u| (0..dim).map(move |i| (u, u ^ (1 << i))).filter(|&(u, v)| u < v)))
}

pub fn torus(side: usize, dim: usize) -> Result<Graph> {
    if side < 3 {
        return Err(Error::InvalidArgument(format!("torus side {side} < 3 would create parallel edges")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("torus dimension must be positive".into()));
    }
    Graph::new(side.pow(dim as u32), torus_edges(side, dim))
}

fn torus_edges(side: usize, dim: usize) -> Vec<(usize, usize)> {
    let n = side.pow(dim as u32);
    let mut edges = Vec::with_capacity(n * dim);
    for u in 0..n {
        let mut stride = 1;
        for _ in 0..dim {
            let coord = (u / stride) % side;
            let v = u - coord * stride + ((coord + 1) % side) * stride;
            edges.push((u, v));
            stride *= side;
        }
    }
    edges
}

/// Cartesian product: `(a, b) ~ (a', b)` when `a ~ a'`, and `(a, b) ~ (a, b')`
/// when `b ~ b'`. Vertex `(a, b)` is numbered `a * n2 + b`.
pub fn cartesian_product(g1: &Graph, g2: &Graph) -> Result<Graph> {
    let n2 = g2.n();
    let mut edges = Vec::with_capacity(g1.num_edges() * n2 + g2.num_edges() * g1.n());
    for &(a, a2) in g1.edges() {
        for b in 0..n2 {
            edges.push((a * n2 + b, a2 * n2 + b));
        }
    }
    for a in 0..g1.n() {
        for &(b, b2) in g2.edges() {
            edges.push((a * n2 + b, a * n2 + b2));
        }
    }
    Graph::new(g1.n() * n2, edges)
}

/// Random `d`-regular graph by the configuration model, rejecting loops,
/// multi-edges and disconnected outcomes.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d == 0 || d >= n || (n * d) % 2 == 1 {
        return Err(Error::InvalidArgument(format!("no simple {d}-regular graph on {n} vertices")));
    }
    let mut rng = rng::stream(seed, 0);
    const ATTEMPTS: usize = 10_000;
    for _ in 0..ATTEMPTS {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        stubs.shuffle(&mut rng);
        let pairs: Vec<(usize, usize)> = stubs.chunks(2).map(|c| (c[0], c[1])).collect();
        if let Ok(g) = Graph::new(n, pairs) {
            return Ok(g);
        }
    }
    Err(Error::RetryExhausted { attempts: ATTEMPTS, reason: format!("random {d}-regular graph on {n} vertices") })
}

/// Result of [`percolation_giant`]: the giant component plus the raw sample.
#[derive(Debug, Clone)]
pub struct PercolationSample {
    pub graph: Graph,
    /// Torus vertex index of each giant-component vertex.
    pub torus_vertex: Vec<usize>,
    /// Open torus edges of the accepted sample.
    pub open_edges: Vec<(usize, usize)>,
    pub attempts: usize,
}

/// Largest component of independent bond percolation on the torus.
///
/// Resamples up to [`PERCOLATION_RETRIES`] times while the giant has fewer
/// than half of the torus vertices. The returned graph is irregular in
/// general; its edge rate is the torus rate `1 / (2 dim)`.
pub fn percolation_giant(side: usize, dim: usize, p: f64, seed: u64) -> Result<PercolationSample> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("percolation parameter {p} outside [0, 1]")));
    }
    let base = torus(side, dim)?;
    let n = base.n();
    let mut rng = rng::stream(seed, 1);
    for attempt in 1..=PERCOLATION_RETRIES {
        let open: Vec<(usize, usize)> = base.edges().iter().copied().filter(|_| rng.random::<f64>() < p).collect();
        let comp = largest_component(n, &open);
        if 2 * comp.len() < n {
            continue;
        }
        let mut relabel = vec![usize::MAX; n];
        for (i, &v) in comp.iter().enumerate() {
            relabel[v] = i;
        }
        let edges: Vec<(usize, usize)> = open
            .iter()
            .filter(|&&(u, v)| relabel[u] != usize::MAX && relabel[v] != usize::MAX)
            .map(|&(u, v)| (relabel[u], relabel[v]))
            .collect();
        let graph = Graph::new(comp.len(), edges)?.with_rate(1.0 / (2 * dim) as f64)?;
        return Ok(PercolationSample { graph, torus_vertex: comp, open_edges: open, attempts: attempt });
    }
    Err(Error::RetryExhausted {
        attempts: PERCOLATION_RETRIES,
        reason: format!("percolation giant on torus side {side} dim {dim} with p = {p} stayed below n/2"),
    })
}

/// Sorted vertex list of the largest connected component (ties: smallest vertex).
fn largest_component(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut best: Vec<usize> = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        let mut comp = vec![root];
        seen[root] = true;
        let mut i = 0;
        while i < comp.len() {
            let u = comp[i];
            i += 1;
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    best
}

/// A graph whose vertices are padded to a common out-degree `d_hat` with
/// directed dummy edges that never ring.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModifiedGraph {
    base: Graph,
    dummy_out: Vec<Vec<usize>>,
    d_hat: usize,
    d_max_in: usize,
}

impl ModifiedGraph {
    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn d_hat(&self) -> usize {
        self.d_hat
    }

    pub fn d_max_in(&self) -> usize {
        self.d_max_in
    }

    /// Dummy targets of `v`, in the order they were chosen.
    pub fn dummy_out(&self, v: usize) -> &[usize] {
        &self.dummy_out[v]
    }

    /// Out-neighbours of `v`: real neighbours followed by dummy targets.
    pub fn out_neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = self.base.neighbors(v).to_vec();
        out.extend_from_slice(&self.dummy_out[v]);
        out
    }

    /// In-degree of every vertex under the out-adjacency.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut indeg = vec![0; self.base.n()];
        for v in 0..self.base.n() {
            for u in self.out_neighbors(v) {
                indeg[u] += 1;
            }
        }
        indeg
    }

    /// Whether `(u, v)` is a dummy (non-ringing) pair in either direction.
    pub fn is_dummy_pair(&self, u: usize, v: usize) -> bool {
        self.dummy_out[u].contains(&v) || self.dummy_out[v].contains(&u)
    }
}

/// Out-adjacency used by the neighbourhood statistics: either plain adjacency
/// of a graph or the inflated adjacency of a [`ModifiedGraph`].
pub trait OutAdjacency: Sync {
    fn base_graph(&self) -> &Graph;
    fn out_of(&self, v: usize) -> Vec<usize>;
    /// Common out-degree (`d` or `d_hat`).
    fn out_degree(&self) -> usize;
    /// Maximum in-degree (`d` for a regular graph).
    fn max_in_degree(&self) -> usize;
}

impl OutAdjacency for Graph {
    fn base_graph(&self) -> &Graph {
        self
    }
    fn out_of(&self, v: usize) -> Vec<usize> {
        self.neighbors(v).to_vec()
    }
    fn out_degree(&self) -> usize {
        self.d()
    }
    fn max_in_degree(&self) -> usize {
        self.d()
    }
}

impl OutAdjacency for ModifiedGraph {
    fn base_graph(&self) -> &Graph {
        &self.base
    }
    fn out_of(&self, v: usize) -> Vec<usize> {
        self.out_neighbors(v)
    }
    fn out_degree(&self) -> usize {
        self.d_hat
    }
    fn max_in_degree(&self) -> usize {
        self.d_max_in
    }
}

/// Adds directed dummy edges so every vertex has out-degree `d_hat`.
///
/// Targets of `v` are taken in breadth-first order (distance, then vertex
/// index) among vertices at distance `2..=d_hat`, so a dummy edge never
/// duplicates a real edge.
pub fn degree_inflate(g: &Graph, d_hat: usize) -> Result<ModifiedGraph> {
    if d_hat < g.d() {
        return Err(Error::InvalidArgument(format!("d_hat = {d_hat} is below the degree {}", g.d())));
    }
    let n = g.n();
    let mut dummy_out = vec![Vec::new(); n];
    for v in 0..n {
        let needed = d_hat - g.degree(v);
        if needed == 0 {
            continue;
        }
        let dist = g.bfs(v);
        let mut candidates: Vec<(usize, usize)> =
            (0..n).filter(|&u| dist[u] >= 2 && dist[u] <= d_hat).map(|u| (dist[u], u)).collect();
        candidates.sort_unstable();
        if candidates.len() < needed {
            return Err(Error::Inflation { vertex: v, needed, radius: d_hat, found: candidates.len() });
        }
        dummy_out[v] = candidates[..needed].iter().map(|&(_, u)| u).collect();
    }
    let mut mg = ModifiedGraph { base: g.clone(), dummy_out, d_hat, d_max_in: 0 };
    mg.d_max_in = mg.in_degrees().into_iter().max().unwrap_or(0);
    Ok(mg)
}

/// Output of [`sparse_nice_subset`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseSubset {
    pub selected: Vec<usize>,
    pub selected_weight: f64,
    pub candidate_weight: f64,
    /// `1 / max_v |Ball(v, separation)|`, the worst-case retained fraction.
    pub c_frac: f64,
}

/// Greedy separated subset: repeatedly keep the heaviest remaining candidate
/// (ties to the smaller index) and discard candidates within `separation`.
pub fn sparse_nice_subset(
    g: &Graph,
    mass: &[f64],
    separation: usize,
    candidates: &[usize],
) -> Result<SparseSubset> {
    if separation == 0 {
        return Err(Error::InvalidArgument("separation must be at least 1".into()));
    }
    if mass.len() != g.n() {
        return Err(Error::InvalidArgument("mass vector length differs from n".into()));
    }
    if let Some(w) = mass.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative or NaN weight {w}")));
    }
    let ball_max = (0..g.n()).map(|v| g.bfs(v).iter().filter(|&&d| d <= separation).count()).max().unwrap_or(1);
    let mut remaining: Vec<usize> = candidates.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    let candidate_weight: f64 = remaining.iter().map(|&v| mass[v]).sum();
    remaining.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
    let mut selected = Vec::new();
    while let Some(&pick) = remaining.first() {
        selected.push(pick);
        let dist = g.bfs(pick);
        remaining.retain(|&v| dist[v] > separation);
    }
    let selected_weight = selected.iter().map(|&v| mass[v]).sum();
    selected.sort_unstable();
    Ok(SparseSubset { selected, selected_weight, candidate_weight, c_frac: 1.0 / ball_max as f64 })
}

/// One sampled set in the isoperimetric check of [`growth_stats`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundarySample {
    pub kind: String,
    pub size: usize,
    pub inner_boundary: usize,
    pub ratio: f64,
    /// `1 / (2 R(2|A|))` where `R(m)` is the least radius with ball volume `>= m`.
    pub bound: f64,
    pub holds: bool,
}

/// Ball-growth statistics and isoperimetric samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthStats {
    /// `volumes[r] = |Ball(root, r)|` for `r = 0..=diameter`.
    pub volumes: Vec<usize>,
    pub diameter: usize,
    /// Whether every root produced the same volume sequence (a necessary
    /// condition for vertex-transitivity).
    pub uniform_balls: bool,
    pub boundary_samples: Vec<BoundarySample>,
}

/// Ball volumes from vertex 0, diameter, and, when all roots have the same
/// ball volumes, the inner-boundary inequality on balls and BFS sweep sets.
pub fn growth_stats(g: &Graph) -> GrowthStats {
    let profile = |root: usize| -> Vec<usize> {
        let dist = g.bfs(root);
        let ecc = dist.iter().copied().max().unwrap_or(0);
        (0..=ecc).map(|r| dist.iter().filter(|&&d| d <= r).count()).collect()
    };
    let volumes = profile(0);
    let uniform_balls = (1..g.n()).all(|v| profile(v) == volumes);
    let diameter = volumes.iter().position(|&v| v >= g.n()).unwrap_or(volumes.len() - 1);
    let radius_for = |m: usize| volumes.iter().position(|&v| v >= m).unwrap_or(volumes.len());
    let mut boundary_samples = Vec::new();
    if uniform_balls {
        let dist = g.bfs(0);
        let mut order: Vec<usize> = (0..g.n()).collect();
        order.sort_by_key(|&v| (dist[v], v));
        let mut sample = |kind: &str, set: &[usize]| {
            let mut inside = vec![false; g.n()];
            for &v in set {
                inside[v] = true;
            }
            let inner = set.iter().filter(|&&a| g.neighbors(a).iter().any(|&b| !inside[b])).count();
            let ratio = inner as f64 / set.len() as f64;
            let r = radius_for(2 * set.len()).max(1);
            let bound = 1.0 / (2.0 * r as f64);
            boundary_samples.push(BoundarySample {
                kind: kind.to_string(),
                size: set.len(),
                inner_boundary: inner,
                ratio,
                bound,
                holds: ratio >= bound,
            });
        };
        for m in 1..=g.n() / 2 {
            sample("sweep", &order[..m]);
        }
        for (r, &vol) in volumes.iter().enumerate() {
            if vol * 2 <= g.n() {
                let ball: Vec<usize> = (0..g.n()).filter(|&v| dist[v] <= r).collect();
                sample("ball", &ball);
            }
        }
    }
    GrowthStats { volumes, diameter, uniform_balls, boundary_samples }
}

/// All automorphisms of `g` as vertex maps, or `None` when there are more
/// than `cap` of them.
///
/// Vertices are assigned in breadth-first order from vertex 0 and each
/// candidate image must preserve adjacency with every assigned vertex.
pub fn automorphisms(g: &Graph, cap: usize) -> Option<Vec<Vec<usize>>> {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    let dist = g.bfs(0);
    order.sort_by_key(|&v| (dist[v], v));
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut out = Vec::new();
    fn extend(
        g: &Graph,
        order: &[usize],
        depth: usize,
        image: &mut [usize],
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> bool {
        if depth == order.len() {
            out.push(image.to_vec());
            return out.len() <= cap;
        }
        let v = order[depth];
        for u in 0..g.n() {
            if used[u] || g.degree(u) != g.degree(v) {
                continue;
            }
            let consistent = order[..depth].iter().all(|&w| g.has_edge(v, w) == g.has_edge(u, image[w]));
            if !consistent {
                continue;
            }
            image[v] = u;
            used[u] = true;
            let keep_going = extend(g, order, depth + 1, image, used, out, cap);
            used[u] = false;
            image[v] = usize::MAX;
            if !keep_going {
                return false;
            }
        }
        true
    }
    if extend(g, &order, 0, &mut image, &mut used, &mut out, cap) {
        Some(out)
    } else {
        None
    }
}

/// Index lookup from unordered vertex pair to edge position.
pub fn edge_index(g: &Graph) -> HashMap<(usize, usize), usize> {
    g.edges().iter().enumerate().map(|(i, &e)| (e, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn automorphism_counts() {
        assert_eq!(automorphisms(&cycle(6).unwrap(), 1000).unwrap().len(), 12);
        assert_eq!(automorphisms(&hypercube(3).unwrap(), 1000).unwrap().len(), 48);
        assert_eq!(automorphisms(&complete(4).unwrap(), 1000).unwrap().len(), 24);
        assert!(automorphisms(&complete(5).unwrap(), 100).is_none());
    }

    #[test]
    fn families_have_expected_shape() {
        let q3 = hypercube(3).unwrap();
        assert_eq!((q3.n(), q3.d(), q3.num_edges()), (8, 3, 12));
        assert!(q3.is_regular());
        let t = torus(4, 2).unwrap();
        assert_eq!((t.n(), t.d()), (16, 4));
        assert!(t.is_regular());
        let k4 = complete(4).unwrap();
        assert_eq!(k4.num_edges(), 6);
        assert!((k4.rate_per_edge() - 1.0 / 3.0).abs() < 1e-15);
        assert!(!path(3).unwrap().is_regular());
    }

    #[test]
    fn hypercube_is_bipartite() {
        let q3 = hypercube(3).unwrap();
        for &(u, v) in q3.edges() {
            assert_eq!((u.count_ones() + v.count_ones()) % 2, 1);
        }
    }

    #[test]
    fn products_add_degrees() {
        // A connected 2-regular graph on four vertices is the 4-cycle.
        let k2 = complete(2).unwrap();
        let sq = cartesian_product(&k2, &k2).unwrap();
        assert_eq!((sq.n(), sq.num_edges(), sq.d()), (4, 4, 2));
        assert!(sq.is_regular());
        let c3 = cycle(3).unwrap();
        let p = cartesian_product(&c3, &c3).unwrap();
        assert_eq!((p.n(), p.d()), (9, 4));
        assert!(p.is_regular());
    }

    #[test]
    fn text_round_trip() {
        let g = torus(3, 2).unwrap();
        let back = Graph::from_text(&g.to_text()).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert!(Graph::from_text("3 1\n0 1\n").is_err());
        assert!(Graph::from_text("2 1\n0 0\n").is_err());
    }

    #[test]
    fn inflation_identity_and_padding() {
        let c6 = cycle(6).unwrap();
        let same = degree_inflate(&c6, 2).unwrap();
        assert!((0..6).all(|v| same.dummy_out(v).is_empty()));
        let mg = degree_inflate(&c6, 4).unwrap();
        let dist = c6.distance_matrix();
        for v in 0..6 {
            assert_eq!(mg.out_neighbors(v).len(), 4);
            for &u in mg.dummy_out(v) {
                assert!(dist[v][u] >= 2 && dist[v][u] <= 4);
            }
        }
        assert!(degree_inflate(&complete(3).unwrap(), 5).is_err());
    }

    #[test]
    fn growth_examples() {
        let c8 = growth_stats(&cycle(8).unwrap());
        assert_eq!(c8.volumes[1], 3);
        assert_eq!(c8.diameter, 4);
        assert_eq!(growth_stats(&complete(4).unwrap()).diameter, 1);
        assert_eq!(growth_stats(&torus(4, 2).unwrap()).volumes[1], 5);
    }

    #[test]
    fn sparse_subset_examples() {
        let c20 = cycle(20).unwrap();
        let mass = vec![1.0; 20];
        let single = sparse_nice_subset(&c20, &mass, 3, &[5]).unwrap();
        assert_eq!(single.selected, vec![5]);
        let far = sparse_nice_subset(&c20, &mass, 3, &[0, 5, 10, 15]).unwrap();
        assert_eq!(far.selected, vec![0, 5, 10, 15]);
        let all: Vec<usize> = (0..20).collect();
        let out = sparse_nice_subset(&c20, &mass, 3, &all).unwrap();
        assert!((out.c_frac - 1.0 / 7.0).abs() < 1e-15);
        assert!(out.selected_weight >= out.candidate_weight / 7.0);
        assert!(sparse_nice_subset(&c20, &mass, 3, &[]).unwrap().selected.is_empty());
    }
}
