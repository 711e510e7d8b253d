//! Round-analysis quantities checked against exact enumeration, the
//! column-sum identity behind the counting bound and a grid search for the
//! Chernoff minimiser.

use exmix_core::diagnostics;
use exmix_core::exact::{self, ProcessKind};
use exmix_core::graph::{self, Graph, OutAdjacency};
use exmix_core::spectral;

/// `Cov(1{u occupied}, 1{v occupied})` under the uniform `k`-subset law.
fn uniform_pair_covariance(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    k * (k - 1.0) / (n * (n - 1.0)) - (k / n).powi(2)
}

#[test]
fn stationary_covariances_match_closed_form() {
    for (g, k) in [(graph::complete(3).unwrap(), 2), (graph::complete(4).unwrap(), 2), (graph::cycle(6).unwrap(), 3), (graph::hypercube(3).unwrap(), 3)] {
        let want = uniform_pair_covariance(g.n(), k);
        for (_, _, cov) in diagnostics::exact_stationary_covariances(&g, k).unwrap() {
            assert!((cov - want).abs() < 1e-12);
        }
    }
}

#[test]
fn exact_time_t_occupations_are_negatively_correlated() {
    for (g, k) in [(graph::cycle(6).unwrap(), 2), (graph::hypercube(3).unwrap(), 3), (graph::path(5).unwrap(), 2)] {
        let ex = exact::build_exact(&g, k, ProcessKind::Ex).unwrap();
        let n = g.n();
        for t in [0.1, 1.0, 3.0] {
            let law = ex.distribution(0, t);
            let mut single = vec![0.0; n];
            let mut pair = vec![vec![0.0; n]; n];
            for (s, p) in ex.states().iter().zip(&law) {
                for &a in s {
                    single[a] += p;
                    for &b in s {
                        pair[a][b] += p;
                    }
                }
            }
            for u in 0..n {
                for v in u + 1..n {
                    assert!(pair[u][v] - single[u] * single[v] <= 1e-13);
                }
            }
        }
    }
}

fn counting_adjacencies() -> Vec<(Graph, Box<dyn OutAdjacency>)> {
    let mut out: Vec<(Graph, Box<dyn OutAdjacency>)> = Vec::new();
    for g in [graph::cycle(8).unwrap(), graph::hypercube(4).unwrap(), graph::torus(4, 2).unwrap()] {
        out.push((g.clone(), Box::new(g.clone())));
        let d_hat = g.d() + 2;
        out.push((g.clone(), Box::new(graph::degree_inflate(&g, d_hat).unwrap())));
    }
    out
}

#[test]
fn neighbourhood_mass_sums_to_weighted_set_size() {
    for (g, adj) in counting_adjacencies() {
        let sd = spectral::eigendecompose(&g).unwrap();
        let n = g.n();
        let mut in_deg = vec![0usize; n];
        for v in 0..n {
            for u in adj.out_of(v) {
                in_deg[u] += 1;
            }
        }
        for size in [1, n / 4, n / 2] {
            let s: Vec<usize> = (0..size).collect();
            for t in [0.25, 2.0] {
                let r = diagnostics::nice_set(adj.as_ref(), &sd, &s, t).unwrap();
                let mass = diagnostics::hit_mass(&sd, &s, t);
                let total: f64 = r.e_t.iter().sum();
                let weighted: f64 = mass.iter().zip(&in_deg).map(|(m, &d)| m * d as f64).sum();
                assert!((total - weighted).abs() < 1e-10);
                assert!(total <= adj.max_in_degree() as f64 * size as f64 + 1e-10);
                // Markov: each vertex outside Nice(S) carries at least the threshold.
                assert!(r.complement_size as f64 * r.threshold <= total + 1e-10);
                assert!(r.counting_holds);
                let outside = (0..n).filter(|v| !r.nice.contains(v)).count();
                assert_eq!(outside, r.complement_size);
                assert!(r.nice.iter().all(|&v| r.e_t[v] < r.threshold));
            }
        }
    }
}

#[test]
fn optimal_lambda_minimises_the_exponent() {
    for (theta, r_frac) in [(0.5, 0.1), (0.3, 0.2), (0.05, 0.1), (0.9, 0.0)] {
        let best = diagnostics::optimal_lambda(theta, r_frac);
        let at_best = diagnostics::chernoff_exponent(best, theta, r_frac);
        let grid_min = (0..=4000).map(|i| diagnostics::chernoff_exponent(i as f64 * 1e-3, theta, r_frac)).fold(f64::INFINITY, f64::min);
        assert!(at_best <= grid_min + 1e-12);
    }
}

#[test]
fn exponent_grid_is_negative() {
    let grid = diagnostics::exponent_sign_grid(10);
    assert_eq!(grid.len(), 100);
    assert!(grid.iter().all(|p| p.exponent < 0.0));
}

#[test]
fn combined_verdict_is_the_worst() {
    use exmix_core::check::Verdict;
    assert_eq!(diagnostics::combine([Verdict::Pass, Verdict::Pass]), Verdict::Pass);
    assert_eq!(diagnostics::combine([Verdict::Pass, Verdict::Fail, Verdict::Inconclusive]), Verdict::Fail);
}
