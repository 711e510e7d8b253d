//! Exact chains checked against projections, particle-hole duality, the
//! single-walk heat kernel and the Chapman-Kolmogorov identity.

use std::collections::HashMap;

use exmix_core::exact::{self, ProcessKind};
use exmix_core::graph::{self, Graph};
use exmix_core::spectral;

fn small_graphs() -> Vec<Graph> {
    vec![graph::cycle(5).unwrap(), graph::complete(4).unwrap(), graph::path(4).unwrap(), graph::hypercube(3).unwrap()]
}

#[test]
fn exclusion_is_the_unlabelled_projection_of_interchange() {
    for g in small_graphs() {
        for k in 1..=2.min(g.n() - 1) {
            let ip = exact::build_exact(&g, k, ProcessKind::Ip).unwrap();
            let ex = exact::build_exact(&g, k, ProcessKind::Ex).unwrap();
            let start: Vec<usize> = (0..k).rev().collect();
            let ip_law = ip.distribution(ip.state_index(&start).unwrap(), 1.3);
            let ex_law = ex.distribution(ex.state_index(&start).unwrap(), 1.3);
            let mut projected: HashMap<usize, f64> = HashMap::new();
            for (s, p) in ip.states().iter().zip(&ip_law) {
                *projected.entry(ex.state_index(s).unwrap()).or_default() += p;
            }
            for (i, p) in ex_law.iter().enumerate() {
                assert!((projected[&i] - p).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn particle_hole_duality() {
    for g in small_graphs() {
        let n = g.n();
        for k in 1..n {
            let a = exact::build_exact(&g, k, ProcessKind::Ex).unwrap();
            let b = exact::build_exact(&g, n - k, ProcessKind::Ex).unwrap();
            assert!((a.gap().unwrap() - b.gap().unwrap()).abs() < 1e-10);
            for t in [0.3, 2.0] {
                assert!((a.worst_tv(t) - b.worst_tv(t)).abs() < 1e-10);
            }
            // The hole configuration has the same law as the complement.
            let s: Vec<usize> = (0..k).collect();
            let holes: Vec<usize> = (k..n).collect();
            let pa = a.distribution(a.state_index(&s).unwrap(), 0.8);
            let pb = b.distribution(b.state_index(&holes).unwrap(), 0.8);
            for (i, st) in a.states().iter().enumerate() {
                let comp: Vec<usize> = (0..n).filter(|v| !st.contains(v)).collect();
                assert!((pa[i] - pb[b.state_index(&comp).unwrap()]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn one_particle_matches_heat_kernel() {
    for g in small_graphs() {
        let sd = spectral::eigendecompose(&g).unwrap();
        for kind in [ProcessKind::Rw, ProcessKind::Ex, ProcessKind::Ip] {
            let p = exact::build_exact(&g, 1, kind).unwrap();
            let law = p.distribution(p.state_index(&[0]).unwrap(), 1.7);
            let row = sd.heat_row(0, 1.7);
            for (s, q) in p.states().iter().zip(&law) {
                assert!((row[s[0]] - q).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn independent_walks_factorise() {
    let g = graph::cycle(5).unwrap();
    let sd = spectral::eigendecompose(&g).unwrap();
    let rw = exact::build_exact(&g, 2, ProcessKind::Rw).unwrap();
    let law = rw.distribution(rw.state_index(&[0, 2]).unwrap(), 0.9);
    let (r0, r2) = (sd.heat_row(0, 0.9), sd.heat_row(2, 0.9));
    for (s, p) in rw.states().iter().zip(&law) {
        assert!((r0[s[0]] * r2[s[1]] - p).abs() < 1e-12);
    }
}

#[test]
fn chapman_kolmogorov() {
    let g = graph::hypercube(3).unwrap();
    let ex = exact::build_exact(&g, 3, ProcessKind::Ex).unwrap();
    let mu = ex.distribution(0, 0.4);
    let twice = ex.evolve(&mu, 1.1);
    let once = ex.distribution(0, 1.5);
    for (a, b) in twice.iter().zip(&once) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn state_counts_are_binomial() {
    assert_eq!(exact::state_count(8, 3, ProcessKind::Ex), Some(56));
    assert_eq!(exact::state_count(8, 3, ProcessKind::Ip), Some(336));
    assert_eq!(exact::state_count(8, 3, ProcessKind::Rw), Some(512));
    let g = graph::cycle(8).unwrap();
    for kind in [ProcessKind::Ex, ProcessKind::Ip, ProcessKind::Rw] {
        let p = exact::build_exact(&g, 3, kind).unwrap();
        assert_eq!(Some(p.n_states()), exact::state_count(8, 3, kind));
    }
}

#[test]
fn generators_are_symmetric_and_conservative() {
    for g in small_graphs() {
        for kind in [ProcessKind::Ex, ProcessKind::Ip] {
            let p = exact::build_exact(&g, 2, kind).unwrap();
            let q = p.generator_dense();
            assert!((q.transpose() - &q).amax() < 1e-15);
            for row in q.row_iter() {
                assert!(row.sum().abs() < 1e-12);
            }
        }
    }
}

#[test]
fn gap_equals_single_walk_gap() {
    for g in small_graphs() {
        for row in exact::aldous_check(&g, &[1, 2]).unwrap() {
            assert!(row.discrepancy < 1e-9, "{row:?}");
        }
    }
}

#[test]
fn reduction_inequalities_hold() {
    let g = graph::cycle(5).unwrap();
    for t in [0.5, 2.0, 6.0] {
        let r = exact::reduction_chain(&g, 2, t).unwrap();
        assert!(r.contraction_holds && r.interpolation_holds && r.tail_holds, "{r:?}");
    }
}

#[test]
fn exclusion_mixing_time_brackets_the_threshold() {
    let g = graph::cycle(6).unwrap();
    let ex = exact::build_exact(&g, 3, ProcessKind::Ex).unwrap();
    let t = ex.mix_time(0.25).unwrap();
    assert!(ex.worst_tv(t.value) <= 0.25 + 1e-9);
    assert!(ex.worst_tv(t.lower) > 0.25 - 1e-9);
}
