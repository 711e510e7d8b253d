//! Spectral data checked against an independent cyclic Jacobi eigensolver,
//! closed-form spectra and a Taylor-series matrix exponential.

use exmix_core::graph::{self, Graph};
use exmix_core::spectral;

/// Dense `-L` built directly from the edge list.
fn neg_generator(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.n();
    let r = g.rate_per_edge();
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v) in g.edges() {
        a[u][v] -= r;
        a[v][u] -= r;
        a[u][u] += r;
        a[v][v] += r;
    }
    a
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn test_graphs() -> Vec<Graph> {
    vec![
        graph::complete(4).unwrap(),
        graph::cycle(5).unwrap(),
        graph::cycle(8).unwrap(),
        graph::path(4).unwrap(),
        graph::hypercube(3).unwrap(),
        graph::torus(3, 2).unwrap(),
        graph::random_regular(10, 3, 7).unwrap(),
    ]
}

#[test]
fn eigenvalues_match_jacobi() {
    for g in test_graphs() {
        let sd = spectral::eigendecompose(&g).unwrap();
        let oracle = jacobi_eigenvalues(neg_generator(&g));
        for (a, b) in sd.eigenvalues().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "n = {}: {a} vs {b}", g.n());
        }
    }
}

#[test]
fn cycle_spectrum_is_closed_form() {
    for n in [3, 6, 11] {
        let sd = spectral::eigendecompose(&graph::cycle(n).unwrap()).unwrap();
        let mut expect: Vec<f64> = (0..n).map(|j| 1.0 - (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in sd.eigenvalues().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn complete_graph_gap() {
    // Rate 1/(n-1) per edge gives eigenvalue n/(n-1) with multiplicity n-1.
    for n in [3, 5, 9] {
        let sd = spectral::eigendecompose(&graph::complete(n).unwrap()).unwrap();
        let want = n as f64 / (n - 1) as f64;
        assert!(sd.eigenvalues()[1..].iter().all(|x| (x - want).abs() < 1e-12));
    }
}

/// `exp(tM)` by scaling and squaring with a truncated Taylor series.
fn expm(m: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    let n = m.len();
    let norm = m.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max) * t;
    let squarings = norm.log2().ceil().max(0.0) as i32 + 4;
    let h = t / 2f64.powi(squarings);
    let mul = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
    };
    let ident: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let hm: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x * h).collect()).collect();
    let mut sum = ident.clone();
    let mut term = ident;
    for k in 1..=20 {
        term = mul(&term, &hm).into_iter().map(|r| r.into_iter().map(|x| x / k as f64).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}

#[test]
fn heat_kernel_matches_taylor_exponential() {
    for g in test_graphs() {
        let sd = spectral::eigendecompose(&g).unwrap();
        let l: Vec<Vec<f64>> = neg_generator(&g).into_iter().map(|r| r.into_iter().map(|x| -x).collect()).collect();
        for t in [0.1, 1.0, 5.0] {
            let p = sd.heat_kernel(t);
            let q = expm(&l, t);
            for i in 0..g.n() {
                for j in 0..g.n() {
                    assert!((p[(i, j)] - q[i][j]).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn heat_kernel_is_a_symmetric_stochastic_semigroup() {
    for g in test_graphs() {
        let sd = spectral::eigendecompose(&g).unwrap();
        let (s, t) = (0.7, 1.9);
        let prod = sd.heat_kernel(s) * sd.heat_kernel(t);
        let direct = sd.heat_kernel(s + t);
        assert!((prod - &direct).amax() < 1e-12);
        assert!((direct.transpose() - &direct).amax() < 1e-12);
        for row in direct.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&x| x >= -1e-14));
        }
    }
}

#[test]
fn mixing_times_are_consistent_with_distances() {
    let sd = spectral::eigendecompose(&graph::cycle(7).unwrap()).unwrap();
    for eps in [0.25, 0.05] {
        let t = spectral::t_mix(&sd, eps);
        assert!(sd.tv_worst(t.value) <= eps * (1.0 + 1e-6));
        assert!(sd.tv_worst(t.lower) >= eps * (1.0 - 1e-6));
        let tinf = spectral::t_mix_linf(&sd, eps);
        assert!(tinf.value >= t.lower);
    }
}

#[test]
fn hypercube_relaxation_time_is_half_the_dimension() {
    for d in 1..=6 {
        let sd = spectral::eigendecompose(&graph::hypercube(d).unwrap()).unwrap();
        assert!((sd.rel() - d as f64 / 2.0).abs() < 1e-10);
    }
}
