//! The ink chains checked against their h-transform and exact distribution
//! iteration, and the chameleon fill probability against `1 / (n - k + 1)`.

use exmix_core::chameleon::{self, Chameleon, DoobChain, Fill};
use exmix_core::graph;
use exmix_core::stats;

#[test]
fn conditioned_chain_is_the_h_transform() {
    for (size, alpha) in [(5, 0.1), (9, 0.2), (17, 0.3), (40, 0.45)] {
        let ch = DoobChain::new(size, alpha).unwrap();
        for r in 1..size {
            let mut want: Vec<(usize, f64)> = ch
                .ink_row(r)
                .into_iter()
                .filter(|&(s, _)| s > 0)
                .map(|(s, q)| (s, q * s as f64 / r as f64))
                .collect();
            let mut got = ch.row(r);
            want.sort_by_key(|e| e.0);
            got.sort_by_key(|e| e.0);
            assert_eq!(want.len(), got.len());
            for (a, b) in want.iter().zip(&got) {
                assert_eq!(a.0, b.0);
                assert!((a.1 - b.1).abs() < 1e-14);
            }
            assert!((got.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }
}

/// Law of the conditioned chain after `steps` steps from state 1.
fn conditioned_law(ch: &DoobChain, steps: usize) -> Vec<Vec<f64>> {
    let mut law = vec![0.0; ch.size + 1];
    law[1] = 1.0;
    let mut out = vec![law.clone()];
    for _ in 0..steps {
        let mut next = vec![0.0; ch.size + 1];
        for (r, &p) in law.iter().enumerate().skip(1) {
            if p > 0.0 {
                for (s, q) in ch.row(r) {
                    next[s] += p * q;
                }
            }
        }
        law = next;
        out.push(law.clone());
    }
    out
}

#[test]
fn missing_ink_decays_geometrically() {
    for (size, alpha) in [(5, 0.1), (9, 0.2), (33, 0.2)] {
        let ch = DoobChain::new(size, alpha).unwrap();
        let c = ch.supermartingale_verify().c;
        assert!(c < 1.0);
        for (i, law) in conditioned_law(&ch, 200).iter().enumerate() {
            let missing: f64 = law.iter().enumerate().map(|(r, p)| p * (1.0 - r as f64 / size as f64)).sum();
            let z: f64 = law.iter().enumerate().skip(1).map(|(r, p)| p * ch.z(r)).sum();
            assert!(missing <= z + 1e-12);
            assert!(z <= c.powi(i as i32) * (size as f64).sqrt() * (1.0 + 1e-9));
        }
    }
}

#[test]
fn simulated_missing_ink_matches_exact_law() {
    let ch = DoobChain::new(9, 0.2).unwrap();
    let est = ch.simulate_y(30, 20_000, 5);
    let laws = conditioned_law(&ch, 30);
    for (i, e) in est.iter().enumerate().step_by(5) {
        let mean: f64 = laws[i].iter().enumerate().map(|(r, p)| p * (1.0 - r as f64 / ch.size as f64)).sum();
        assert!((e.mean - mean).abs() <= 4.0 * e.stderr + 1e-12, "step {i}: {e:?} vs {mean}");
    }
}

#[test]
fn expected_rounds_match_survival_sum() {
    let ch = DoobChain::new(9, 0.2).unwrap();
    for start in [1, 4, 8] {
        let mut law = vec![0.0; ch.size + 1];
        law[start] = 1.0;
        let mut total = 0.0;
        for _ in 0..200_000 {
            let alive: f64 = law[1..ch.size].iter().sum();
            if alive < 1e-13 {
                break;
            }
            total += alive;
            let mut next = vec![0.0; ch.size + 1];
            for (r, &p) in law.iter().enumerate() {
                for (s, q) in ch.ink_row(r) {
                    next[s] += p * q;
                }
            }
            law = next;
        }
        let want = ch.expected_rounds(start).unwrap();
        assert!((total - want).abs() < 1e-8 * want.max(1.0), "{total} vs {want}");
    }
}

#[test]
fn fill_probability_is_one_over_free_count() {
    let g = graph::complete(4).unwrap();
    let params = chameleon::RoundParams::fixed(&exmix_core::spectral::eigendecompose(&g).unwrap(), 2, 0.2, 1e-2, 8.0, 3).unwrap();
    let ch = Chameleon::new(&g, 2, params).unwrap();
    let trials = 6_000;
    let fills = ch.run_many(&[0], 1, &[], trials, 17, |r| r.fill).unwrap();
    let filled = fills.iter().filter(|&&f| f == Fill::Filled).count();
    assert!(fills.iter().all(|&f| f != Fill::Truncated));
    assert!(stats::proportion(filled, trials).z_score(1.0 / 3.0).abs() < 4.0);
}

#[test]
fn chameleon_runs_are_reproducible() {
    let g = graph::cycle(5).unwrap();
    let params = chameleon::RoundParams::fixed(&exmix_core::spectral::eigendecompose(&g).unwrap(), 2, 0.2, 1e-2, 8.0, 1).unwrap();
    let a = chameleon::run_chameleon(&g, &[0], 2, &params, &[1.0], 42).unwrap();
    let b = chameleon::run_chameleon(&g, &[0], 2, &params, &[1.0], 42).unwrap();
    assert_eq!(a, b);
}
