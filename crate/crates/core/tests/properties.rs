//! Property tests for invariants of the core building blocks.

use exmix_core::chameleon::DoobChain;
use exmix_core::graph;
use exmix_core::inequality;
use exmix_core::rng;
use exmix_core::simulate::{Particles, EMPTY};
use exmix_core::spectral;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_projection_is_feasible_and_idempotent(
        y in prop::collection::vec(-3.0f64..3.0, 1..12),
        s in 0.1f64..4.0,
    ) {
        let x = inequality::project_scaled_simplex(&y, s);
        prop_assert!(x.iter().all(|&v| v >= 0.0));
        prop_assert!((x.iter().sum::<f64>() - s).abs() < 1e-9);
        let again = inequality::project_scaled_simplex(&x, s);
        for (a, b) in x.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn lagrange_minimum_grows_with_delta(pi_a in 0.01f64..0.99, d1 in 0.01f64..0.98, dd in 0.0f64..0.01) {
        let a = inequality::lagrange_min_distance(pi_a, d1).unwrap();
        let b = inequality::lagrange_min_distance(pi_a, d1 + dd).unwrap();
        prop_assert!(a >= 0.0 && b >= a);
    }

    #[test]
    fn swaps_keep_positions_and_occupancy_inverse(
        n in 2usize..12,
        k_frac in 0.0f64..1.0,
        swaps in prop::collection::vec((0usize..64, 0usize..64), 0..80),
    ) {
        let k = ((n as f64 * k_frac) as usize).clamp(1, n);
        let init: Vec<usize> = (0..k).map(|i| (i * 7) % n).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let mut p = Particles::new(n, &init).unwrap();
        for (a, b) in swaps {
            p.swap(a % n, b % n);
        }
        for (label, &v) in p.pos.iter().enumerate() {
            prop_assert_eq!(p.occ[v], label);
        }
        prop_assert_eq!(p.occ.iter().filter(|&&o| o != EMPTY).count(), init.len());
    }

    #[test]
    fn heat_kernel_rows_are_distributions_and_tv_decreases(n in 3usize..14, t in 0.0f64..20.0, dt in 0.0f64..5.0) {
        let sd = spectral::eigendecompose(&graph::cycle(n).unwrap()).unwrap();
        let p = sd.heat_kernel(t);
        for row in p.row_iter() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-10);
            prop_assert!(row.iter().all(|&x| x > -1e-12));
        }
        prop_assert!(sd.tv_worst(t + dt) <= sd.tv_worst(t) + 1e-12);
        prop_assert!(sd.diag_excess(t + dt) <= sd.diag_excess(t) + 1e-12);
    }

    #[test]
    fn bisection_recovers_exponential_decay(rate in 0.05f64..20.0, target in 1e-6f64..0.9) {
        let ts = spectral::first_time_below(|t| (-rate * t).exp(), target);
        let want = (1.0 / target).ln() / rate;
        prop_assert!(ts.lower <= want && want <= ts.value);
        prop_assert!(ts.value - ts.lower <= spectral::BISECTION_RTOL * ts.value * 1.0001);
    }

    #[test]
    fn doob_rows_are_stochastic(size in 2usize..200, alpha in 0.01f64..0.49) {
        let ch = DoobChain::new(size, alpha).unwrap();
        for r in 1..=size {
            let row = ch.row(r);
            prop_assert!((row.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&(s, q)| q >= 0.0 && (1..=size).contains(&s)));
        }
    }

    #[test]
    fn keyed_seeds_are_deterministic(master in any::<u64>(), key in "[a-z_/]{1,24}") {
        prop_assert_eq!(rng::keyed_seed(master, key.as_bytes()), rng::keyed_seed(master, key.as_bytes()));
        let other = format!("{key}!");
        prop_assert_ne!(rng::keyed_seed(master, key.as_bytes()), rng::keyed_seed(master, other.as_bytes()));
    }
}
