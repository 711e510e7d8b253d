//! Monte Carlo constructions checked against exact laws: hitting times
//! from a linear solve, time-t marginals by chi-square and the fair thinning
//! of the doubled clock.

use exmix_core::exact::{self, ProcessKind};
use exmix_core::graph::{self, Graph};
use exmix_core::simulate::{self, EventSource, Mode, Particles};
use exmix_core::{rng, stats};
use nalgebra::{DMatrix, DVector};

/// Expected time for two labelled particles to become adjacent, from the
/// exact `IP(2)` generator.
fn exact_meeting_time(g: &Graph, start: [usize; 2]) -> f64 {
    let ip = exact::build_exact(g, 2, ProcessKind::Ip).unwrap();
    let adjacent = |s: &[usize]| g.has_edge(s[0], s[1]);
    let transient: Vec<usize> = (0..ip.n_states()).filter(|&i| !adjacent(&ip.states()[i])).collect();
    let pos = |i: usize| transient.iter().position(|&j| j == i);
    let m = transient.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (row, &i) in transient.iter().enumerate() {
        let mut exit = 0.0;
        for &(j, r) in ip.transitions(i) {
            exit += r;
            if let Some(col) = pos(j) {
                a[(row, col)] -= r;
            }
        }
        a[(row, row)] += exit;
    }
    let h = a.lu().solve(&DVector::from_element(m, 1.0)).unwrap();
    h[pos(ip.state_index(&start).unwrap()).unwrap()]
}

fn simulated_meeting_time(g: &Graph, start: [usize; 2], seed: u64) -> f64 {
    let mut p = Particles::new(g.n(), &start).unwrap();
    let mut src = EventSource::new(g, Mode::Standard, rng::stream(seed, 0));
    let edges = g.edges();
    loop {
        let ev = src.next_event();
        let (a, b) = edges[ev.edge];
        p.swap(a, b);
        if g.has_edge(p.pos[0], p.pos[1]) {
            return ev.time;
        }
    }
}

#[test]
fn meeting_time_matches_linear_solve() {
    for (g, start) in [(graph::cycle(8).unwrap(), [0, 4]), (graph::hypercube(3).unwrap(), [0, 7])] {
        let want = exact_meeting_time(&g, start);
        let xs: Vec<f64> = (0..20_000).map(|i| simulated_meeting_time(&g, start, rng::mix(99, i))).collect();
        let est = stats::estimate(&xs);
        assert!(est.z_score(want).abs() < 4.0, "E[H] = {want}, estimate {est:?}");
    }
}

/// Pearson statistic against `expected` probabilities, pooling cells with
/// expected count below five into one.
fn chi_square(counts: &[u64], expected: &[f64]) -> (f64, usize) {
    let total: u64 = counts.iter().sum();
    let (mut stat, mut cells, mut pooled_obs, mut pooled_exp) = (0.0, 0, 0.0, 0.0);
    for (&c, &p) in counts.iter().zip(expected) {
        let e = p * total as f64;
        if e < 5.0 {
            pooled_obs += c as f64;
            pooled_exp += e;
        } else {
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    (stat, cells - 1)
}

/// Chi-square acceptance at roughly five standard deviations.
fn chi_square_ok(stat: f64, df: usize) -> bool {
    stat <= df as f64 + 5.0 * (2.0 * df as f64).sqrt()
}

#[test]
fn simulated_exclusion_marginals_match_exact_law() {
    let g = graph::cycle(6).unwrap();
    let ex = exact::build_exact(&g, 2, ProcessKind::Ex).unwrap();
    let times = [0.5, 2.0];
    let init = [0, 1];
    for mode in [Mode::Standard, Mode::Modified] {
        let mut counts = vec![vec![0u64; ex.n_states()]; times.len()];
        for i in 0..40_000 {
            let pos = simulate::positions_at(&g, mode, &init, &times, rng::stream(7, i)).unwrap();
            for (ti, p) in pos.iter().enumerate() {
                counts[ti][ex.state_index(p).unwrap()] += 1;
            }
        }
        for (ti, &t) in times.iter().enumerate() {
            let law = ex.distribution(ex.state_index(&init).unwrap(), t);
            let (stat, df) = chi_square(&counts[ti], &law);
            assert!(chi_square_ok(stat, df), "{mode:?} t = {t}: chi2 = {stat} on {df} df");
        }
    }
}

#[test]
fn doubled_clock_thins_fairly() {
    let g = graph::hypercube(3).unwrap();
    let mut src = EventSource::new(&g, Mode::Modified, rng::stream(3, 0));
    let m = g.num_edges();
    let mut per_edge = vec![0u64; m];
    let mut swaps = 0u64;
    let total = 60_000;
    for _ in 0..total {
        let ev = src.next_event();
        per_edge[ev.edge] += 1;
        swaps += u64::from(ev.coin);
    }
    let (stat, df) = chi_square(&per_edge, &vec![1.0 / m as f64; m]);
    assert!(chi_square_ok(stat, df));
    assert!(stats::proportion(swaps as usize, total).z_score(0.5).abs() < 4.0);
    // Rate: 2 * |E| * r = 2 * 12 / 3 = 8 events per unit time.
    let rate = total as f64 / src.now();
    assert!((rate / simulate::stream_rate(&g, Mode::Modified) - 1.0).abs() < 0.02);
}

#[test]
fn materialised_stream_replays_the_positions() {
    let g = graph::cycle(7).unwrap();
    let es = simulate::sample_events(&g, 3.0, Mode::Modified, 11).unwrap();
    let snaps = es.run_processes(&[0, 3], &[1.0, 3.0]).unwrap();
    let map = es.interval_map(0.0, 3.0).unwrap();
    assert_eq!(snaps[1].ip, vec![map[0], map[3]]);
    let mut ex = snaps[1].ip.clone();
    ex.sort_unstable();
    assert_eq!(snaps[1].ex, ex);
}
