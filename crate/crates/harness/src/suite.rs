//! Deterministic execution of the configured suites.
//!
//! Every check draws its randomness from a seed keyed by the master seed and
//! the check's name, so the report does not depend on the order in which
//! suites or graphs are listed.

use std::collections::BTreeMap;
use std::time::Instant;

use exmix_core::chameleon::{self, Chameleon, DoobChain, Fill, RoundParams, RoundSchedule};
use exmix_core::check::{Check, Verdict};
use exmix_core::diagnostics::{self, combine, SIGMAS};
use exmix_core::exact::{self, ProcessKind};
use exmix_core::graph::{self, Graph, OutAdjacency};
use exmix_core::inequality;
use exmix_core::profile;
use exmix_core::spectral::{self, SpectralData};
use exmix_core::{rng, Result};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, SuiteKind};
use crate::ratios;
use crate::report::{Record, ReportDocument, Table};

/// Accuracy of the mixing-time sandwiches.
pub const SANDWICH_EPS: f64 = 0.125;

/// The lower-bound constant for exclusion against single-walk mixing.
pub const LOWER_BOUND_CONSTANT: f64 = 1.0 / 8192.0;

/// Accuracy of the black-neighbour large-deviation check.
pub const BLACK_LD_EPS: f64 = 1.0 / 16.0;

/// Accuracy of the white-set checks.
pub const WHITE_EPS: f64 = 0.05;

/// Largest interchange state space on which the ink identity is run.
pub const INK_IDENTITY_CAP: usize = 400;

/// Largest graph on which the `Q(a)` tables are estimated by default.
pub const Q_WEIGHT_CAP: usize = 8;

/// Observation times of the ink identity.
pub const INK_TIMES: [f64; 3] = [0.5, 1.0, 2.0];

/// Accepted `|z|` of the ink identity.
pub const INK_Z_MAX: f64 = 4.0;

/// Seed for the check called `name`.
pub fn seed_for(master: u64, name: &str) -> u64 {
    rng::keyed_seed(master, name.as_bytes())
}

/// Short rounds for the ink identity, which holds for any schedule; short
/// rounds make the observation times span several rounds and burn-ins.
pub fn identity_params(g: &Graph, k: usize, alpha: f64, goodness_trials: usize, seed: u64) -> Result<RoundParams> {
    let p = RoundParams {
        alpha,
        schedule: RoundSchedule::Fixed { t_round: 1.5 },
        burn_in: 0.25,
        goodness_trials,
        seed,
        max_steps: chameleon::default_max_steps(g.n(), k, alpha)?,
        allow_irregular: true,
    };
    p.validate()?;
    Ok(p)
}

/// Starting configuration used by the chameleon checks: blacks on
/// `0..k-1` and the red particle on `k - 1`.
pub fn standard_start(k: usize) -> (Vec<usize>, usize) {
    ((0..k - 1).collect(), k - 1)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    records: Vec<Record>,
}

impl Ctx<'_> {
    fn seed(&self, name: &str) -> u64 {
        seed_for(self.cfg.seed, name)
    }

    /// Runs `f`, timing it and turning an error into an inconclusive record.
    fn run(&mut self, name: &str, claim: &str, inputs: Value, f: impl FnOnce(u64) -> Result<Vec<Record>>) {
        let start = Instant::now();
        match f(self.seed(name)) {
            Ok(rs) => {
                let elapsed = start.elapsed().as_secs_f64();
                let share = elapsed / rs.len().max(1) as f64;
                for mut r in rs {
                    r.runtime_secs = share;
                    self.records.push(r);
                }
            }
            Err(e) => self.records.push(Record::errored(name, claim, inputs, e).timed(start)),
        }
    }
}

/// Collapses many library checks with the same name into one record holding
/// the smallest margin and the combined verdict.
fn aggregate(scope: &str, checks: &[Check]) -> Vec<Record> {
    let mut groups: BTreeMap<&str, Vec<&Check>> = BTreeMap::new();
    for c in checks {
        groups.entry(c.name.as_str()).or_default().push(c);
    }
    groups
        .into_iter()
        .map(|(_, cs)| {
            let worst = cs
                .iter()
                .filter(|c| c.margin.is_finite())
                .min_by(|a, b| a.margin.total_cmp(&b.margin))
                .copied()
                .unwrap_or(cs[0]);
            let mut r = Record::from_check(scope, worst);
            r.verdict = combine(cs.iter().map(|c| c.verdict));
            r.inputs = json!({ "cases": cs.len(), "worst_case": worst.inputs });
            r
        })
        .collect()
}

/// Executes the selected suites.
pub fn run_suite(cfg: &ExperimentConfig) -> ReportDocument {
    let mut doc = ReportDocument::new(cfg);
    let mut ctx = Ctx { cfg, records: Vec::new() };
    for &suite in &cfg.suites {
        if suite == SuiteKind::Ratios {
            let (rows, skipped) = ratios::shape_ratios(&cfg.graphs, &cfg.k_list, cfg.process.eps);
            doc.tables.push(ratio_table(&rows));
            for row in &rows {
                let scope = format!("ratios/{}/k={}", row.graph, row.k);
                let inputs = json!({ "graph": row.graph, "k": row.k });
                ctx.records.push(Record::report_only(format!("{scope}/upper_shape"), "mix^EX(k) / ((rel + r_*) log 4n)", inputs.clone(), row.upper_shape));
                ctx.records.push(Record::report_only(format!("{scope}/high_degree_shape"), "mix^EX(k) / (rel log 4n)", inputs.clone(), row.high_degree_shape));
                if let Some(o) = row.oliveira {
                    ctx.records.push(Record::report_only(format!("{scope}/oliveira"), "mix^EX(k) / mix^RW(k)", inputs.clone(), o));
                }
                if let Some(s) = row.family_shape {
                    ctx.records.push(Record::report_only(format!("{scope}/family_shape"), "mix^EX(k) over the family scale", inputs, s));
                }
            }
            for (name, k, reason) in skipped {
                ctx.records.push(Record::errored(format!("ratios/{name}/k={k}"), "mixing-time shape ratios", json!({ "graph": name, "k": k }), reason));
            }
            continue;
        }
        if suite == SuiteKind::Exact {
            lagrange_checks(&mut ctx, 5);
        }
        if suite == SuiteKind::Diagnostics {
            chernoff_grid(&mut ctx);
        }
        for spec in &cfg.graphs {
            let name = spec.name();
            let built = graph::build_graph(spec).and_then(|g| spectral::eigendecompose(&g).map(|sd| (g, sd)));
            let (g, sd) = match built {
                Ok(x) => x,
                Err(e) => {
                    ctx.records.push(Record::errored(format!("{}/{name}", suite.name()), "graph construction", json!(spec), e));
                    continue;
                }
            };
            match suite {
                SuiteKind::Spectral => spectral_suite(&mut ctx, &name, &g, &sd),
                SuiteKind::Exact => exact_suite(&mut ctx, &name, &g, &sd),
                SuiteKind::Chameleon => chameleon_suite(&mut ctx, &name, &g, &sd),
                SuiteKind::Diagnostics => diagnostics_suite(&mut ctx, &name, &g, &sd),
                SuiteKind::Ratios => unreachable!("handled above"),
            }
        }
    }
    doc.records = ctx.records;
    doc
}

fn ratio_table(rows: &[ratios::RatioRow]) -> Table {
    let mut t = Table::new(
        "shape_ratios",
        &["graph", "n", "d", "k", "mix_ex", "mix_rw1", "mix_rw_k", "rel", "r_star", "upper_shape", "oliveira", "high_degree_shape", "family_shape"],
    );
    for r in rows {
        t.push(vec![
            json!(r.graph),
            json!(r.n),
            json!(r.d),
            json!(r.k),
            json!(r.mix_ex),
            json!(r.mix_rw1),
            json!(r.mix_rw_k),
            json!(r.rel),
            json!(r.r_star),
            json!(r.upper_shape),
            json!(r.oliveira),
            json!(r.high_degree_shape),
            json!(r.family_shape),
        ]);
    }
    t
}

fn matrix_max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn spectral_suite(ctx: &mut Ctx, name: &str, g: &Graph, sd: &SpectralData) {
    let scope = format!("spectral/{name}");
    let eps = ctx.cfg.process.eps;
    ctx.run(&format!("{scope}/heat_kernel"), "P_t symmetric, stochastic and a semigroup", json!({ "graph": name }), |_| {
        let mut worst_sym: f64 = 0.0;
        let mut worst_row: f64 = 0.0;
        let mut worst_neg: f64 = 0.0;
        for t in [0.0, 0.5, 2.0] {
            let p = sd.heat_kernel(t);
            worst_sym = worst_sym.max(matrix_max_abs(&(&p - p.transpose())));
            for row in p.row_iter() {
                worst_row = worst_row.max((row.sum() - 1.0).abs());
            }
            worst_neg = worst_neg.max(-p.min());
        }
        let mut worst_semi: f64 = 0.0;
        for (s, t) in [(0.3, 0.7), (1.0, 2.0)] {
            let lhs = sd.heat_kernel(s + t);
            let rhs = sd.heat_kernel(s) * sd.heat_kernel(t);
            worst_semi = worst_semi.max(matrix_max_abs(&(lhs - rhs)));
        }
        let inputs = json!({ "graph": name });
        Ok(vec![
            Record::upper(format!("{scope}/heat_kernel_symmetric"), "max |P_t - P_t^T|", inputs.clone(), worst_sym, 1e-10, Verdict::from_bool(worst_sym <= 1e-10)),
            Record::upper(format!("{scope}/heat_kernel_stochastic"), "max |row sum - 1|", inputs.clone(), worst_row, 1e-10, Verdict::from_bool(worst_row <= 1e-10)),
            Record::upper(format!("{scope}/heat_kernel_nonnegative"), "max negative entry", inputs.clone(), worst_neg, 1e-10, Verdict::from_bool(worst_neg <= 1e-10)),
            Record::upper(format!("{scope}/semigroup"), "max |P_(s+t) - P_s P_t|", inputs, worst_semi, 1e-8, Verdict::from_bool(worst_semi <= 1e-8)),
        ])
    });
    ctx.run(&format!("{scope}/functionals"), "mixing functionals and functional inequalities", json!({ "graph": name, "eps": eps }), |seed| {
        let mixf = spectral::mixing_functionals(sd, &[eps, SANDWICH_EPS], seed)?;
        let table = profile::profiles(g, sd, eps)?;
        let mut out = Vec::new();
        let inputs = json!({ "graph": name, "eps": eps });
        out.push(Record::report_only(format!("{scope}/rel"), "relaxation time", inputs.clone(), mixf.rel));
        let e0 = &mixf.per_eps[0];
        for (label, v) in [
            ("t_mix", e0.t_mix.value),
            ("t_mix_linf", e0.t_mix_linf.value),
            ("r_star", e0.r_star.value),
            ("t_star", e0.t_star.value),
            ("s_star", e0.s_star.value),
        ] {
            out.push(Record::report_only(format!("{scope}/{label}"), label, inputs.clone(), v));
        }
        out.push(Record::report_only(format!("{scope}/c_ls_lower"), "log-Sobolev lower bracket", inputs.clone(), mixf.c_ls.lower));
        out.push(Record::report_only(format!("{scope}/c_ls_upper"), "log-Sobolev upper bracket", inputs.clone(), mixf.c_ls.upper));
        out.push(Record::new(
            format!("{scope}/cheeger_sandwich"),
            "isoperimetric sandwich of the spectral profile on every grid point",
            inputs.clone(),
            f64::NAN,
            f64::NAN,
            f64::NAN,
            Verdict::from_bool(table.cheeger_holds()),
        ));
        out.push(Record::new(
            format!("{scope}/profile_monotone"),
            "spectral profile non-increasing",
            inputs.clone(),
            f64::NAN,
            f64::NAN,
            f64::NAN,
            Verdict::from_bool(table.lambda_monotone()),
        ));
        // Λ is +inf below 1/n and non-increasing, so its largest finite
        // value sits at δ = 1/n.
        let delta = eps.max(1.0 / g.n() as f64);
        let lam = table.lambda(delta);
        out.push(Record::upper(
            format!("{scope}/profile_small_sets"),
            "Λ(max(ε, 1/n)) <= 2",
            json!({ "graph": name, "delta": delta }),
            lam.lower,
            2.0,
            Verdict::bracketed(lam.upper <= 2.0, lam.lower <= 2.0),
        ));
        let ineq = inequality::inequality_suite(sd, &table, &mixf, seed);
        out.extend(aggregate(&scope, &ineq.checks));
        out.push(Record::report_only(format!("{scope}/t_sp_half_constant"), "t_sp(1/2) c_LS / log log n", inputs, ineq.t_sp_half_constant));
        out.extend(aggregate(&scope, &inequality::distortion_checks(sd, mixf.c_ls.upper)));
        Ok(out)
    });
}

fn lagrange_checks(ctx: &mut Ctx, count: usize) {
    let name = "exact/lagrange_minimum";
    ctx.run(name, "closed-form L2 minimum equals the simplex minimisation", json!({ "pairs": count }), |seed| {
        let pairs = lagrange_pairs(count, seed);
        let mut worst: f64 = 0.0;
        for &(n, a, delta) in &pairs {
            let closed = inequality::lagrange_min_distance(a as f64 / n as f64, delta)?;
            let numeric = inequality::simplex_min_distance(n, a, delta, seed)?.value;
            worst = worst.max((closed - numeric).abs());
        }
        Ok(vec![Record::upper(name, "max |closed form - numeric minimum|", json!({ "pairs": pairs }), worst, 1e-6, Verdict::from_bool(worst <= 1e-6))])
    });
}

/// Random `(n, |A|, δ)` triples.
pub fn lagrange_pairs(count: usize, seed: u64) -> Vec<(usize, usize, f64)> {
    use rand::Rng;
    let mut r = rng::stream(seed, 0);
    (0..count)
        .map(|_| {
            let n = r.random_range(4..=16);
            let a = r.random_range(1..n);
            let delta = r.random_range(0.05..0.95);
            (n, a, delta)
        })
        .collect()
}

fn exact_suite(ctx: &mut Ctx, name: &str, g: &Graph, sd: &SpectralData) {
    let n = g.n();
    let ks: Vec<usize> = ctx.cfg.k_list.iter().copied().filter(|&k| k < n).collect();
    for k in ks {
        let scope = format!("exact/{name}/k={k}");
        let inputs = json!({ "graph": name, "k": k });
        ctx.run(&format!("{scope}/gaps"), "gap(EX(k)) = gap(IP(k)) = gap(RW(1))", inputs.clone(), |_| {
            let rows = exact::aldous_check(g, &[k])?;
            let worst = rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
            Ok(vec![Record::upper(format!("{scope}/gaps"), "max gap discrepancy", inputs.clone(), worst, 1e-8, Verdict::from_bool(worst <= 1e-8))])
        });
        ctx.run(&format!("{scope}/lower_bound"), "mix^EX(k) >= 2^-13 mix^RW(1)", inputs.clone(), |_| {
            let ex = exact::build_exact(g, k, ProcessKind::Ex)?.mix_time(0.25)?.value;
            let rw = spectral::t_mix(sd, 0.25).value;
            let bound = LOWER_BOUND_CONSTANT * rw;
            Ok(vec![Record::new(format!("{scope}/lower_bound"), "mix^EX(k) >= 2^-13 mix^RW(1)", inputs.clone(), ex, bound, ex - bound, Verdict::from_bool(ex >= bound))])
        });
        if n.checked_pow(k as u32).is_some_and(|s| s <= ratios::RW_PRODUCT_CAP) && 4.0 * SANDWICH_EPS / (k as f64) < 1.0 {
            ctx.run(&format!("{scope}/product_sandwich"), "t^RW(1)(4ε/k)/2 <= t^RW(k)(ε) <= t^RW(1)(ε/k)", inputs.clone(), |_| {
                let (lo, mid, hi) = product_sandwich(g, sd, k, SANDWICH_EPS)?;
                let tol = 4.0 * spectral::BISECTION_RTOL * hi;
                Ok(vec![
                    Record::new(format!("{scope}/product_sandwich_lower"), "t^RW(1)(4ε/k)/2 <= t^RW(k)(ε)", inputs.clone(), mid, lo, mid - lo, Verdict::from_bool(lo <= mid + tol)),
                    Record::upper(format!("{scope}/product_sandwich_upper"), "t^RW(k)(ε) <= t^RW(1)(ε/k)", inputs.clone(), mid, hi, Verdict::from_bool(mid <= hi + tol)),
                ])
            });
        }
        if exact::state_count(n, k, ProcessKind::Ip).is_some_and(|c| c <= 2000) && k >= 1 {
            ctx.run(&format!("{scope}/reduction_chain"), "EX TV <= IP TV <= max Δ <= k max Δ_last <= 2k max tail TV", inputs.clone(), |_| {
                let mut out = Vec::new();
                for t in [0.5, 1.0, 2.0] {
                    let rc = exact::reduction_chain(g, k, t)?;
                    let ok = rc.contraction_holds && rc.interpolation_holds && rc.tail_holds;
                    out.push(Record::upper(
                        format!("{scope}/reduction_chain/t={t}"),
                        "reduction chain of total-variation bounds",
                        json!({ "graph": name, "k": k, "t": t, "ex_tv": rc.ex_tv, "ip_tv": rc.ip_tv, "max_delta_last": rc.max_delta_last, "max_tail_tv": rc.max_tail_tv }),
                        rc.ex_tv,
                        rc.max_delta,
                        Verdict::from_bool(ok),
                    ));
                }
                Ok(out)
            });
        }
        if k >= 2 {
            ctx.run(&format!("{scope}/eigenfunction_bound"), "eigenfunction lower bound below exact mixing", inputs.clone(), |_| {
                let eps = 0.05;
                let b = inequality::eigenfunction_lower_bound(sd, k, 0.25, eps)?;
                let inputs = json!({ "graph": name, "k": k, "delta": 0.25, "eps": eps, "feasible": b.feasible });
                if !b.feasible {
                    return Ok(vec![Record::report_only(format!("{scope}/eigenfunction_bound"), "premises fail; bound vacuous", inputs, b.exponent)]);
                }
                let ex = exact::build_exact(g, k, ProcessKind::Ex)?.mix_time(1.0 - eps)?.value;
                Ok(vec![Record::upper(format!("{scope}/eigenfunction_bound"), "eigenfunction bound <= mix^EX(k)(1-ε)", inputs, b.t_bound, ex, Verdict::from_bool(b.t_bound <= ex))])
            });
        }
    }
}

/// `(t^RW(1)(4ε/k)/2, t^RW(k)(ε), t^RW(1)(ε/k))`.
pub fn product_sandwich(g: &Graph, sd: &SpectralData, k: usize, eps: f64) -> Result<(f64, f64, f64)> {
    let kf = k as f64;
    let lo = 0.5 * spectral::t_mix(sd, 4.0 * eps / kf).value;
    let mid = exact::rw_k_mix_time(g, sd, k, eps)?.value;
    let hi = spectral::t_mix(sd, eps / kf).value;
    Ok((lo, mid, hi))
}

fn chameleon_suite(ctx: &mut Ctx, name: &str, g: &Graph, sd: &SpectralData) {
    let n = g.n();
    let p = ctx.cfg.process.clone();
    let tr = ctx.cfg.trials.clone();
    let ks: Vec<usize> = ctx.cfg.k_list.iter().copied().filter(|&k| k >= 1 && k < n).collect();
    for k in ks {
        let scope = format!("chameleon/{name}/k={k}");
        let n_free = n - k + 1;
        let inputs = json!({ "graph": name, "k": k, "alpha": p.alpha, "eps": p.eps, "c_round": p.c_round });
        let doob = DoobChain::new(n_free, p.alpha);
        ctx.run(&format!("{scope}/fill"), "P[Fill] = 1/(n-k+1)", inputs.clone(), |seed| {
            let mut params = RoundParams::fixed(sd, k, p.alpha, p.eps, p.c_round, seed)?;
            params.goodness_trials = tr.goodness;
            let ch = Chameleon::new(g, k, params)?;
            let (w, y) = standard_start(k);
            let records = ch.run_many(&w, y, &[], tr.chameleon, rng::mix(seed, 1), |mut r| {
                r.observations.clear();
                r
            })?;
            let filled = records.iter().filter(|r| r.fill == Fill::Filled).count();
            let truncated = records.iter().filter(|r| r.fill == Fill::Truncated).count();
            let est = exmix_core::stats::proportion(filled, records.len());
            let target = 1.0 / n_free as f64;
            let z = est.z_score(target);
            let mut out = vec![Record::new(
                format!("{scope}/fill"),
                "P[Fill] = 1/(n-k+1) within 3 standard errors",
                json!({ "graph": name, "k": k, "runs": records.len(), "truncated": truncated, "stderr": est.stderr, "z": z }),
                est.mean,
                target,
                SIGMAS - z.abs(),
                Verdict::from_bool(z.abs() <= SIGMAS),
            )];
            let c = DoobChain::new(n_free, p.alpha)?.supermartingale_verify().c;
            let missing = chameleon::missing_ink_curves(&records, n_free, c, 30);
            let worst = missing
                .rows
                .iter()
                .map(|r| (r.missing.mean - SIGMAS * r.missing.stderr) - r.bound)
                .fold(f64::NEG_INFINITY, f64::max);
            let verdict = if missing.warning.is_some() { Verdict::Inconclusive } else { Verdict::from_bool(worst <= 0.0) };
            let mut rec = Record::new(
                format!("{scope}/missing_ink"),
                "E[1 - ink/N | Fill] after i rounds below √N c^i plus extra burn-in frequency",
                json!({ "graph": name, "k": k, "filled_runs": missing.filled_runs, "c": c }),
                worst,
                0.0,
                -worst,
                verdict,
            );
            if let Some(w) = missing.warning {
                rec = rec.with_note(w);
            }
            out.push(rec);
            Ok(out)
        });
        ctx.run(&format!("{scope}/doob"), "Doob ink chain supermartingale and decay", inputs.clone(), |seed| {
            let chain = doob?;
            let rep = chain.supermartingale_verify();
            let mut out = vec![Record::upper(format!("{scope}/doob_c"), "drift constant c < 1", json!({ "N": n_free, "alpha": p.alpha }), rep.c, 1.0, Verdict::from_bool(rep.c < 1.0))];
            let (worst, verdict) = doob_decay(&chain, rep.c, 30, tr.mc, seed);
            out.push(Record::new(
                format!("{scope}/doob_decay"),
                "E[1 - I_i] <= c^i √N within 3σ",
                json!({ "N": n_free, "alpha": p.alpha, "steps": 30 }),
                worst,
                0.0,
                -worst,
                verdict,
            ));
            Ok(out)
        });
        let ip_states = exact::state_count(n, k, ProcessKind::Ip).unwrap_or(usize::MAX);
        if k >= 2 && ip_states <= INK_IDENTITY_CAP {
            ctx.run(&format!("{scope}/ink_identity"), "E[ink_t(b) 1{z_t = c}] equals the interchange law", inputs.clone(), |seed| {
                let params = identity_params(g, k, p.alpha, tr.goodness, seed)?;
                let (w, y) = standard_start(k);
                let rows = chameleon::verify_ink_identity(g, &w, y, &params, &INK_TIMES, tr.mc, rng::mix(seed, 1))?;
                let worst = rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
                Ok(vec![Record::upper(
                    format!("{scope}/ink_identity"),
                    "max |z| over interchange states and times",
                    json!({ "graph": name, "k": k, "trials": tr.mc, "rows": rows.len() }),
                    worst,
                    INK_Z_MAX,
                    Verdict::from_bool(worst <= INK_Z_MAX),
                )])
            });
        }
    }
}

/// Largest `(mean - 3σ) - c^i √N` of the simulated `1 - I_i` and the verdict.
pub fn doob_decay(chain: &DoobChain, c: f64, steps: usize, trials: usize, seed: u64) -> (f64, Verdict) {
    let est = chain.simulate_y(steps, trials, seed);
    let root = (chain.size as f64).sqrt();
    let worst = est
        .iter()
        .enumerate()
        .map(|(i, e)| (e.mean - SIGMAS * e.stderr) - c.powi(i as i32) * root)
        .fold(f64::NEG_INFINITY, f64::max);
    (worst, Verdict::from_bool(worst <= 0.0))
}

fn chernoff_grid(ctx: &mut Ctx) {
    let name = "diagnostics/chernoff_grid";
    ctx.run(name, "(1/d) log L <= -0.0008 on the grid", json!({ "side": 10 }), |_| {
        let grid = diagnostics::exponent_sign_grid(10);
        let worst = grid.iter().map(|p| p.exponent).fold(f64::NEG_INFINITY, f64::max);
        Ok(vec![Record::upper(name, "largest exponent on the 10 x 10 grid", json!({ "points": grid.len(), "lambda": 0.05 }), worst, -0.0008, Verdict::from_bool(worst <= -0.0008))])
    });
}

/// `(graph label, adjacency)` pairs for the counting lemmas: the graph and,
/// when possible, its inflation to out-degree `d + 1`.
fn adjacencies(name: &str, g: &Graph) -> Vec<(String, Box<dyn OutAdjacency>)> {
    let mut out: Vec<(String, Box<dyn OutAdjacency>)> = vec![(name.to_string(), Box::new(g.clone()))];
    if let Ok(mg) = graph::degree_inflate(g, g.d() + 1) {
        out.push((format!("{name}+dummy"), Box::new(mg)));
    }
    out
}

/// Nested sets `{0..m}` for `m` in `{1, n/4, n/2}`.
pub fn prefix_sets(n: usize) -> Vec<Vec<usize>> {
    let mut sizes = vec![1, n / 4, n / 2];
    sizes.retain(|&m| m >= 1);
    sizes.sort_unstable();
    sizes.dedup();
    sizes.into_iter().map(|m| (0..m).collect()).collect()
}

fn diagnostics_suite(ctx: &mut Ctx, name: &str, g: &Graph, sd: &SpectralData) {
    let n = g.n();
    let p = ctx.cfg.process.clone();
    let tr = ctx.cfg.trials.clone();
    let scope = format!("diagnostics/{name}");
    let gi = json!({ "graph": name });
    ctx.run(&format!("{scope}/nice_counting"), "|Nice(S)^c| below the counting bound", gi.clone(), |_| {
        let mut out = Vec::new();
        for (label, adj) in adjacencies(name, g) {
            let mut worst: f64 = f64::INFINITY;
            let mut all = true;
            let mut cases = 0;
            for s in prefix_sets(n) {
                for t in [0.5, 1.0, 2.0] {
                    let r = diagnostics::nice_set(adj.as_ref(), sd, &s, t)?;
                    worst = worst.min(r.counting_bound - r.complement_size as f64);
                    all &= r.counting_holds;
                    cases += 1;
                }
            }
            out.push(Record::new(format!("{scope}/nice_counting/{label}"), "smallest room in the counting bound", json!({ "adjacency": label, "cases": cases }), f64::NAN, f64::NAN, worst, Verdict::from_bool(all)));
        }
        Ok(out)
    });
    if g.is_regular() {
        ctx.run(&format!("{scope}/bn"), "P[v in BN(S) | v in N(S)] below the Chernoff bound", gi.clone(), |seed| {
            let s: Vec<usize> = (0..(n / 4).max(1)).collect();
            let r = diagnostics::bn_gn_estimate(g, sd, &s, 1.0, 0.5, tr.mc, seed)?;
            let worst = r.rows.iter().filter(|x| x.hits > 0).map(|x| x.frequency.mean).fold(0.0, f64::max);
            Ok(vec![Record::upper(format!("{scope}/bn"), "largest crowded-neighbourhood frequency", json!({ "graph": name, "s": s, "t": 1.0, "theta": 0.5 }), worst, r.bound, r.verdict)])
        });
    }
    let ks: Vec<usize> = ctx.cfg.k_list.iter().copied().filter(|&k| k >= 1 && k < n).collect();
    for &k in &ks {
        let scope_k = format!("{scope}/k={k}");
        let inputs = json!({ "graph": name, "k": k });
        ctx.run(&format!("{scope_k}/na"), "pairwise occupation covariances <= 3σ", inputs.clone(), |seed| {
            let init: Vec<usize> = (0..k).collect();
            let rows = diagnostics::na_covariances(g, &init, &INK_TIMES, tr.mc, seed)?;
            let worst = rows.iter().map(|r| r.cov.mean / r.cov.stderr.max(1e-300)).fold(f64::NEG_INFINITY, f64::max);
            let mut out = vec![Record::upper(format!("{scope_k}/na"), "largest covariance in standard errors", json!({ "graph": name, "k": k, "pairs": rows.len() }), worst, SIGMAS, combine(rows.iter().map(|r| r.verdict)))];
            let cna = diagnostics::cna_probe(g, &init, 1.0, &[(n - 1, true)], tr.mc, rng::mix(seed, 1))?;
            let worst_c = cna.rows.iter().map(|r| r.cov.mean / r.cov.stderr.max(1e-300)).fold(f64::NEG_INFINITY, f64::max);
            out.push(Record::upper(format!("{scope_k}/cna"), "largest conditional covariance in standard errors", json!({ "graph": name, "k": k, "hits": cna.hits }), worst_c, SIGMAS, cna.verdict));
            if exact::state_count(n, k, ProcessKind::Ex).is_some_and(|c| c <= exact::STATE_CAP) {
                let cov = diagnostics::exact_stationary_covariances(g, k)?;
                let max_cov = cov.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
                out.push(Record::upper(format!("{scope_k}/stationary_na"), "largest exact stationary covariance", json!({ "graph": name, "k": k }), max_cov, 0.0, Verdict::from_bool(max_cov <= 1e-12)));
            }
            Ok(out)
        });
        if k >= 2 && 2 * k <= n && g.is_regular() {
            ctx.run(&format!("{scope_k}/black_ld"), "crowded black neighbourhoods below exp(-d ε m)", inputs.clone(), |seed| {
                let blacks: Vec<usize> = (0..k - 1).collect();
                let b = spectral::t_mix_linf(sd, (n as f64).powi(-10)).value;
                let r = diagnostics::black_ld_check(g, sd, k, &blacks, BLACK_LD_EPS, &[b, b + 1.0], tr.mc, seed)?;
                let worst = r.rows.iter().map(|x| x.worst.mean).fold(0.0, f64::max);
                Ok(vec![Record::upper(format!("{scope_k}/black_ld"), "largest crowded-black frequency", json!({ "graph": name, "k": k, "eps": BLACK_LD_EPS, "m": r.m }), worst, r.bound, r.verdict)])
            });
        }
        if k >= 2 && n <= Q_WEIGHT_CAP && g.is_regular() {
            ctx.run(&format!("{scope_k}/q_weights"), "Q(a) below the largest heat-kernel entry at t_*", inputs.clone(), |seed| {
                let t_big = round_horizon(sd, p.eps);
                let r = diagnostics::q_weight_checks(g, sd, k, p.eps, t_big, tr.mc, seed)?;
                Ok(vec![
                    Record::upper(format!("{scope_k}/q_weights"), "largest estimated Q(a)", json!({ "graph": name, "k": k, "eps": p.eps, "t": t_big, "argmax": r.argmax }), r.max_q.mean, r.p_max, r.verdict),
                    Record::report_only(format!("{scope_k}/q_weights_exceedance"), "frequency of the black weight above k/n + 1/16", json!({ "graph": name, "k": k }), r.exceedance),
                ])
            });
        }
    }
    if g.is_regular() {
        ctx.run(&format!("{scope}/white"), "Q(S) size bound and no-white-neighbour probability", gi.clone(), |seed| {
            let s: Vec<usize> = (0..n / 2).collect();
            let t = sd.rel() * (1.0 / WHITE_EPS).ln();
            let r = diagnostics::white_set_checks(g, sd, &s, t, WHITE_EPS, tr.mc, seed)?;
            let mut out = Vec::new();
            let inputs = json!({ "graph": name, "s": s, "t": t, "eps": WHITE_EPS });
            match r.size_verdict {
                Some(v) => out.push(Record::upper(format!("{scope}/white_size"), "|Q(S)| <= 8εn d_max_in / d̂", inputs.clone(), r.q_set.len() as f64, r.size_bound, v)),
                None => out.push(Record::report_only(format!("{scope}/white_size"), "size bound skipped", inputs.clone(), r.q_set.len() as f64).with_note(r.skip_reason.clone().unwrap_or_default())),
            }
            let worst = r.worst_neighbour.map(|e| e.mean).unwrap_or(f64::NAN);
            out.push(Record::upper(format!("{scope}/white_neighbour"), "largest no-white-neighbour frequency", inputs, worst, r.neighbour_bound, r.neighbour_verdict));
            Ok(out)
        });
        ctx.run(&format!("{scope}/interactions"), "expected interactions by t_* within the general bound", gi, |seed| {
            let t_big = round_horizon(sd, p.eps);
            let r = diagnostics::interaction_check(g, sd, p.eps, t_big, false, (tr.mc / 10).max(100), seed)?;
            let inputs = json!({ "graph": name, "eps": p.eps, "t_star": r.t_star, "t": t_big, "p_star": r.p_star });
            Ok(vec![
                Record::upper(format!("{scope}/interactions"), "max_v E[N̂_(t_*)(v)] <= 8 d t_* p*", inputs.clone(), r.worst.mean, r.general_bound, r.verdict),
                Record::upper(format!("{scope}/interactions_literal"), "max_v E[N̂_(t_*)(v)] <= 8 d ε (needs 1/n <= ε/t_*)", inputs, r.worst.mean, r.literal_bound, Verdict::ReportOnly),
            ])
        });
    }
}

/// `t_*(ε) + s_*(ε) + rel`, the span of one fixed round before scaling.
pub fn round_horizon(sd: &SpectralData, eps: f64) -> f64 {
    spectral::t_star(sd, eps).value + spectral::s_star(sd, eps).value + sd.rel()
}
