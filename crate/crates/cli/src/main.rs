//! `exmix`: command-line front end. Every subcommand prints JSON to stdout
//! (or writes it to `--out`).

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use exmix_core::chameleon::{Chameleon, Fill, RoundParams};
use exmix_core::diagnostics;
use exmix_core::exact::{self, ProcessKind};
use exmix_core::graph::{self, Graph, GraphSpec};
use exmix_core::simulate::{positions_at, Mode};
use exmix_core::{profile, rng, spectral, stats};
use exmix_harness::{run_suite, ExperimentConfig};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "exmix", version, about = "Exclusion-process mixing laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph and write it in the edge-list text format.
    Gen {
        /// Graph name such as `C6`, `K4`, `P3`, `Q3` or `T4^2`, or a JSON spec.
        spec: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectrum, mixing functionals and profile integrals of one graph.
    Spectral {
        #[arg(long)]
        graph: String,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.25")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo occupation frequencies of the exclusion process.
    Simulate {
        #[arg(long)]
        graph: String,
        /// Initially occupied vertices.
        #[arg(long, value_delimiter = ',')]
        init: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        times: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, value_enum, default_value = "standard")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fixed-round chameleon runs and the fill probability.
    Chameleon {
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        runs: usize,
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 8.0)]
        c_round: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact gap and mixing time of RW(k), EX(k) or IP(k).
    Exact {
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value = "ex")]
        process: ProcessArg,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One family of round-analysis diagnostics.
    Diag {
        #[arg(long, value_enum)]
        suite: DiagSuite,
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Time horizon `T`; defaults per suite.
        #[arg(long)]
        t: Option<f64>,
        /// Accuracy; defaults per suite.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 20_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured suites and write the report.
    Suite {
        /// JSON config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for CSV tables.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Standard,
    Modified,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProcessArg {
    Rw,
    Ex,
    Ip,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagSuite {
    Nice,
    Chernoff,
    Na,
    White,
    Blackld,
}

/// Parses `K4`, `C6`, `P3`, `Q3`, `T4^2` or a JSON graph spec.
fn parse_spec(s: &str) -> Result<GraphSpec> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).context("graph spec JSON");
    }
    let (head, rest) = s.split_at(1);
    let num = |x: &str| x.parse::<usize>().with_context(|| format!("bad graph name {s:?}"));
    Ok(match head {
        "K" => GraphSpec::Complete { n: num(rest)? },
        "C" => GraphSpec::Cycle { n: num(rest)? },
        "P" => GraphSpec::Path { n: num(rest)? },
        "Q" => GraphSpec::Hypercube { dim: num(rest)? },
        "T" => {
            let (side, dim) = rest.split_once('^').with_context(|| format!("torus name {s:?} needs side^dim"))?;
            GraphSpec::Torus { side: num(side)?, dim: num(dim)? }
        }
        _ => bail!("unknown graph name {s:?}"),
    })
}

/// A path to an edge-list file, or anything [`parse_spec`] accepts.
fn load_graph(arg: &str) -> Result<Graph> {
    let p = Path::new(arg);
    if p.is_file() {
        return Ok(Graph::read(p)?);
    }
    Ok(graph::build_graph(&parse_spec(arg)?)?)
}

/// Writes `text` to stdout. A closed pipe, as in `exmix ... | head`, is not
/// an error.
fn write_stdout(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => write_stdout(&format!("{text}\n"))?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen { spec, out } => {
            let g = graph::build_graph(&parse_spec(&spec)?)?;
            match out {
                Some(p) => g.write(&p)?,
                None => write_stdout(&g.to_text())?,
            }
        }
        Command::Spectral { graph, eps, seed, out } => {
            let g = load_graph(&graph)?;
            let sd = spectral::eigendecompose(&g)?;
            let mixf = spectral::mixing_functionals(&sd, &eps, seed)?;
            let table = profile::profiles(&g, &sd, eps[0])?;
            emit(
                &json!({
                    "n": g.n(),
                    "eigenvalues": sd.eigenvalues(),
                    "functionals": mixf,
                    "profile": { "method": table.method, "t_sp": table.t_sp, "t_evolving_sets": table.t_evolving_sets, "cheeger_holds": table.cheeger_holds() },
                }),
                out.as_deref(),
            )?;
        }
        Command::Simulate { graph, init, times, trials, mode, seed, out } => {
            let g = load_graph(&graph)?;
            let mode = match mode {
                ModeArg::Standard => Mode::Standard,
                ModeArg::Modified => Mode::Modified,
            };
            let mut sorted = times.clone();
            sorted.sort_by(f64::total_cmp);
            let mut counts = vec![vec![0usize; g.n()]; sorted.len()];
            for i in 0..trials {
                let pos = positions_at(&g, mode, &init, &sorted, rng::stream(seed, i as u64))?;
                for (ti, p) in pos.iter().enumerate() {
                    for &v in p {
                        counts[ti][v] += 1;
                    }
                }
            }
            let rows: Vec<Value> = sorted
                .iter()
                .zip(&counts)
                .map(|(t, c)| json!({ "t": t, "occupation": c.iter().map(|&x| stats::proportion(x, trials)).collect::<Vec<_>>() }))
                .collect();
            emit(&json!({ "trials": trials, "init": init, "rows": rows }), out.as_deref())?;
        }
        Command::Chameleon { graph, k, runs, alpha, eps, c_round, seed, out } => {
            let g = load_graph(&graph)?;
            let sd = spectral::eigendecompose(&g)?;
            let params = RoundParams::fixed(&sd, k, alpha, eps, c_round, seed)?;
            let ch = Chameleon::new(&g, k, params.clone())?;
            let w: Vec<usize> = (0..k - 1).collect();
            let fills = ch.run_many(&w, k - 1, &[], runs, rng::mix(seed, 1), |r| (r.fill, r.rounds.len(), r.burn_ins))?;
            let filled = fills.iter().filter(|f| f.0 == Fill::Filled).count();
            let truncated = fills.iter().filter(|f| f.0 == Fill::Truncated).count();
            let rounds = stats::estimate(&fills.iter().map(|f| f.1 as f64).collect::<Vec<_>>());
            emit(
                &json!({
                    "params": params,
                    "runs": runs,
                    "fill": stats::proportion(filled, runs),
                    "target": 1.0 / (g.n() - k + 1) as f64,
                    "truncated": truncated,
                    "rounds": rounds,
                    "goodness_cache_entries": ch.cache().len(),
                }),
                out.as_deref(),
            )?;
        }
        Command::Exact { graph, k, process, eps, out } => {
            let g = load_graph(&graph)?;
            let kind = match process {
                ProcessArg::Rw => ProcessKind::Rw,
                ProcessArg::Ex => ProcessKind::Ex,
                ProcessArg::Ip => ProcessKind::Ip,
            };
            let ep = exact::build_exact(&g, k, kind)?;
            emit(
                &json!({ "process": kind.name(), "k": k, "states": ep.n_states(), "gap": ep.gap()?, "mix_time": ep.mix_time(eps)?, "eps": eps }),
                out.as_deref(),
            )?;
        }
        Command::Diag { suite, graph, k, t, eps, trials, seed, out } => {
            let g = load_graph(&graph)?;
            let sd = spectral::eigendecompose(&g)?;
            let n = g.n();
            let value = match suite {
                DiagSuite::Nice => {
                    let t = t.unwrap_or(1.0);
                    let reports: Vec<_> = (1..=n / 2)
                        .map(|m| diagnostics::nice_set(&g, &sd, &(0..m).collect::<Vec<_>>(), t))
                        .collect::<exmix_core::Result<_>>()?;
                    serde_json::to_value(reports)?
                }
                DiagSuite::Chernoff => {
                    let s: Vec<usize> = (0..(n / 4).max(1)).collect();
                    json!({
                        "grid": diagnostics::exponent_sign_grid(10),
                        "bn": diagnostics::bn_gn_estimate(&g, &sd, &s, t.unwrap_or(1.0), 0.5, trials, seed)?,
                    })
                }
                DiagSuite::Na => {
                    let init: Vec<usize> = (0..k).collect();
                    let times = [t.unwrap_or(1.0)];
                    json!({
                        "covariances": diagnostics::na_covariances(&g, &init, &times, trials, seed)?,
                        "stationary": diagnostics::exact_stationary_covariances(&g, k).ok(),
                    })
                }
                DiagSuite::White => {
                    let eps = eps.unwrap_or(0.05);
                    let t = t.unwrap_or(sd.rel() * (1.0 / eps).ln());
                    let s: Vec<usize> = (0..n / 2).collect();
                    serde_json::to_value(diagnostics::white_set_checks(&g, &sd, &s, t, eps, trials, seed)?)?
                }
                DiagSuite::Blackld => {
                    let eps = eps.unwrap_or(1.0 / 16.0);
                    let b = spectral::t_mix_linf(&sd, (n as f64).powi(-10)).value;
                    let grid = [t.unwrap_or(b).max(b)];
                    let blacks: Vec<usize> = (0..k.saturating_sub(1)).collect();
                    serde_json::to_value(diagnostics::black_ld_check(&g, &sd, k, &blacks, eps, &grid, trials, seed)?)?
                }
            };
            emit(&value, out.as_deref())?;
        }
        Command::Suite { config, out, csv } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::read(&p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(p) = out {
                cfg.output.report = Some(p.display().to_string());
            }
            if let Some(p) = csv {
                cfg.output.csv_dir = Some(p.display().to_string());
            }
            let doc = run_suite(&cfg);
            match &cfg.output.report {
                Some(p) => doc.write_json(Path::new(p))?,
                None => write_stdout(&format!("{}\n", doc.to_json()))?,
            }
            if let Some(dir) = &cfg.output.csv_dir {
                doc.write_csv(Path::new(dir))?;
            }
            let c = doc.counts();
            eprintln!("pass {} fail {} inconclusive {} report-only {}", c.pass, c.fail, c.inconclusive, c.report_only);
            if doc.has_failures() {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_names_parse() {
        assert_eq!(parse_spec("Q3").unwrap(), GraphSpec::Hypercube { dim: 3 });
        assert_eq!(parse_spec("T4^2").unwrap(), GraphSpec::Torus { side: 4, dim: 2 });
        assert_eq!(parse_spec(r#"{"family":"cycle","n":5}"#).unwrap(), GraphSpec::Cycle { n: 5 });
        assert!(parse_spec("X9").is_err());
    }
}
