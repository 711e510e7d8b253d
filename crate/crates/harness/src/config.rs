//! Experiment configuration. Every field has a default, so an empty JSON
//! object is a valid config.

use std::path::Path;

use exmix_core::graph::GraphSpec;
use exmix_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Suites that `run_suite` can execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    /// Heat-kernel identities, mixing functionals, profiles and functional
    /// inequalities.
    Spectral,
    /// Exact small-state identities: gap equality, sandwiches, reduction
    /// chains and the lower bounds.
    Exact,
    /// Chameleon fill probability, ink identity and the Doob ink chain.
    Chameleon,
    /// Nice sets, Chernoff bounds, white and black large deviations,
    /// interaction counts and negative association.
    Diagnostics,
    /// Report-only mixing-time shape ratios.
    Ratios,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 5] =
        [SuiteKind::Spectral, SuiteKind::Exact, SuiteKind::Chameleon, SuiteKind::Diagnostics, SuiteKind::Ratios];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Spectral => "spectral",
            SuiteKind::Exact => "exact",
            SuiteKind::Chameleon => "chameleon",
            SuiteKind::Diagnostics => "diagnostics",
            SuiteKind::Ratios => "ratios",
        }
    }
}

/// Constants of the chameleon process and the time functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessParams {
    /// Pinkening fraction `α ∈ (0, 1/4)`. Default `0.2`.
    pub alpha: f64,
    /// Accuracy of `t_*`, `s_*` and `r_*`. Default `1e-2`.
    pub eps: f64,
    /// Round-length multiplier. Default `8`.
    pub c_round: f64,
    /// Spectral-profile argument multiplier of variable rounds. Default `16`.
    pub c_profile: f64,
    /// Accuracy `ĉ` of the variable-round burn-in `t_mix^∞(ĉ/k)`. Default `0.1`.
    pub c_hat: f64,
}

impl Default for ProcessParams {
    fn default() -> Self {
        ProcessParams { alpha: 0.2, eps: 1e-2, c_round: 8.0, c_profile: 16.0, c_hat: 0.1 }
    }
}

/// Monte Carlo sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialCounts {
    /// Trials of particle-system estimators. Default `20000`.
    pub mc: usize,
    /// Independent chameleon runs. Default `10000`.
    pub chameleon: usize,
    /// Inner trials of each goodness estimate. Default `2000`.
    pub goodness: usize,
}

impl Default for TrialCounts {
    fn default() -> Self {
        TrialCounts { mc: 20_000, chameleon: 10_000, goodness: 2_000 }
    }
}

/// Where reports are written. Both default to "not written".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// JSON report path.
    pub report: Option<String>,
    /// Directory for CSV tables.
    pub csv_dir: Option<String>,
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Graphs every selected suite runs on. Default `[K4, C6, Q3]`.
    pub graphs: Vec<GraphSpec>,
    /// Particle counts; values outside `1..n` are skipped per graph.
    /// Default `[2]`.
    pub k_list: Vec<usize>,
    pub process: ProcessParams,
    pub trials: TrialCounts,
    /// Master seed from which every stream is derived. Default `20240501`.
    pub seed: u64,
    /// Suites to run, in order. Default: all of them.
    pub suites: Vec<SuiteKind>,
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graphs: vec![GraphSpec::Complete { n: 4 }, GraphSpec::Cycle { n: 6 }, GraphSpec::Hypercube { dim: 3 }],
            k_list: vec![2],
            process: ProcessParams::default(),
            trials: TrialCounts::default(),
            seed: 20_240_501,
            suites: SuiteKind::ALL.to_vec(),
            output: OutputPaths::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let p = &self.process;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(p.alpha > 0.0 && p.alpha < 0.25) {
            return bad(format!("alpha {} outside (0, 1/4)", p.alpha));
        }
        if !(p.eps > 0.0 && p.eps < 1.0) {
            return bad(format!("eps {} outside (0, 1)", p.eps));
        }
        if !(p.c_hat > 0.0 && p.c_hat < 1.0) {
            return bad(format!("c_hat {} outside (0, 1)", p.c_hat));
        }
        if !(p.c_round > 0.0 && p.c_profile > 0.0) {
            return bad("c_round and c_profile must be positive".into());
        }
        if self.trials.mc < 2 || self.trials.chameleon < 2 || self.trials.goodness == 0 {
            return bad("trial counts too small".into());
        }
        if self.k_list.contains(&0) {
            return bad("k must be positive".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}
