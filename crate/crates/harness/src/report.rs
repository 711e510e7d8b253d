//! Report documents: one record per evaluated check, plus optional tables,
//! serialised as JSON and CSV.

use std::path::Path;
use std::time::Instant;

use exmix_core::check::{Check, Verdict};
use exmix_core::Result;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

/// One evaluated check. Non-finite numbers are stored as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    /// Short statement of what is being checked.
    pub claim: String,
    pub inputs: Value,
    pub measured: Option<f64>,
    /// Bound or oracle value the measurement is compared with.
    pub bound: Option<f64>,
    /// Signed room; positive when the check holds.
    pub margin: Option<f64>,
    pub verdict: Verdict,
    pub runtime_secs: f64,
    /// Error text or reason for an inconclusive verdict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Record {
    pub fn new(
        name: impl Into<String>,
        claim: impl Into<String>,
        inputs: Value,
        measured: f64,
        bound: f64,
        margin: f64,
        verdict: Verdict,
    ) -> Self {
        Record {
            name: name.into(),
            claim: claim.into(),
            inputs,
            measured: finite(measured),
            bound: finite(bound),
            margin: finite(margin),
            verdict,
            runtime_secs: 0.0,
            note: None,
        }
    }

    /// `measured <= bound` with the given verdict; the margin is `bound - measured`.
    pub fn upper(name: impl Into<String>, claim: impl Into<String>, inputs: Value, measured: f64, bound: f64, verdict: Verdict) -> Self {
        Record::new(name, claim, inputs, measured, bound, bound - measured, verdict)
    }

    /// A measured value without a pass criterion.
    pub fn report_only(name: impl Into<String>, claim: impl Into<String>, inputs: Value, measured: f64) -> Self {
        Record::new(name, claim, inputs, measured, f64::NAN, f64::NAN, Verdict::ReportOnly)
    }

    /// A check that could not be evaluated.
    pub fn errored(name: impl Into<String>, claim: impl Into<String>, inputs: Value, err: impl ToString) -> Self {
        let mut r = Record::new(name, claim, inputs, f64::NAN, f64::NAN, f64::NAN, Verdict::Inconclusive);
        r.note = Some(err.to_string());
        r
    }

    /// Converts a library check, prefixing its name with `scope`.
    pub fn from_check(scope: &str, c: &Check) -> Self {
        Record::new(
            format!("{scope}/{}", c.name),
            c.name.clone(),
            Value::String(c.inputs.clone()),
            c.lhs,
            c.rhs,
            c.margin,
            c.verdict,
        )
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.runtime_secs = start.elapsed().as_secs_f64();
        self
    }
}

/// A rectangular table destined for CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from header");
        self.rows.push(row);
    }
}

/// Build and platform information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package_version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads: rayon::current_num_threads(),
        }
    }
}

/// Verdict tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub report_only: usize,
}

/// Everything one `run_suite` call produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub master_seed: u64,
    pub environment: Environment,
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub tables: Vec<Table>,
}

impl ReportDocument {
    pub fn new(config: &ExperimentConfig) -> Self {
        ReportDocument {
            master_seed: config.seed,
            environment: Environment::current(),
            config: config.clone(),
            records: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn counts(&self) -> VerdictCounts {
        let mut c = VerdictCounts::default();
        for r in &self.records {
            match r.verdict {
                Verdict::Pass => c.pass += 1,
                Verdict::Fail => c.fail += 1,
                Verdict::Inconclusive => c.inconclusive += 1,
                Verdict::ReportOnly => c.report_only += 1,
            }
        }
        c
    }

    pub fn has_failures(&self) -> bool {
        self.records.iter().any(|r| r.verdict.is_failure())
    }

    /// Copy with every runtime zeroed; equal for equal configs and seeds.
    pub fn without_runtimes(&self) -> Self {
        let mut d = self.clone();
        for r in &mut d.records {
            r.runtime_secs = 0.0;
        }
        d
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Writes `records.csv` and one file per table into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("records.csv")).map_err(csv_err)?;
        w.write_record(["name", "claim", "inputs", "measured", "bound", "margin", "verdict", "runtime_secs", "note"])
            .map_err(csv_err)?;
        for r in &self.records {
            let num = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                r.name.clone(),
                r.claim.clone(),
                cell(&r.inputs),
                num(r.measured),
                num(r.bound),
                num(r.margin),
                cell(&serde_json::to_value(r.verdict).expect("verdict serialises")),
                r.runtime_secs.to_string(),
                r.note.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        for t in &self.tables {
            let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", t.name))).map_err(csv_err)?;
            w.write_record(&t.columns).map_err(csv_err)?;
            for row in &t.rows {
                w.write_record(row.iter().map(cell)).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_err(e: csv::Error) -> exmix_core::Error {
    exmix_core::Error::Io(std::io::Error::other(e))
}
