//! Verdict records shared by every numeric check in the library.

use serde::{Deserialize, Serialize};

/// Outcome of one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The data could not decide, for example because brackets overlap or a
    /// conditioning event was too rare.
    Inconclusive,
    /// A measured quantity without a pass criterion.
    ReportOnly,
}

impl Verdict {
    pub fn from_bool(holds: bool) -> Self {
        if holds {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Combines a conservative and an optimistic evaluation of the same
    /// inequality: pass if the conservative form holds, fail if even the
    /// optimistic form fails, inconclusive otherwise.
    pub fn bracketed(conservative: bool, optimistic: bool) -> Self {
        if conservative {
            Verdict::Pass
        } else if !optimistic {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn is_failure(self) -> bool {
        self == Verdict::Fail
    }
}

/// One evaluated inequality `lhs <= rhs` (or a reported value in `lhs`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Human-readable description of the inputs.
    pub inputs: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; positive when the inequality holds with room.
    pub margin: f64,
    pub verdict: Verdict,
}

impl Check {
    /// Builds an `lhs <= rhs` check with the given verdict.
    pub fn new(name: impl Into<String>, inputs: impl Into<String>, lhs: f64, rhs: f64, verdict: Verdict) -> Self {
        Check { name: name.into(), inputs: inputs.into(), lhs, rhs, margin: rhs - lhs, verdict }
    }

    /// Builds an `lhs <= rhs` check with a relative tolerance.
    pub fn le(name: impl Into<String>, inputs: impl Into<String>, lhs: f64, rhs: f64, rtol: f64) -> Self {
        let holds = lhs <= rhs + rtol * rhs.abs().max(lhs.abs()) || (lhs.is_infinite() && lhs == rhs);
        Check::new(name, inputs, lhs, rhs, Verdict::from_bool(holds))
    }

    /// Builds a report-only record holding `value`.
    pub fn report(name: impl Into<String>, inputs: impl Into<String>, value: f64) -> Self {
        Check { name: name.into(), inputs: inputs.into(), lhs: value, rhs: f64::NAN, margin: f64::NAN, verdict: Verdict::ReportOnly }
    }
}
