//! Machine-readable run reports.

use bohr_roth::counting::Check;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "==")]
    Equal,
}

/// One asserted relation `lhs ⋈ rhs`, with both sides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportCheck {
    pub name: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub pass: bool,
}

impl ReportCheck {
    pub fn at_most(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            relation: Relation::AtMost,
            rhs,
            pass: lhs <= rhs,
        }
    }

    pub fn at_least(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            relation: Relation::AtLeast,
            rhs,
            pass: lhs >= rhs,
        }
    }

    pub fn equal(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            relation: Relation::Equal,
            rhs,
            pass: lhs == rhs,
        }
    }

    /// A boolean invariant, recorded as `1 == 1` or `0 == 1`.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self::equal(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

impl From<&Check> for ReportCheck {
    fn from(c: &Check) -> Self {
        Self {
            name: c.name.clone(),
            lhs: c.lhs,
            relation: Relation::AtLeast,
            rhs: c.rhs,
            pass: c.pass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Enough to rerun a failing case: the explicit inputs and the names of the
/// checks that failed.
#[derive(Clone, Debug, Serialize)]
pub struct Reproducer {
    pub command: String,
    pub inputs: Value,
    pub failing: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    /// Explicit inputs, so every check can be recomputed from the report.
    pub inputs: Value,
    pub notices: Vec<String>,
    pub results: Value,
    pub checks: Vec<ReportCheck>,
    pub pass: bool,
    pub reproducer: Option<Reproducer>,
    pub timing: Timing,
}

/// What a command hands back before timing and bookkeeping are attached.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub results: Value,
    pub checks: Vec<ReportCheck>,
    pub notices: Vec<String>,
    /// Explicit inputs (sets as element lists), used for the reproducer.
    pub inputs: Value,
}

impl Report {
    pub fn new(command: &str, config: RunConfig, outcome: Outcome, elapsed_ms: f64) -> Self {
        let failing: Vec<String> = outcome
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.clone())
            .collect();
        let pass = failing.is_empty();
        let reproducer = (!pass).then(|| Reproducer {
            command: command.to_string(),
            inputs: outcome.inputs.clone(),
            failing,
        });
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            inputs: outcome.inputs,
            notices: outcome.notices,
            results: outcome.results,
            checks: outcome.checks,
            pass,
            reproducer,
            timing: Timing { elapsed_ms },
        }
    }
}
