//! Run configuration: TOML file merged with command-line flags.

use std::path::PathBuf;

use bohr_roth::increment::IncrementParams;
use bohr_roth::lattice::Norm;
use serde::{Deserialize, Serialize};

use crate::input::read;
use crate::CliError;

pub const DEFAULT_DENSITY: f64 = 0.2;
pub const DEFAULT_RATIO_CONSTANT: f64 = 25.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_TRUNCATION: i64 = 10;

/// Everything a run depends on. Flags override the file; the merged value
/// is echoed in the report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub group: Option<Vec<u64>>,
    pub matrix_n: Option<u64>,
    pub dim: Option<usize>,
    pub coeffs: Option<[i64; 3]>,
    /// Three `d × d` integer matrices, overriding `coeffs`.
    pub matrices: Option<[Vec<Vec<i64>>; 3]>,
    pub sets: Vec<PathBuf>,
    pub bohr: Option<PathBuf>,
    pub bohr_prime: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Density of the random set drawn when no set file is given.
    pub density: Option<f64>,
    /// Dichotomy parameter; defaults to the smallest relative density.
    pub alpha: Option<f64>,
    /// Dilation factor for the size bound in `bohr-info`.
    pub rho: Option<f64>,
    pub tolerance: Option<f64>,
    pub node_budget: Option<u64>,
    pub ratio_constant: Option<f64>,
    pub truncate: Option<i64>,
    pub preset: Option<String>,
    pub triangle: Option<String>,
    pub norm: Option<Norm>,
    pub unordered: Option<bool>,
    pub increment: IncrementParams,
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = read(path)?;
        toml::from_str(&text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_col(&text, s.start))
                .unwrap_or((0, 0));
            CliError::Parse {
                path: path.display().to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOLERANCE)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}
