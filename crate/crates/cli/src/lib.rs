//! Command-line front end: argument parsing, configuration, dispatch and
//! report writing.

pub mod commands;
pub mod config;
pub mod input;
pub mod report;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::RunConfig;
use crate::report::Report;

pub use input::{parse_set_file, parse_set_text, ParsedSet, SetFile, Target};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Core(#[from] bohr_roth::Error),
}

#[derive(Debug, Parser)]
#[command(name = "bohr-roth", version, about = "Translation-invariant equations in finite abelian groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Cyclic factors, e.g. `7` or `5,5`.
    #[arg(long, global = true)]
    pub group: Option<String>,
    /// Modulus of `(Z/N)^d`; use with `--dim`.
    #[arg(long, global = true)]
    pub matrix_n: Option<u64>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Scalar coefficients `a,b,c` of `a x + b y + c z = 0`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
    /// Set file; give once, or three times for `A1, A2, A3`.
    #[arg(long = "set", global = true)]
    pub sets: Vec<PathBuf>,
    /// Bohr set as JSON `{"frequencies": [[..]], "widths": [..]}`.
    #[arg(long, global = true)]
    pub bohr: Option<PathBuf>,
    #[arg(long, global = true)]
    pub bohr_prime: Option<PathBuf>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// CSV trace of the iteration.
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count solutions directly and through the Fourier transform.
    Count,
    /// Largest solution-free subset.
    Maxfree,
    /// Rank, size and regularity of a Bohr set.
    BohrInfo,
    /// Regular dilate with factor in [1/2, 1].
    RegularDilate,
    /// Many-solutions versus spectral-mass dichotomy.
    Dichotomy,
    /// Density-increment iteration.
    Iterate,
    /// Iteration followed by the frequency-set growth audit.
    RankAudit,
    /// Lift integer solutions through reduction modulo a prime.
    Embed {
        #[arg(long)]
        truncate: Option<i64>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        triangle: Option<String>,
    },
    /// Triangles in a lattice directly similar to a given one.
    Triangles {
        #[arg(long)]
        preset: Option<String>,
        /// Vertices `a,b;c,d;e,f` meaning `a + bτ` etc.
        #[arg(long, allow_hyphen_values = true)]
        triangle: Option<String>,
        /// Report each point set once.
        #[arg(long)]
        unordered: bool,
    },
    /// Partial sums of `Σ ‖a‖^{-d}` over nested truncations.
    Diverge {
        /// `max` or `euclidean`.
        #[arg(long)]
        norm: Option<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Count => "count",
            Command::Maxfree => "maxfree",
            Command::BohrInfo => "bohr-info",
            Command::RegularDilate => "regular-dilate",
            Command::Dichotomy => "dichotomy",
            Command::Iterate => "iterate",
            Command::RankAudit => "rank-audit",
            Command::Embed { .. } => "embed",
            Command::Triangles { .. } => "triangles",
            Command::Diverge { .. } => "diverge",
        }
    }
}

/// Merges the config file (if any) with the flags; flags win.
pub fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(g) = &c.group {
        cfg.group = Some(input::parse_factors(g)?);
    }
    if c.matrix_n.is_some() {
        cfg.matrix_n = c.matrix_n;
    }
    if c.dim.is_some() {
        cfg.dim = c.dim;
    }
    if let Some(s) = &c.coeffs {
        cfg.coeffs = Some(input::parse_coeffs(s)?);
    }
    if !c.sets.is_empty() {
        cfg.sets = c.sets.clone();
    }
    for (dst, src) in [
        (&mut cfg.bohr, &c.bohr),
        (&mut cfg.bohr_prime, &c.bohr_prime),
        (&mut cfg.out, &c.out),
        (&mut cfg.trace, &c.trace),
    ] {
        if src.is_some() {
            *dst = src.clone();
        }
    }
    if c.seed.is_some() {
        cfg.seed = c.seed;
    }
    match &cli.command {
        Command::Embed {
            truncate,
            preset,
            triangle,
        } => {
            if truncate.is_some() {
                cfg.truncate = *truncate;
            }
            if preset.is_some() {
                cfg.preset = preset.clone();
            }
            if triangle.is_some() {
                cfg.triangle = triangle.clone();
            }
        }
        Command::Triangles {
            preset,
            triangle,
            unordered,
        } => {
            if preset.is_some() {
                cfg.preset = preset.clone();
            }
            if triangle.is_some() {
                cfg.triangle = triangle.clone();
            }
            if *unordered {
                cfg.unordered = Some(true);
            }
        }
        Command::Diverge { norm } => {
            if let Some(n) = norm {
                cfg.norm = Some(match n.as_str() {
                    "max" => bohr_roth::lattice::Norm::Max,
                    "euclidean" => bohr_roth::lattice::Norm::Euclidean,
                    other => return Err(CliError::Usage(format!("unknown norm '{other}'"))),
                });
            }
        }
        _ => {}
    }
    cfg.increment
        .validate()
        .map_err(|e| CliError::Usage(format!("config: {e}")))?;
    Ok(cfg)
}

/// Runs one command and writes its report; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            if report.pass {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let cfg = build_config(cli)?;
    let start = Instant::now();
    let outcome = commands::dispatch(&cli.command, &cfg)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = Report::new(cli.command.name(), cfg.clone(), outcome, elapsed_ms);
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    match &cfg.out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{json}");
        }
    }
    Ok(report)
}
