// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: parses flags and an optional config file, runs
//! one verification suite and renders the report.
//!
//! Exit codes: 0 all checks pass, 1 some check failed, 2 invalid input.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use gff_core::GeomError;

mod commands;
pub mod config;
pub mod report;

pub use config::{Coefficient, EpsSpec, Resolved, RunConfig};
pub use report::{Check, VerificationReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("cannot write report: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            // a structure that is not S where one is required is a failed check
            CliError::Geometry(GeomError::GateFailure(_)) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    VerifyStructure,
    VerifySpaceform,
    VerifyChart,
    SchurScan,
    ErratumGuard,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::VerifyStructure => "verify-structure",
            CommandKind::VerifySpaceform => "verify-spaceform",
            CommandKind::VerifyChart => "verify-chart",
            CommandKind::SchurScan => "schur-scan",
            CommandKind::ErratumGuard => "erratum-guard",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gffcheck",
    version,
    about = "Verify curvature identities of indefinite g.f.f.- and S-manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structure axioms at a point (canonical structure, or a chart's sampled points)
    VerifyStructure(Flags),
    /// Space-form curvature tensor: η-Einstein fit, φ-sectional curvature, identities
    VerifySpaceform(Flags),
    /// Field-level S-gates and η-Einstein scan of a chart structure
    VerifyChart(Flags),
    /// Constancy of h and c, contracted Bianchi identity, ξ(h) = 0
    SchurScan(Flags),
    /// Compare the two candidate Φ-term coefficients of the space-form tensor
    ErratumGuard(Flags),
}

impl Command {
    fn split(&self) -> (CommandKind, &Flags) {
        match self {
            Command::VerifyStructure(f) => (CommandKind::VerifyStructure, f),
            Command::VerifySpaceform(f) => (CommandKind::VerifySpaceform, f),
            Command::VerifyChart(f) => (CommandKind::VerifyChart, f),
            Command::SchurScan(f) => (CommandKind::SchurScan, f),
            Command::ErratumGuard(f) => (CommandKind::ErratumGuard, f),
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// TOML file with any of the fields below; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the structured (JSON) report here
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Half-rank of φ (dim = 2n + s)
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of characteristic vector fields ξ_α
    #[arg(long)]
    pub s: Option<usize>,
    /// Characteristic signs, e.g. "+-" or "+1,-1"
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
    /// φ-sectional curvature
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Timelike pairs (E_i, φE_i) at the canonical point
    #[arg(long)]
    pub timelike_pairs: Option<usize>,
    /// Run the full parameter sweep instead of a single parameter set
    #[arg(long)]
    pub sweep: bool,
    /// Built-in chart: flat_gff, s_r4_lorentz, s_r2ns(n,s,eps[,phi-signs])
    #[arg(long)]
    pub example: Option<String>,
    /// Chart structure file (TOML)
    #[arg(long)]
    pub structure: Option<PathBuf>,
    /// Sampled chart points
    #[arg(long)]
    pub points: Option<usize>,
    /// Random φ-planes per point
    #[arg(long)]
    pub planes: Option<usize>,
    /// Seed for every random draw (default 42)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tolerance for algebraic identities (default 1e-10)
    #[arg(long)]
    pub tol_alg: Option<f64>,
    /// Tolerance for chart-derived quantities (default 1e-6)
    #[arg(long)]
    pub tol_diff: Option<f64>,
    /// Tolerance for spreads and third-order residuals (default 1e-5)
    #[arg(long)]
    pub tol_schur: Option<f64>,
    /// Tolerance for the S-structure gates (default 1e-7)
    #[arg(long)]
    pub tol_gate: Option<f64>,
    /// Coefficient of the Φ-terms in the space-form tensor
    #[arg(long, value_enum)]
    pub coefficient: Option<Coefficient>,
    /// Add a symmetric misfit of this size to Ricci before fitting
    #[arg(long, allow_negative_numbers = true)]
    pub ricci_perturbation: Option<f64>,
}

impl Flags {
    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            n: self.n,
            s: self.s,
            eps: self.eps.clone().map(EpsSpec::Text),
            c: self.c,
            timelike_pairs: self.timelike_pairs,
            sweep: self.sweep.then_some(true),
            example: self.example.clone(),
            structure: self.structure.clone(),
            points: self.points,
            planes: self.planes,
            seed: self.seed,
            tol_alg: self.tol_alg,
            tol_diff: self.tol_diff,
            tol_schur: self.tol_schur,
            tol_gate: self.tol_gate,
            coefficient: self.coefficient,
            ricci_perturbation: self.ricci_perturbation,
        }
    }
}

/// Run one command on a (not yet validated) configuration.
pub fn run(kind: CommandKind, config: &RunConfig) -> Result<VerificationReport, CliError> {
    let resolved = config.resolve()?;
    commands::run(kind, resolved)
}

pub fn exit_code(report: &VerificationReport) -> i32 {
    if report.passed() {
        0
    } else {
        1
    }
}

/// Whole-program entry point with injectable streams; returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let (kind, flags) = cli.command.split();
    let outcome = (|| {
        let file = match &flags.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let report = run(kind, &flags.to_config().over(file))?;
        if let Some(path) = &flags.out {
            std::fs::write(path, report.to_json())
                .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        }
        Ok::<_, CliError>(report)
    })();
    match outcome {
        Ok(report) => {
            let _ = write!(stdout, "{}", report.to_text());
            exit_code(&report)
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
