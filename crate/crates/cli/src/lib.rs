//! Command-line driver for the MABK computations.

pub mod commands;
pub mod report;

use clap::{ArgAction, Parser, Subcommand};
use mabk_core::blochopt::OptimizerConfig;
use thiserror::Error;

use commands::{ReproduceOptions, DEFAULT_SDP_TOL, DEFAULT_TRIALS};
use report::{Format, RunReport};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VERDICT: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] mabk_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mabk",
    version,
    about = "MABK Bell operators, GHZ correlators and NPA bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Number of parties.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// NPA hierarchy level (2 or 3).
    #[arg(long, global = true)]
    pub level: Option<usize>,
    /// Random settings sampled by theorem1.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Optimizer restarts.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Optimizer gradient tolerance, or SDP relative accuracy for npa.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Impose perfect correlations in the key rounds (npa).
    #[arg(long, global = true)]
    pub perfect_correlations: bool,
    /// Pin Alice's key observable to sigma_z (optimize).
    #[arg(long, global = true)]
    pub honest: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Repeat for more detail on stderr.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Print the N-party MABK expression and check its term counts.
    MabkShow,
    /// Sample honest GHZ correlators with Alice measuring sigma_z.
    Theorem1,
    /// Maximize the MABK value on the GHZ state over measurement directions.
    Optimize,
    /// Certified NPA upper bound on the three-party MABK value.
    Npa,
    /// Run every check in order and emit one consolidated report.
    ReproducePaper,
}

impl Cli {
    fn optimizer_config(&self) -> Result<OptimizerConfig, CliError> {
        let mut cfg = OptimizerConfig::default();
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tol {
            cfg.convergence_tol = t;
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(OptimizerConfig::default().seed)
    }
}

pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    match cli.command {
        Command::MabkShow => commands::cmd_mabk_show(cli.n.unwrap_or(3)),
        Command::Theorem1 => commands::cmd_theorem1(
            cli.n.unwrap_or(5),
            cli.trials.unwrap_or(DEFAULT_TRIALS),
            cli.seed(),
        ),
        Command::Optimize => commands::cmd_optimize(
            cli.n.unwrap_or(4),
            &cli.optimizer_config()?,
            cli.honest,
            cli.verbose,
        ),
        Command::Npa => {
            if cli.n.is_some_and(|n| n != 3) {
                return Err(CliError::Usage("npa is implemented for n = 3 only".into()));
            }
            commands::cmd_npa(
                cli.level.unwrap_or(2),
                cli.perfect_correlations,
                cli.tol.unwrap_or(DEFAULT_SDP_TOL),
                cli.verbose,
            )
        }
        Command::ReproducePaper => {
            let mut optimizer = OptimizerConfig::default();
            if let Some(r) = cli.restarts {
                optimizer.restarts = r;
            }
            optimizer.seed = cli.seed();
            optimizer
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let sdp_tol = cli.tol.unwrap_or(DEFAULT_SDP_TOL);
            if sdp_tol.is_nan() || sdp_tol <= 0.0 {
                return Err(CliError::Usage(format!(
                    "--tol must be positive, got {sdp_tol}"
                )));
            }
            commands::cmd_reproduce_paper(&ReproduceOptions {
                trials: cli.trials.unwrap_or(DEFAULT_TRIALS),
                optimizer,
                sdp_tol,
                verbose: cli.verbose,
            })
        }
    }
}
