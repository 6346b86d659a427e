//! `vdyn`: sample reachable accelerations, fit envelopes, check controls and
//! run the planners.
//!
//! Exit codes: 0 success, 1 infeasible control or planner failure,
//! 2 configuration error, 3 numeric failure.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vdyn::commands::{self, WallClock};
use vdyn::config::{ModelChoice, RunConfig};
use vdyn::{formats, CliError};

#[derive(Parser)]
#[command(name = "vdyn", version, about = "Vehicle acceleration envelopes and envelope-constrained planning")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of the sampling campaign; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sampling (all cores when omitted).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample reachable accelerations over the configured grid.
    Sample,
    /// Fit an envelope to sample CSVs.
    Fit {
        /// Sample CSV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Check whether an acceleration triple is admissible at a speed.
    Check {
        /// Envelope file; the reference constants when omitted.
        #[arg(long)]
        envelope: Option<PathBuf>,
        /// Longitudinal speed (m/s).
        #[arg(long = "v-x", allow_hyphen_values = true)]
        v_x: f64,
        /// Longitudinal acceleration (m/s²).
        #[arg(allow_hyphen_values = true)]
        a_x: f64,
        /// Lateral acceleration (m/s²).
        #[arg(allow_hyphen_values = true)]
        a_y: f64,
        /// Yaw acceleration (rad/s²).
        #[arg(allow_hyphen_values = true)]
        a_psi: f64,
    },
    /// Drive the configured track with one planner.
    Plan {
        /// Planning model; the configured one when omitted.
        #[arg(long, value_enum)]
        model: Option<ModelChoice>,
    },
    /// Drive the configured track with both planners and tabulate metrics.
    Compare,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    if c.threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    if let Some(p) = &c.config {
        commands::require_file(p)?;
    }
    let cfg = RunConfig::load_or_default(c.config.as_deref())?.with_overrides(c.seed, c.out.as_deref());
    let stdout = io::stdout();
    let mut report = stdout.lock();
    match cli.command {
        Command::Sample => commands::sample(&cfg, c.threads, &mut report).map(drop),
        Command::Fit { inputs } => commands::fit(&cfg, &inputs, &mut report).map(drop),
        Command::Check { envelope, v_x, a_x, a_y, a_psi } => {
            let env = match envelope {
                Some(p) => formats::read_envelope(&p)?,
                None => cfg.planner.envelope.clone(),
            };
            commands::check(&env, [a_x, a_y, a_psi], v_x, &mut report)
        }
        Command::Plan { model } => {
            let model = model.unwrap_or(cfg.planner.model);
            commands::plan(&cfg, model, &mut WallClock::new(), &mut report).map(drop)
        }
        Command::Compare => commands::compare(&cfg, &mut WallClock::new(), &mut report).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not errors
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = io::stdout().flush();
            eprintln!("vdyn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
