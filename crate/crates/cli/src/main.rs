use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod check;
mod commands;
mod config;
mod error;

use config::RunConfig;
use error::CliError;

const AFTER_HELP: &str = "\
Outputs of `simulate` (in --out, default from [output] dir):
  trajectory.csv    columns: t, S, sigma, <conserved moments of the class>, L1
                    moments in order tr_rho, tr_rho_ab, tr_rho_ad, energy, then
                    rho_upup, rho_dndn (all but general), re_rho_updn, im_rho_updn
                    (identity family) or tr_sz_rho_ac (zero outer frame);
                    L1 is the distance to the same-grid fitted Fermi-Dirac field
  snapshots/        step_<k>.csv: species, eps, re_w11, re_w22, re_w12, im_w12
  summary.toml      class, fitted parameters, drift report, entropy

Exit codes: 0 success, 2 invalid input, 3 fit failure, 4 guard rejection,
5 invariant failure.";

#[derive(Parser, Debug)]
#[command(name = "spinkin", version, about = "Spin-resolved quantum Boltzmann solver", after_help = AFTER_HELP)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the `threads` key).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the kinetic equation and write trajectory, snapshots and summary.
    Simulate,
    /// Fit the Fermi-Dirac equilibrium to the initial state's conserved moments.
    FitEquilibrium,
    /// Report the structure class of the pair operator.
    Classify,
    /// Run the invariant suite on a micro-grid.
    Check,
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let threads = cli.threads.unwrap_or(cfg.threads);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg, &cfg.output_dir(cli.out.as_deref())),
        Command::FitEquilibrium => commands::cmd_fit(&cfg),
        Command::Classify => commands::cmd_classify(&cfg),
        Command::Check => check::cmd_check(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
