use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use funcrate::constants::{constants_report, ConstantsRequest, Family};
use funcrate::report::{load_report, render};
use funcrate::{run, threads_from_env, ExperimentConfig};

#[derive(Parser)]
#[command(name = "funcrate", version, about = "Convergence-rate experiments for Riemann sums of integral functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Tabulate one or more finished runs.
    Report {
        #[arg(required = true, num_args = 1..)]
        dirs: Vec<PathBuf>,
    },
    /// Print the bound constants for a model family.
    Constants {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        model: Family,
        /// σ for brownian, scale for stable.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 1.0)]
        holder_norm: f64,
        #[arg(long, num_args = 1.., default_values_t = [100usize])]
        n: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // exit code 2 is reserved for failed statistical checks
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run(&cfg, threads_from_env())?;
            for c in &report.checks {
                println!("{:<22} {:<4} {}", c.name, if c.passed { "ok" } else { "FAIL" }, c.detail);
            }
            if let Some(fit) = &report.fit {
                println!("fitted slope {:.4} ± {:.4} (r2 {:.5})", fit.slope, fit.slope_stderr, fit.r2);
            }
            println!("{} -> {}", report.message, cfg.output.display());
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Report { dirs } => {
            let reports = dirs.iter().map(|d| load_report(d)).collect::<anyhow::Result<Vec<_>>>()?;
            print!("{}", render(&reports));
            Ok(ExitCode::SUCCESS)
        }
        Command::Constants { gamma, alpha, horizon, model, scale, holder_norm, n } => {
            let req = ConstantsRequest { gamma, alpha, horizon, family: model, scale, holder_norm, n };
            print!("{}", constants_report(&req)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
