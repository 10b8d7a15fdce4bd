use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ovi_cli::bounds::{cmd_bounds, violations, TheoremSelector};
use ovi_cli::error::CliError;
use ovi_cli::gen::cmd_gen_toy;
use ovi_cli::gradcheck::{cmd_gradcheck, parse_kind};
use ovi_cli::run::cmd_run;

#[derive(Parser)]
#[command(name = "ovi", version, about = "Online variational inference experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured learner and write series files plus summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the two-Gaussian toy classification stream as CSV.
    GenToy {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare expected-loss gradients with finite differences.
    Gradcheck {
        #[arg(long)]
        loss: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recheck the regret bounds of a finished run.
    Bounds {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = "all")]
        theorem: String,
    },
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, out } => {
            let summary = cmd_run(&config, &out)?;
            for (name, a) in &summary.algorithms {
                println!(
                    "{name}: final_avg_loss={:.6} regret={:.6} wall_ms={:.1}",
                    a.final_avg_loss, a.regret, a.wall_ms
                );
            }
            println!(
                "comparator ({}): {:.6}; lowest final average loss: {}",
                summary.comparator.method, summary.comparator.value, summary.lowest_final_avg_loss
            );
            Ok(())
        }
        Command::GenToy { n, seed, out } => cmd_gen_toy(n, seed, &out),
        Command::Gradcheck {
            loss,
            trials,
            tol,
            seed,
        } => {
            let kind = parse_kind(&loss)?;
            let report = cmd_gradcheck(kind, trials, tol, seed)?;
            let statistic = if kind.has_closed_form() { "max relative error" } else { "max rms z-score" };
            println!("{}: {statistic} {:.3e} over {} trials (tol {:.3e})", kind.name(), report.max_error, trials, tol);
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Check(format!("{:.3e} exceeds {:.3e}", report.max_error, tol)))
            }
        }
        Command::Bounds { run, theorem } => {
            let lines = cmd_bounds(&run, TheoremSelector::parse(&theorem)?)?;
            for line in &lines {
                println!("{}", line.render());
            }
            violations(&lines)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ovi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
