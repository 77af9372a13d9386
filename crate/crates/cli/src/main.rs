use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sketchgc_cli::config::ExperimentConfig;
use sketchgc_cli::error::{CliError, Result};
use sketchgc_cli::{data, demos, experiment, report};

#[derive(Parser)]
#[command(name = "sketchgc", version, about = "Iterative block sketching experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Seeds overriding the config, comma separated.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    /// Output directory (defaults to the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write A and b for every seed.
    GenData(Common),
    /// Run every (method, seed) pair and write traces plus a summary.
    Run {
        #[command(flatten)]
        common: Common,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Merge trace files into kind,seed,t,log_err.
    Report {
        /// Trace files or run directories.
        inputs: Vec<PathBuf>,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Block leverage-score flattening per transform and seed.
    Flatten(Common),
    /// Counterexample, exhaustive group check and distinguisher rates.
    SecurityDemo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// log₂ key-space sizes of each family.
    Ensemble {
        /// Dimensions, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 16, 256, 2048])]
        n: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(c: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let cfg = ExperimentConfig::load(&c.config)?.with_seeds(c.seed.clone())?;
    let out = experiment::require_output(&cfg, c.out.as_deref())?;
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(c) => {
            let (cfg, out) = load(&c)?;
            for p in data::gen_data(&cfg, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Run { common, jobs } => {
            let (cfg, out) = load(&common)?;
            if jobs == 0 {
                return Err(CliError::config("--jobs must be at least 1"));
            }
            let results = experiment::run_experiment(&cfg, jobs)?;
            let rows = experiment::write_outputs(&results, &out)?;
            for r in rows {
                println!(
                    "{:<24} final log err {:>9.4} ± {:.4}",
                    r.method.to_string(),
                    r.mean_final_log_err,
                    r.std_final_log_err
                );
            }
        }
        Command::Report { inputs, out } => {
            let rows = report::report(&inputs, &out)?;
            println!("{rows} rows -> {}", out.display());
        }
        Command::Flatten(c) => {
            let (cfg, out) = load(&c)?;
            let rows = demos::flatten(&cfg)?;
            demos::write_flatten(&rows, cfg.n, &out.join("flatten.csv"))?;
        }
        Command::SecurityDemo { seed, trials, out } => {
            if trials == 0 {
                return Err(CliError::config("--trials must be at least 1"));
            }
            demos::write_demo(&demos::security_demo(seed, trials)?, &out.join("security.csv"))?;
        }
        Command::Ensemble { n, out } => {
            demos::write_demo(&demos::ensemble(&n), &out.join("ensemble.csv"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
