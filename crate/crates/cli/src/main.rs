use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclab_cli::experiments::{calibrate, eps, identities, kernels, ratios, roots};
use fraclab_cli::{Config, Frozen, Outcome, RunError};

#[derive(Parser)]
#[command(name = "fraclab", version, about = "Fractional operator and multi-commutator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file, or `default` for the built-in values
    #[arg(long, global = true, default_value = "default")]
    config: String,
    /// Output directory (overrides output.dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Ensemble seed (overrides ensemble.seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Identity suite over the refinement list
    Identities,
    /// Ensemble sweep of the configured estimate
    Ratios,
    /// Smallest singular value of the ε-regularity operator
    Eps,
    /// Root study for b(x)
    Roots,
    /// Dump kernels with norms
    Kernels,
    /// Measure regression baselines into frozen_constants.txt
    Calibrate,
}

fn run(cli: &Cli, cfg: &Config) -> Result<Outcome, RunError> {
    let frozen = Frozen::builtin();
    match cli.command {
        Command::Identities => identities::identities(cfg),
        Command::Ratios => ratios::ratios(cfg, &frozen),
        Command::Eps => eps::eps(cfg),
        Command::Roots => roots::roots(cfg, &frozen),
        Command::Kernels => kernels::kernels(cfg),
        Command::Calibrate => calibrate::calibrate(cfg).map(|(_, o)| o),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match Config::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("thread pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli, &cfg)) {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!("{}", c.line());
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
