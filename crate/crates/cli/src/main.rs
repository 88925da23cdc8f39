use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use cocolab_cli::commands::{self, Context};
use cocolab_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "cocolab", version, about = "Lyapunov exponents and spectral edges of quasi-periodic cocycles")]
struct Cli {
    /// TOML experiment file; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Recompute even when a finished result exists.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Output root; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov exponent by norm growth and by bundle integral.
    Le {
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
    },
    /// Invariant slope fields on the grid, as bundles.csv.
    Bundles {
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
    },
    /// Bisect for the edge of uniform hyperbolicity, writing edge.json.
    Edge,
    /// Sweep toward the edge, writing sweep.csv and summary.json.
    Sweep,
    /// Check the collision assumptions at one parameter, writing verify.json.
    Verify {
        #[arg(long, allow_hyphen_values = true, conflicts_with = "gap")]
        t: Option<f64>,
        /// Distance below the edge.
        #[arg(long)]
        gap: Option<f64>,
    },
    /// Refit an existing sweep.csv.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let ctx = Context {
        out: cli.out.clone().unwrap_or_else(|| config.output.dir.clone()),
        use_cache: config.output.cache && !cli.no_cache,
        config,
    };
    match cli.command {
        Command::Le { t } => commands::le(&ctx, t),
        Command::Bundles { t } => commands::bundles(&ctx, t),
        Command::Edge => commands::edge(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Verify { t, gap } => commands::verify(&ctx, t, gap),
        Command::Fit { input } => commands::fit(&ctx, &input),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    info!("kernel_evaluations={}", cocolab::kernel_evaluations());
    ExitCode::from(code as u8)
}
