//! `superburst` — simulation and HBT analysis pipelines for superradiant
//! photon statistics.
//!
//! Exit codes: 0 success, 2 configuration error, 3 input-data error,
//! 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use superburst_cli::{commands, config, CliError};

#[derive(Parser)]
#[command(
    name = "superburst",
    version,
    about = "Dicke-superradiance simulation, synthetic time-tag generation, and HBT g2 analysis"
)]
struct Cli {
    /// Worker threads for trajectory generation and repetition sharding
    /// (1 keeps runs trivially reproducible; results are identical for any
    /// value).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value config file (dotted section keys).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a single key, e.g. --set dicke.n_eff=6 (repeatable; wins
    /// over the config file).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the collective-decay master equation: emission rate,
    /// equal-time g2, and optional two-time g2 rows.
    SimulateDicke {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the single-atom optical Bloch equations under a shaped pulse.
    SimulateObe {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic time-tag dataset by quantum-jump Monte Carlo.
    Generate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output time-tag file (overrides output.file).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides the seed key and SUPERBURST_SEED).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Bin a time-tag file into the coincidence map, g2 estimates,
    /// diagonal summary, and sum-rule report.
    Analyze {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Input time-tag file (overrides input.file).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Z-score a model g2 curve against analyzed data.
    Compare {
        /// Model file: dicke_curve.csv or dicke_regression.csv.
        #[arg(long)]
        model: PathBuf,
        /// Data file: diagonal.csv or g2map.csv.
        #[arg(long)]
        data: PathBuf,
        /// t1 slice (ns) when model/data are two-time files.
        #[arg(long = "t1-ns")]
        t1_ns: Option<f64>,
        /// Also write the report to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads < 1 {
        return Err(CliError::Config("--threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;

    match cli.command {
        Command::SimulateDicke { cfg, out } => {
            let parsed =
                config::parse_simulate_dicke(cfg.config.as_deref(), &cfg.set, out.as_deref())?;
            commands::simulate_dicke(&parsed)
        }
        Command::SimulateObe { cfg, out } => {
            let parsed =
                config::parse_simulate_obe(cfg.config.as_deref(), &cfg.set, out.as_deref())?;
            commands::simulate_obe(&parsed)
        }
        Command::Generate { cfg, out, seed } => {
            let parsed =
                config::parse_generate(cfg.config.as_deref(), &cfg.set, out.as_deref(), seed)?;
            commands::generate(&parsed)
        }
        Command::Analyze { cfg, input, out } => {
            let parsed = config::parse_analyze(
                cfg.config.as_deref(),
                &cfg.set,
                input.as_deref(),
                out.as_deref(),
            )?;
            commands::analyze(&parsed)
        }
        Command::Compare {
            model,
            data,
            t1_ns,
            out,
        } => {
            let report = commands::compare(&commands::CompareArgs {
                model,
                data,
                t1_ns,
                out,
            })?;
            print!("{report}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
