//! Command-line experiments: flopping, spectroscopy, power sweeps, pulse
//! shaping, error budgets and calibration round-trips.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use raman_core::Error;

pub mod commands;
pub mod config;
pub mod svg;

pub use commands::Artifacts;
pub use config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "raman", version, about = "Multi-photon Raman transitions between Zeeman sublevels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Key-value config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Random seed for synthetic data; overrides the `seed` key.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,

    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Population dynamics of the configured transition.
    Flop,
    /// Final target population against the Raman beat frequency.
    Spectrum,
    /// Analytic and numeric Rabi frequencies against perpendicular power.
    PowerSweep,
    /// Square and ramped pulses at equal peak power.
    ShapeCompare,
    /// Power spectral density of square and ramped pulses.
    Psd,
    /// Leakage, dephasing and scattering infidelity against π time.
    Budget,
    /// Light shifts of every sublevel.
    Shifts,
    /// Generated multi-photon Rabi expression.
    RabiExpr,
    /// Beam calibration fit on synthetic data.
    Calibrate,
    /// Ramsey contrast decay and Gaussian fit.
    Ramsey,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Flop => "flop",
            Command::Spectrum => "spectrum",
            Command::PowerSweep => "power_sweep",
            Command::ShapeCompare => "shape_compare",
            Command::Psd => "psd",
            Command::Budget => "budget",
            Command::Shifts => "shifts",
            Command::RabiExpr => "rabi_expr",
            Command::Calibrate => "calibrate",
            Command::Ramsey => "ramsey",
        }
    }
}

/// Resolve the configuration from the file, `env` and flags.
pub fn resolve_config(cli: &Cli, env: impl IntoIterator<Item = (String, String)>) -> raman_core::Result<ExperimentConfig> {
    let mut overrides = config::env_overrides(env);
    if let Some(seed) = cli.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    let doc = config::load_doc(cli.config.as_deref(), &overrides)?;
    let base = cli
        .config
        .as_deref()
        .and_then(Path::parent)
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    ExperimentConfig::from_doc(&doc, &base)
}

/// Run the command and write its files. Nothing is written unless every
/// step succeeds.
pub fn execute(cli: &Cli, env: impl IntoIterator<Item = (String, String)>) -> raman_core::Result<Vec<PathBuf>> {
    let cfg = resolve_config(cli, env)?;
    if cli.workers == Some(0) {
        return Err(Error::Config {
            line: 0,
            message: "--workers must be at least 1".into(),
        });
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let artifacts = pool.install(|| commands::run(cli.command, &cfg, cli.svg))?;
    Ok(artifacts.write_to(&cli.out)?)
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() || matches!(err, Error::Io(_)) {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

/// Human-readable error; overrides from the environment or flags have no
/// source line.
pub fn describe(err: &Error) -> String {
    match err {
        Error::Config { line: 0, message } => format!("config error: {message}"),
        Error::Config { line, message } => format!("config error on line {line}: {message}"),
        other if other.is_config() => format!("config error: {other}"),
        other => format!("numerical failure: {other}"),
    }
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn run(cli: &Cli, env: impl IntoIterator<Item = (String, String)>) -> i32 {
    match execute(cli, env) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", describe(&e));
            exit_code(&e)
        }
    }
}
