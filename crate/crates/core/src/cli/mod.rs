//! Command-line front end: `cavity-spt run --config <file.toml>`.
//!
//! Each run writes `<prefix>_<table>.csv` files and `<prefix>_manifest.json`.
//! Failures print a single JSON error record on stderr and exit nonzero.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::units::{per_cm3_to_per_m3, SI};
use config::ExperimentConfig;
use output::{check_targets, table_path, write_file, write_tables, ConversionFactors, Manifest};

pub const THREADS_ENV: &str = "CAVITY_SPT_THREADS";
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Parser)]
#[command(name = "cavity-spt", version, about = "Superradiant phase transitions of spins in a cavity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
}

#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    /// Config file (alternative to --config).
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    pub config_path: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path prefix; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (fallback: CAVITY_SPT_THREADS, then all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Replace existing output files.
    #[arg(long)]
    pub overwrite: bool,
    /// Overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Thread count from the flag or the environment; `None` keeps rayon's default.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(Error::invalid("thread count must be >= 1"));
    }
    Ok(n)
}

/// Runs one experiment and returns the manifest path. Thread-pool setup is
/// left to the caller.
pub fn run(args: &RunArgs) -> Result<PathBuf> {
    let start = Instant::now();
    let config_path = args
        .config
        .as_ref()
        .or(args.config_path.as_ref())
        .ok_or_else(|| Error::invalid("no config given (use --config <path>)"))?;
    let text = std::fs::read_to_string(config_path)
        .map_err(|source| Error::Io { path: config_path.clone(), source })?;
    let cfg = ExperimentConfig::parse(&text, config_path)?;
    let prefix = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::invalid("no output prefix (set `output` in the config or pass --out)"))?;
    let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);

    let manifest_path = table_path(&prefix, "manifest", "json");
    let mut targets: Vec<PathBuf> =
        cfg.experiment.tables().iter().map(|s| table_path(&prefix, s, "csv")).collect();
    targets.push(manifest_path.clone());
    check_targets(&targets, args.overwrite)?;

    let outputs = experiments::run_experiment(&cfg, seed)?;
    debug_assert!(outputs.tables.iter().map(|t| t.suffix).eq(cfg.experiment.tables().iter().copied()));
    for w in &outputs.warnings {
        log::warn!("{w}");
    }

    let files = write_tables(&prefix, &outputs.tables)?;
    let raw: toml::Value = toml::from_str(&text).map_err(|e| Error::Config { path: config_path.clone(), message: e.to_string() })?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name(),
        seed,
        threads: rayon::current_num_threads(),
        config: serde_json::to_value(raw)?,
        internal: outputs.internal,
        conversion_factors: ConversionFactors {
            kelvin_to_rad_s: SI.kelvin_to_rad_s(1.0),
            tesla_to_rad_s: SI.tesla_to_rad_s(1.0),
            per_cm3_to_per_m3: per_cm3_to_per_m3(1.0),
        },
        files,
        results: outputs.results,
        warnings: outputs.warnings,
        provenance: outputs.provenance,
        elapsed_s: start.elapsed().as_secs_f64(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    write_file(&manifest_path, &bytes)?;
    Ok(manifest_path)
}

/// Machine-readable failure record.
pub fn error_record(e: &Error) -> String {
    serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } }).to_string()
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    if let Some(n) = resolve_threads(flag)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Binary entry point.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    match configure_threads(args.threads).and_then(|_| run(&args)) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::from(2)
        }
    }
}
