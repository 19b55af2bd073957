use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use tickcost::commands;
use tickcost::config::{Overrides, RunConfig};
use tickcost::error::{CliError, Result};
use tickcost::logging;
use tickcost_core::tca::MiMode;

#[derive(Parser)]
#[command(name = "tickcost", version, about = "Transaction costs around tick-size changes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input data directory (default `data`).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Standard,
    NetNewLevels,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic market, orders and truth labels.
    Gen(Common),
    /// Per-order cost decomposition.
    Tca {
        #[command(flatten)]
        common: Common,
        /// Adds an `mi_nnl_bps` column when set to net-new-levels.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Simulated market impact estimates and their calibration.
    Mie(Common),
    /// Before/after comparisons around each ex-date.
    Birdseye(Common),
    /// Aggregates, volatilities, screens and regressions.
    Deepdive(Common),
}

fn load(common: &Common) -> Result<RunConfig> {
    let flags = Overrides { data: common.data.clone(), out: common.out.clone(), seed: common.seed };
    RunConfig::load(common.config.as_deref(), &flags)
}

fn prepare(common: &Common) -> Result<RunConfig> {
    let cfg = load(common)?;
    commands::ensure_dir(&cfg.out)?;
    let log_path = cfg.out.join("run.log");
    logging::attach_run_log(&log_path).map_err(|e| CliError::io(&log_path, e))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(c) => {
            let cfg = prepare(&c)?;
            let manifest = commands::gen::run(&cfg)?;
            println!("file,rows,sha256,seed");
            for m in manifest {
                println!("{},{},{},{}", m.file, m.rows, m.sha256, cfg.seed);
            }
        }
        Command::Tca { common, mode } => {
            let mut cfg = prepare(&common)?;
            match mode {
                Some(Mode::Standard) => cfg.mi_mode = MiMode::Standard,
                Some(Mode::NetNewLevels) => cfg.mi_mode = MiMode::NetNewLevels,
                None => {}
            }
            let s = commands::tca::run(&cfg)?;
            info!("tca: {} orders written, {} skipped", s.rows, s.skipped);
        }
        Command::Mie(c) => {
            let s = commands::mie::run(&prepare(&c)?)?;
            info!("mie: {} rows, {} securities skipped", s.rows, s.skipped_securities);
        }
        Command::Birdseye(c) => {
            let s = commands::birdseye::run(&prepare(&c)?)?;
            info!("birdseye: {} summary rows", s.len());
        }
        Command::Deepdive(c) => {
            commands::deepdive::run(&prepare(&c)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    logging::init(logging::level_from_env());
    let cli = Cli::parse();
    let outcome = run(cli);
    let code = match outcome {
        Ok(()) => 0,
        Err(e) => {
            error!("{e}");
            e.exit_code()
        }
    };
    logging::flush();
    ExitCode::from(code as u8)
}
