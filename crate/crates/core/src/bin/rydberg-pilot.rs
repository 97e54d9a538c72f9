use clap::{Parser, Subcommand, ValueEnum};
use rydberg_pilot::config::parse_config;
use rydberg_pilot::drivers::Command;
use rydberg_pilot::dynamics::VelocityMode;
use rydberg_pilot::output::error_json;
use rydberg_pilot::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "rydberg-pilot", version, about = "Bohmian trajectories of Rydberg coherent states")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one guidance trajectory.
    Simulate(Args),
    /// Correction-scaling sweep over l0.
    ScalingStudy(Args),
    /// R, S, Q and the velocity field on a grid.
    FieldDump(Args),
    /// Conic fit against both classical reference orbits.
    CompareClassical(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integrator tolerance (overrides `simulate.tol`).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Raw,
    #[value(name = "two_branch")]
    TwoBranch,
}

fn threads() -> Result<Option<usize>> {
    match std::env::var("RYDBERG_PILOT_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidArgument(format!("RYDBERG_PILOT_THREADS = `{v}` is not a positive integer"))),
        },
    }
}

fn run(command: Command, args: &Args) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Io(format!("{}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(tol) = args.tol {
        cfg.simulate.tol = tol;
    }
    if let Some(mode) = args.mode {
        cfg.simulate.mode = match mode {
            ModeArg::Raw => VelocityMode::RawSingleBranch,
            ModeArg::TwoBranch => VelocityMode::TwoBranch,
        };
    }
    cfg.validate(None)?;
    // kept out of the echoed config so the outputs do not depend on where they go
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| command.run(&cfg, &out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::ScalingStudy(a) => (Command::ScalingStudy, a),
        Cmd::FieldDump(a) => (Command::FieldDump, a),
        Cmd::CompareClassical(a) => (Command::CompareClassical, a),
    };
    let start = Instant::now();
    let result = run(command, args);
    eprintln!("{}: {:.3} s", command.name(), start.elapsed().as_secs_f64());
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            print!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
