use anyhow::Context;
use clap::{Parser, Subcommand};
use sepcross::cli::{self, config::RunConfig, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sepcross",
    version,
    about = "Separatrix-crossing return maps and their stable fixed points"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (`key = value` per line).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `epsilon`.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Frozen-system tables over the slow grid.
    AnalyzeFast,
    /// Stable fixed points of the return map in the action interval.
    FixedPoints,
    /// Acceptance checks against the exact system.
    Verify,
    /// Density of fixed points against the observed census.
    Density,
}

fn load(args: &Args) -> Result<(RunConfig, PathBuf), CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::MissingInput("--config PATH is required".into()))?;
    let mut cfg = cli::load_config(path)?;
    if let Some(e) = args.epsilon {
        cfg.epsilon = e;
        cfg.validate()?;
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    Ok((cfg, out))
}

fn run(args: &Args) -> Result<(), CliError> {
    let (cfg, out) = load(args)?;
    match args.command {
        Command::AnalyzeFast => cli::cmd_analyze_fast(&cfg, &out),
        Command::FixedPoints => {
            let fps = cli::cmd_fixed_points(&cfg, &out)?;
            println!("{} stable fixed points", fps.len());
            Ok(())
        }
        Command::Density => {
            let (predicted, observed) = cli::cmd_density(&cfg, &out)?;
            println!("predicted {predicted:.2}, observed {observed}");
            Ok(())
        }
        Command::Verify => {
            let r = cli::cmd_verify(&cfg, &out);
            if let Ok(v) = &r {
                v.iter().for_each(|c| println!("{}", c.line()));
            }
            r.map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if let Some(n) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool")
        {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    match run(&args).context("sepcross") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(3, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
