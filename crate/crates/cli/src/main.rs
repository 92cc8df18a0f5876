mod args;
mod commands;
mod config;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};
use config::RunConfig;

/// Environment variable capping worker threads.
const THREADS_VAR: &str = "EMOGAIT_THREADS";

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.global.seed.or(cfg.seed) {
        cfg.set_seed(seed);
    }
    cli.command.apply_overrides(&mut cfg)?;
    Ok(cfg)
}

fn configure_threads(deterministic: bool) -> Result<()> {
    let threads = if deterministic {
        Some(1)
    } else {
        match std::env::var(THREADS_VAR) {
            Ok(v) => Some(v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
                emogait::Error::validation(format!("{THREADS_VAR} must be a positive integer, got {v:?}"))
            })?),
            Err(_) => None,
        }
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    if cli.global.print_config {
        println!("{}", cfg.to_json()?);
        return Ok(());
    }
    configure_threads(cli.global.deterministic)?;
    match &cli.command {
        Command::Ingest(a) => commands::ingest(&cfg, a),
        Command::Extract(a) => commands::extract(&cfg, a),
        Command::Split(a) => commands::split(&cfg, a),
        Command::Train(a) => commands::train(&cfg, a),
        Command::Eval(a) => commands::eval(a),
        Command::Generate(a) => commands::generate(&cfg, a),
        Command::Transition(a) => commands::transition(&cfg, a),
        Command::Augment(a) => commands::augment(&cfg, a),
        Command::ExportBvh(a) => commands::export_bvh(&cfg, a),
    }
}

/// 2 for numerical failures, 1 for everything else.
fn exit_status(err: &anyhow::Error) -> u8 {
    let core = err.chain().find_map(|e| e.downcast_ref::<emogait::Error>());
    match core {
        Some(emogait::Error::Numerical(_) | emogait::Error::DegeneratePose(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout and succeed; usage errors are validation errors
            let status = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(status);
        }
    };
    let level = if cli.global.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
