mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, RunConfig};

/// Bad flags, config or parameters; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "spinlev", version, about = "Spin-oscillator sensing and entanglement numerics")]
struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads; falls back to SPINLEV_THREADS
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Force sensitivity sweeps over g, tau or nu
    Sensitivity,
    /// Entanglement witness violation scans
    Witness,
    /// Leading-order against exact figures of merit
    Table,
    /// Phase-space trajectories of both spin branches
    Trajectory,
    /// Run the acceptance suite and write its report
    Verify,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, UsageError> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("SPINLEV_THREADS") {
            Ok(s) => s.trim().parse().map_err(|_| UsageError(format!("SPINLEV_THREADS must be a positive integer, got '{s}'")))?,
            Err(_) => return Ok(None),
        },
    };
    if n == 0 {
        return Err(UsageError("thread count must be >= 1".into()));
    }
    Ok(Some(n))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(n) = threads(cli.threads)? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let default_format = if matches!(cli.command, Command::Verify) { Format::Json } else { Format::Csv };
    let format = cli.format.or(cfg.format).unwrap_or(default_format);
    let out = cli.out.or_else(|| cfg.out.clone());
    let outcome = match cli.command {
        Command::Sensitivity => commands::sensitivity(&cfg, format)?,
        Command::Witness => commands::witness(&cfg, format)?,
        Command::Table => commands::table(&cfg, format)?,
        Command::Trajectory => commands::trajectories(&cfg, format)?,
        Command::Verify => commands::verify(&cfg, format, cli.seed)?,
    };
    output::emit(out.as_deref(), &outcome.primary)?;
    for (suffix, bytes) in &outcome.side {
        match &out {
            Some(p) => output::emit(Some(&output::sibling(p, suffix)), bytes)?,
            None => eprint!("{}", String::from_utf8_lossy(bytes)),
        }
    }
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
