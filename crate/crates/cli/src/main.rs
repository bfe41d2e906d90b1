mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Job;
use error::CliError;

/// Line-limit screening for unit commitment.
#[derive(Debug, Parser)]
#[command(name = "ucscreen", version)]
struct Cli {
    /// Worker threads; 1 runs everything serially
    #[arg(long, global = true, env = "UCSCREEN_THREADS")]
    threads: Option<usize>,
    /// More log output on stderr (repeat for debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify every line bound as redundant or non-redundant
    Screen(Job),
    /// Build or evaluate affine screening policies
    #[command(subcommand)]
    Mplp(MplpCommand),
    /// Monte-Carlo check of a reduced model
    Validate(Job),
    /// Area-decomposed screening
    Area(Job),
    /// Write the PTDF matrix
    Ptdf(Job),
}

#[derive(Debug, Subcommand)]
enum MplpCommand {
    /// Enumerate critical regions over a parameter set
    Build(Job),
    /// Screen a forecast with a policy store
    Eval(Job),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    match cli.command {
        Command::Screen(j) => commands::screen(&j.resolve()?),
        Command::Mplp(MplpCommand::Build(j)) => commands::mplp_build(&j.resolve()?),
        Command::Mplp(MplpCommand::Eval(j)) => commands::mplp_eval(&j.resolve()?),
        Command::Validate(j) => commands::validate(&j.resolve()?),
        Command::Area(j) => commands::area(&j.resolve()?),
        Command::Ptdf(j) => commands::ptdf_cmd(&j.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ucscreen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
