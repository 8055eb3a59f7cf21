use std::fs::File;
use std::io::{self, BufReader, IsTerminal};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use flutes::engine::Engine;
use flutes::repl::{self, EXIT_COMMAND, EXIT_CORRUPT};

/// Interactive prompt and script runner for a flutes knowledge base.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Store directory (created if missing). Without it the session is in memory.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Run commands from this file and stop at the first error.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Omit elapsed times from reports.
    #[arg(long)]
    no_timings: bool,
}

fn session(args: &Args, engine: &mut Engine) -> anyhow::Result<i32> {
    let timings = !args.no_timings;
    let mut stdout = io::stdout().lock();
    let code = match &args.script {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("cannot open script {}", path.display()))?;
            repl::run(engine, BufReader::new(file), &mut stdout, timings, true, None)?
        }
        None => {
            let stdin = io::stdin();
            let interactive = stdin.is_terminal();
            let prompt = interactive.then_some("flutes> ");
            repl::run(engine, stdin.lock(), &mut stdout, timings, !interactive, prompt)?
        }
    };
    Ok(code)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut engine = match &args.store {
        Some(dir) => match Engine::open(dir) {
            Ok(e) => e,
            Err(e) => {
                eprintln!("error: cannot open store {}: {e}", dir.display());
                return ExitCode::from(if e.is_corruption() { EXIT_CORRUPT } else { EXIT_COMMAND } as u8);
            }
        },
        None => Engine::in_memory(),
    };
    match session(&args, &mut engine) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_COMMAND as u8)
        }
    }
}
