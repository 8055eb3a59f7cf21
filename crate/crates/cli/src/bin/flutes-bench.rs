use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use flutes::benchgen::{run_experiment, GenConfig};
use flutes::classifier::ClassifyOptions;

/// Generates a synthetic people-and-transactions corpus, classifies it,
/// adds five transactions, classifies again and checks both runs against
/// the brute-force oracle.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value_t = 1000)]
    persons: usize,
    #[arg(long, default_value_t = 500)]
    txns: usize,
    /// Probability of omitting each orig-of link.
    #[arg(long, default_value_t = 0.0)]
    drop_orig: f64,
    /// Probability of omitting each recv-of link.
    #[arg(long, default_value_t = 0.0)]
    drop_recv: f64,
    /// Filler fields per person.
    #[arg(long, default_value_t = 0)]
    extra: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Classifier worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Skip the oracle comparison.
    #[arg(long)]
    no_oracle: bool,
    /// Where to write the report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> anyhow::Result<ExitCode> {
    let args = Args::parse();
    let cfg = GenConfig {
        persons: args.persons,
        transactions: args.txns,
        p_drop_orig: args.drop_orig,
        p_drop_recv: args.drop_recv,
        extra_attrs: args.extra,
        seed: args.seed,
    };
    let mut options = ClassifyOptions::default();
    if let Some(w) = args.workers {
        options.workers = w.max(1);
    }
    let metrics = run_experiment(&cfg, options, !args.no_oracle)?;
    let report = metrics.to_tsv();
    match &args.out {
        Some(path) => std::fs::write(path, &report).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{report}"),
    }
    if !metrics.oracle_ok() {
        eprintln!("error: classifier and oracle disagree");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
