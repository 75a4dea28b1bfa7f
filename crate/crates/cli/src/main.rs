//! `kobalt`: batch experiments on convex domains, driven by a JSON config.
//!
//! Each run writes `results.csv`, `report.json` and optionally `plot.svg` into the
//! output directory. Exit status 0 means success, 2 a validation failure (nothing
//! is written) and 3 a numerical inconsistency (artifacts are written and flagged).

mod commands;
mod config;
mod failure;
mod maps;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{BracketFlags, Setup};
use config::{CommandName, ExperimentConfig};
use failure::Failure;
use output::Report;

#[derive(Debug, Parser)]
#[command(name = "kobalt", version, about = "Kobayashi-distance experiments on convex domains")]
struct Cli {
    /// Experiment to run
    #[arg(value_enum)]
    command: CommandName,
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Seed for every sampled quantity; overrides the config
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config [default: kobalt-out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads [default: all cores]
    #[arg(long, env = "KOBALT_THREADS")]
    threads: Option<usize>,
    /// Also write plot.svg for commands that trace curves or orbits
    #[arg(long)]
    plot: bool,
    #[command(flatten)]
    bracket: BracketFlags,
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, Failure> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", cli.config.display())))?;
    let cfg = ExperimentConfig::parse(&text)?;
    if let Some(c) = cfg.command {
        if c != cli.command {
            return Err(Failure::Validation(format!("config is for `{c}` but `{}` was requested", cli.command)));
        }
    }
    let seed = cli.seed.or(cfg.seed);
    if cli.command.needs_seed() && seed.is_none() {
        return Err(Failure::Validation(format!("`{}` samples and needs a seed", cli.command)));
    }
    let threads = match cli.threads {
        Some(0) => return Err(Failure::Validation("--threads must be positive".into())),
        Some(k) => k,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    // a second build in the same process (tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let params = cfg.params(cli.command)?;
    let model = cfg.domain_spec.build()?;
    let domain = model.bounded()?;
    let setup = Setup { spec: &cfg.domain_spec, model, domain, seed, flags: &cli.bracket, plot: cli.plot };
    let outcome = commands::run(&setup, &params)?;

    let inconsistencies = outcome.inconsistencies();
    let tolerances = outcome.tolerances();
    let dir = cli.out.clone().or(cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("kobalt-out"));
    let mut artifacts = vec![output::RESULTS_FILE.to_string()];
    if outcome.plot.is_some() {
        artifacts.push(output::PLOT_FILE.into());
    }
    artifacts.push(output::REPORT_FILE.into());
    let report = Report {
        tool: "kobalt",
        version: kobalt_core::VERSION,
        command: cli.command.as_str(),
        seed,
        threads,
        domain_spec: &cfg.domain_spec,
        params: &params,
        tolerances: &tolerances,
        status: if inconsistencies.is_empty() { "ok" } else { "inconsistent" },
        inconsistencies: &inconsistencies,
        rows: outcome.table.rows.len(),
        artifacts,
        summary: &outcome.summary,
    };
    let written = output::write_all(&dir, &outcome.table, &report, outcome.plot.as_ref())?;
    if let Some(first) = inconsistencies.first() {
        return Err(Failure::Numerical(format!("{first} ({} rows flagged in {})", inconsistencies.len(), dir.display())));
    }
    Ok(written)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("kobalt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
