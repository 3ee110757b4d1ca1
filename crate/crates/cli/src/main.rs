use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use phasecell::experiment::{self, ExperimentConfig, ExperimentKind};
use phasecell::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Experiment {
    Classify,
    Sweep,
    Stability,
    Traveltime,
    Crosscheck,
}

impl From<Experiment> for ExperimentKind {
    fn from(e: Experiment) -> Self {
        match e {
            Experiment::Classify => ExperimentKind::Classify,
            Experiment::Sweep => ExperimentKind::Sweep,
            Experiment::Stability => ExperimentKind::Stability,
            Experiment::Traveltime => ExperimentKind::Traveltime,
            Experiment::Crosscheck => ExperimentKind::Crosscheck,
        }
    }
}

/// Run a phase-cell measurement experiment and write its results as CSV.
#[derive(Debug, Parser)]
#[command(name = "phasecell", version)]
struct Cli {
    experiment: Experiment,
    /// JSON experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; defaults to the config's output_path, else stdout.
    /// A JSON sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads (default: config value, else all cores)
    #[arg(long)]
    threads: Option<usize>,
}

fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_stem().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    csv.with_file_name(name)
}

fn hint(e: &Error) -> Option<&'static str> {
    match e {
        Error::TooManyPerturbedSites { .. } => {
            Some("split the modified segment into several perturbations of at most 8 sites each")
        }
        Error::ChainTooLong { .. } => Some("dense checks need L <= 6; use the sweep experiment for longer chains"),
        _ => None,
    }
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let config = ExperimentConfig::from_path(&cli.config)?;
    let kind = config.resolve_kind(Some(cli.experiment.into()))?;
    let threads = cli.threads.or(config.threads);
    let start = Instant::now();
    let report = experiment::run_with_threads(kind, &config, threads)?;
    let elapsed = start.elapsed().as_secs_f64();

    let out = cli.out.clone().or_else(|| config.output_path.as_ref().map(PathBuf::from));
    match out {
        Some(path) => {
            std::fs::write(&path, report.csv())?;
            let meta = experiment::sidecar(&config, &report, threads, elapsed);
            let text = serde_json::to_string_pretty(&meta)?;
            std::fs::write(sidecar_path(&path), text + "\n")?;
        }
        None => print!("{}", report.csv()),
    }
    for failure in &report.failures {
        eprintln!("FAIL {failure}");
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("phasecell: assertions failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("phasecell: {e}");
            if let Some(h) = hint(&e) {
                eprintln!("hint: {h}");
            }
            ExitCode::from(2)
        }
    }
}
