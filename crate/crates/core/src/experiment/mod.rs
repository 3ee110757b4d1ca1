//! Experiment drivers behind the `phasecell` command.
//!
//! Each run turns an [`ExperimentConfig`] into a [`Report`]: a table with a
//! fixed column order whose rows follow the configured grid order, plus the
//! list of assertions that failed. Work items are evaluated with
//! [`crate::par::par_map`], which preserves input order, so the rendered CSV
//! does not depend on scheduling.

mod config;
mod runs;
mod table;

pub use config::{
    ChainSpec, ExperimentConfig, ExperimentKind, Grid, ModelSpec, OrbitalSpec, PerturbationSpec, PotentialShape,
    RangeSpec, Ranges, Real, ReplacementKind, Tolerances,
};
pub use runs::{run_classify, run_crosscheck, run_stability, run_sweep, run_traveltime};
pub use table::{format_real, Cell, Table};

use serde_json::{json, Value};

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct Report {
    pub kind: ExperimentKind,
    pub table: Table,
    /// one message per failed assertion
    pub failures: Vec<String>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn csv(&self) -> String {
        self.table.to_csv_string()
    }
}

pub fn run(kind: ExperimentKind, config: &ExperimentConfig) -> Result<Report> {
    match kind {
        ExperimentKind::Classify => run_classify(config),
        ExperimentKind::Sweep => run_sweep(config),
        ExperimentKind::Stability => run_stability(config),
        ExperimentKind::Traveltime => run_traveltime(config),
        ExperimentKind::Crosscheck => run_crosscheck(config),
    }
}

/// Runs on a pool of `threads` workers (config value unless overridden).
pub fn run_with_threads(kind: ExperimentKind, config: &ExperimentConfig, threads: Option<usize>) -> Result<Report> {
    crate::par::with_threads(threads.or(config.threads), || run(kind, config))?
}

/// Metadata written next to the CSV. Wall-clock time lives here only.
pub fn sidecar(config: &ExperimentConfig, report: &Report, threads: Option<usize>, elapsed_seconds: f64) -> Value {
    json!({
        "experiment": report.kind.as_str(),
        "config": config,
        "environment": {
            "phasecell_version": env!("CARGO_PKG_VERSION"),
            "os": std::env::consts::OS,
            "arch": std::env::consts::ARCH,
            "parallel": crate::par::parallel_enabled(),
            "threads": threads.or(config.threads),
        },
        "rows": report.table.rows.len(),
        "columns": report.table.columns,
        "all_passed": report.all_passed(),
        "failures": report.failures,
        "elapsed_seconds": elapsed_seconds,
    })
}
