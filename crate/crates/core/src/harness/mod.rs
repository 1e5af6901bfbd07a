//! Command implementations behind the `pnp` binary.

pub mod config;
pub mod convergence;
pub mod output;

use std::path::Path;

use crate::error::{PnpError, Result};
use crate::presets::{PresetKind, PresetSpec};
use crate::stepper::Simulation;

pub use config::{ConfigFile, Materialized, Overrides, RunConfig};
pub use convergence::{converge_space, converge_time, ConvergenceReport, ConvergenceRow};
pub use output::CsvObserver;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "PNP_THREADS";

/// Sizes the global worker pool from `PNP_THREADS` when set. Safe to call
/// more than once; later calls are ignored.
pub fn init_thread_pool() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| PnpError::Config(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Summary of a finished trajectory.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub records: usize,
    pub snapshots: usize,
}

/// Runs one trajectory, streaming `diagnostics.csv` and snapshot triples
/// into the configured output directory.
pub fn cmd_run(config: &RunConfig) -> Result<RunSummary> {
    let m = config.materialize()?;
    let sim = Simulation::new(m.params)?;
    let mut observer = CsvObserver::create(&config.output_dir)?;
    let state = sim.run(m.p0, m.n0, &config.snapshot_times, &mut observer)?;
    let (records, snapshots) = observer.finish()?;
    Ok(RunSummary { steps: state.step_index, records: records.len(), snapshots: snapshots.len() })
}

/// Writes a convergence report to `dir/name` and returns its CSV text.
pub fn write_report(report: &ConvergenceReport, dir: &Path, name: &str) -> Result<String> {
    std::fs::create_dir_all(dir)?;
    report.write_csv(&dir.join(name))?;
    Ok(report.to_csv())
}

/// One line per preset with its default constants.
pub fn preset_listing() -> String {
    let mut out = String::from("name,n,epsilon,tau,t_final,rho0,seed\n");
    for kind in PresetKind::ALL {
        let s = PresetSpec::standard(kind);
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            kind.name(),
            s.grid.n(),
            s.epsilon,
            s.tau,
            s.t_final,
            s.rho0.map(|r| r.to_string()).unwrap_or_default(),
            s.seed.map(|r| r.to_string()).unwrap_or_default(),
        ));
    }
    out
}
