//! `simulate`: integrate one config, write the CSV trajectory and JSON report.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use effham_core::integrators::integrate;
use effham_core::trajectory::max_drift;
use effham_core::{Error, Trajectory};
use serde::Serialize;

use crate::config::RunConfig;
use crate::{csv, prepare, CliError, EXIT_NUMERICAL, EXIT_OK};

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub system: String,
    pub method: String,
    pub h: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub steps: usize,
    pub k_initial: Option<f64>,
    pub k_drift_max: Option<f64>,
    /// Drift of the attached Hamiltonian or resource function, if any.
    pub h_drift_max: Option<f64>,
    pub wall_time: f64,
    pub status: &'static str,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub exit_code: i32,
    pub trajectory_path: PathBuf,
    pub report_path: PathBuf,
    pub report: RunReport,
}

/// Describes where and why the integration stopped.
pub fn annotate(error: &Error, traj: &Trajectory) -> String {
    let t = traj.last().map_or(f64::NAN, |s| s.t);
    match error {
        Error::Domain { .. } | Error::InvalidState(_) => format!("domain exit after t = {t}: {error}"),
        Error::Convergence { .. } => format!("newton divergence after t = {t}: {error}"),
        _ => error.to_string(),
    }
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub fn write_csv(path: &Path, traj: &Trajectory, dim: usize, reservoirs: usize) -> Result<(), CliError> {
    create_parent(path)?;
    let mut out = BufWriter::new(File::create(path)?);
    csv::write_trajectory(&mut out, traj, dim, reservoirs)?;
    out.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Runs one configuration. Configuration errors return before any file is
/// written; numerical failures keep the partial trajectory.
pub fn simulate(cfg: &RunConfig, stem: &str, out_dir: Option<&Path>) -> Result<SimulateOutcome, CliError> {
    let prepared = prepare(cfg)?;
    let icfg = cfg.integrator()?;
    let (trajectory_path, report_path) = cfg.output_paths(stem, out_dir);
    if trajectory_path == report_path {
        return Err(CliError::Config(format!("trajectory and report both point at {}", trajectory_path.display())));
    }
    let started = Instant::now();
    let result = integrate(&prepared.system, &prepared.initial, &icfg, cfg.t_end, prepared.invariant.as_ref());
    let wall_time = started.elapsed().as_secs_f64();
    let (traj, error) = match result {
        Ok(t) => (t, None),
        Err(f) if f.error.is_numerical() && !f.partial.is_empty() => {
            let note = annotate(&f.error, &f.partial);
            (f.partial, Some(note))
        }
        Err(f) => return Err(f.error.into()),
    };
    write_csv(&trajectory_path, &traj, prepared.system.dim(), prepared.reservoir_count())?;
    let k = traj.series_k.as_deref();
    let report = RunReport {
        system: prepared.label.clone(),
        method: icfg.method.as_str().to_string(),
        h: icfg.h,
        t_end: cfg.t_end,
        steps: traj.len().saturating_sub(1),
        k_initial: k.and_then(|s| s.first().copied()),
        k_drift_max: k.map(max_drift),
        h_drift_max: traj.series_h.as_deref().map(max_drift),
        wall_time,
        status: if error.is_some() { "numerical_failure" } else { "ok" },
        error,
    };
    write_json(&report_path, &report)?;
    Ok(SimulateOutcome {
        exit_code: if report.error.is_some() { EXIT_NUMERICAL } else { EXIT_OK },
        trajectory_path,
        report_path,
        report,
    })
}
