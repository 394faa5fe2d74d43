use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Error;
use crate::flow::{run_flow_with, DiagnosticsRecord, RunReport, Scheme, StopReason};
use crate::functionals::{accumulate_time_integral, energy_report, EnergyReport};
use crate::kahler::snapshot::{read_snapshot, write_snapshot};
use crate::kahler::Background;

use super::config::ExperimentConfig;
use super::diagnostics::{JsonlWriter, WriteError};
use super::LabError;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.jsonl";
pub const FINAL_SNAPSHOT_FILE: &str = "final.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub n_nodes: usize,
    pub scheme: Scheme,
    pub stop: StopReason,
    pub converged: bool,
    pub t_final: f64,
    pub samples: usize,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub vol_floor: f64,
    pub rate: Option<f64>,
    pub rate_r2: Option<f64>,
    /// Time integral of `integral (R - r)^2 omega_phi` over the sampled run.
    pub l2_r_defect_integral: f64,
    pub final_record: Option<DiagnosticsRecord<f64>>,
}

pub struct ExperimentOutcome {
    pub report: RunReport<f64>,
    pub summary: RunSummary,
    /// Raw bytes of the diagnostics stream.
    pub diagnostics: Vec<u8>,
}

fn summarize(cfg: &ExperimentConfig, report: &RunReport<f64>) -> RunSummary {
    let series = report.series(|r| r.l2_r_defect);
    RunSummary {
        schema_version: cfg.schema_version,
        seed: cfg.seed,
        n_nodes: cfg.geometry.n_nodes,
        scheme: cfg.flow.scheme,
        stop: report.stop,
        converged: report.converged(),
        t_final: report.final_state.t,
        samples: report.records.len(),
        steps_accepted: report.steps_accepted,
        steps_rejected: report.steps_rejected,
        vol_floor: report.vol_floor,
        rate: report.rate_fit.map(|f| f.0),
        rate_r2: report.rate_fit.map(|f| f.1),
        l2_r_defect_integral: accumulate_time_integral(&series).unwrap_or(f64::NAN),
        final_record: report.records.last().copied(),
    }
}

fn snapshot_to(path: &Path, bg: &Background<f64>, phi: &crate::spectral::SymField<f64>) -> Result<(), LabError> {
    let file = File::create(path).map_err(|e| LabError::io(path, e))?;
    write_snapshot(BufWriter::new(file), &bg.grid, phi)?;
    Ok(())
}

/// Runs one experiment. With `out_dir` set, writes the diagnostics stream,
/// periodic and final snapshots and a summary there; otherwise nothing touches disk.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutcome, LabError> {
    cfg.validate()?;
    let bg = cfg.build_background()?;
    let phi0 = cfg.initial_potential(&bg)?;
    let flow = cfg.flow_config();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }

    let mut writer = JsonlWriter::new(Vec::new(), flow);
    let mut side_error: Option<LabError> = None;
    let mut next_snapshot = 0usize;
    let snapshot_every = cfg.output.snapshot_every;
    let result = run_flow_with(&bg, &flow, &phi0, |state, rec| {
        match writer.write(rec) {
            Ok(()) => {}
            Err(WriteError::Invariant(e)) => return Err(e),
            Err(WriteError::Io(e)) => {
                side_error = Some(LabError::io(DIAGNOSTICS_FILE, e));
                return Err(Error::Observer("diagnostics write failed".into()));
            }
        }
        if let (Some(dir), Some(every)) = (out_dir, snapshot_every) {
            if state.t >= every * next_snapshot as f64 - 1e-12 {
                let path = dir.join(format!("snapshot_{next_snapshot:04}.csv"));
                if let Err(e) = snapshot_to(&path, &bg, &state.phi) {
                    side_error = Some(e);
                    return Err(Error::Observer("snapshot write failed".into()));
                }
                next_snapshot = (state.t / every + 1e-9).floor() as usize + 1;
            }
        }
        Ok(())
    });
    if let Some(e) = side_error {
        return Err(e);
    }
    let diagnostics = writer.finish().map_err(|e| LabError::io(DIAGNOSTICS_FILE, e))?;
    if let (Err(_), Some(dir)) = (&result, out_dir) {
        // keep the partial stream for post-mortem inspection
        let _ = std::fs::write(dir.join(DIAGNOSTICS_FILE), &diagnostics);
    }
    let report = result?;
    let summary = summarize(cfg, &report);

    if let Some(dir) = out_dir {
        let write = |name: &str, bytes: &[u8]| {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| LabError::io(&p, e))
        };
        write(DIAGNOSTICS_FILE, &diagnostics)?;
        snapshot_to(&dir.join(FINAL_SNAPSHOT_FILE), &bg, &report.final_state.phi)?;
        let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
        json.push(b'\n');
        write(SUMMARY_FILE, &json)?;
    }
    Ok(ExperimentOutcome { report, summary, diagnostics })
}

/// Output directory: the explicit override, else the config's own setting.
pub fn resolve_out_dir(cfg: &ExperimentConfig, cli: Option<&Path>) -> Option<PathBuf> {
    cli.map(Path::to_path_buf).or_else(|| {
        cfg.output.directory.as_ref().map(|d| if d.is_absolute() { d.clone() } else { cfg.base_dir.join(d) })
    })
}

/// Energy report of a saved potential, over the given background or the round sphere.
pub fn evaluate_snapshot(path: &Path, background: Option<&ExperimentConfig>) -> Result<EnergyReport<f64>, LabError> {
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    let snap = read_snapshot(file)?;
    let bg = match background {
        Some(cfg) => {
            if cfg.geometry.n_nodes != snap.n_nodes() {
                return Err(LabError::Config(format!(
                    "snapshot has {} nodes, background config has {}",
                    snap.n_nodes(),
                    cfg.geometry.n_nodes
                )));
            }
            cfg.build_background()?
        }
        None => {
            let grid = crate::spectral::build_grid(snap.n_nodes())?;
            Background::round(std::sync::Arc::new(grid))
        }
    };
    let phi = snap.to_field(&bg.grid)?;
    Ok(energy_report(&bg, &phi)?)
}
