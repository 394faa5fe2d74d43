use std::io::Write;

use crate::error::{Error, Result};
use crate::flow::{DiagnosticsRecord, FlowConfig};

/// Allowed drift of the average scalar curvature from 2.
pub const R_AVG_TOL: f64 = 1e-8;

/// Checks the invariants every diagnostics record must satisfy.
pub fn validate_record(rec: &DiagnosticsRecord<f64>, cfg: &FlowConfig<f64>) -> Result<()> {
    let fail = |invariant, detail: String| Err(Error::DiagnosticsInvariant { invariant, detail });
    let fields = [
        rec.t, rec.dt, rec.e0, rec.e1, rec.r_min, rec.r_max, rec.r_avg, rec.l2_r_defect,
        rec.vol_min_ratio, rec.x_moment, rec.lambda_gauge, rec.el0_residual_norm,
    ];
    if fields.iter().any(|v| !v.is_finite()) {
        return fail("finite", format!("non-finite field at t = {}", rec.t));
    }
    if (rec.r_avg - 2.0).abs() > R_AVG_TOL {
        return fail("r_avg", format!("r_avg = {} at t = {}", rec.r_avg, rec.t));
    }
    if rec.vol_min_ratio <= 0.0 {
        return fail("vol_min_ratio", format!("vol_min_ratio = {} at t = {}", rec.vol_min_ratio, rec.t));
    }
    if cfg.automorphism_modification && rec.x_moment.abs() > cfg.tolerances.newton_tol {
        return fail("x_moment", format!("x_moment = {:e} at t = {}", rec.x_moment, rec.t));
    }
    Ok(())
}

/// Writes one JSON object per line, refusing records that break an invariant.
pub struct JsonlWriter<W: Write> {
    out: W,
    config: FlowConfig<f64>,
    written: usize,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(out: W, config: FlowConfig<f64>) -> Self {
        Self { out, config, written: 0 }
    }

    pub fn write(&mut self, rec: &DiagnosticsRecord<f64>) -> std::result::Result<(), WriteError> {
        validate_record(rec, &self.config)?;
        serde_json::to_writer(&mut self.out, rec).map_err(|e| WriteError::Io(e.into()))?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WriteError {
    #[error(transparent)]
    Invariant(#[from] Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
