use std::io::Write;

use super::{entropy, roundness, w_field, z_field, DiagnosticBody};
use crate::geometry::snapshot::fmt_f64;
use crate::geometry::min_max_mean;
use crate::soliton::soliton_residual;

/// Column order of the flow record CSV.
pub const RECORD_HEADER: [&str; 13] = [
    "step",
    "t",
    "dt",
    "volume",
    "h_min",
    "h_max",
    "roundness",
    "soliton_residual",
    "Z_min",
    "Z_max",
    "W_max",
    "entropy",
    "cubic_norm",
];

/// One row of diagnostics for the body at a given flow step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub volume: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub roundness: f64,
    pub soliton_residual: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub w_max: f64,
    pub entropy: f64,
    /// Max of `|C|²` over samples; `None` on the curve backend.
    pub cubic_norm: Option<f64>,
    /// RMS of the quadric fit; `None` when the fit is degenerate.
    pub ellipsoid_fit: Option<f64>,
}

impl DiagnosticsRecord {
    pub fn compute<B: DiagnosticBody>(body: &B, alpha: f64, step: usize, t: f64, dt: f64) -> Self {
        let (h_min, h_max, _) = min_max_mean(body.support());
        let (z_min, z_max, _) = min_max_mean(&z_field(body, alpha));
        let (_, w_max, _) = min_max_mean(&w_field(body, alpha));
        Self {
            step,
            t,
            dt,
            volume: body.volume(),
            h_min,
            h_max,
            roundness: roundness(body),
            soliton_residual: soliton_residual(body, alpha).max_norm,
            z_min,
            z_max,
            w_max,
            entropy: entropy(body, alpha),
            cubic_norm: body
                .cubic_norm_field()
                .map(|c| c.into_iter().fold(0.0, f64::max)),
            ellipsoid_fit: body.ellipsoid_fit().ok().map(|f| f.rms),
        }
    }

    /// CSV fields in [`RECORD_HEADER`] order.
    pub fn csv_fields(&self) -> Vec<String> {
        let mut out = vec![self.step.to_string()];
        out.extend(
            [
                self.t,
                self.dt,
                self.volume,
                self.h_min,
                self.h_max,
                self.roundness,
                self.soliton_residual,
                self.z_min,
                self.z_max,
                self.w_max,
                self.entropy,
            ]
            .into_iter()
            .map(fmt_f64),
        );
        out.push(self.cubic_norm.map(fmt_f64).unwrap_or_default());
        out
    }
}

/// One `quantity,min,max,mean` row of the diagnose report.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityRow {
    pub quantity: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl QuantityRow {
    fn field(name: &str, values: &[f64]) -> Self {
        let (min, max, mean) = min_max_mean(values);
        Self {
            quantity: name.to_string(),
            min,
            max,
            mean,
        }
    }

    fn scalar(name: &str, v: f64) -> Self {
        Self {
            quantity: name.to_string(),
            min: v,
            max: v,
            mean: v,
        }
    }
}

/// Every field and global diagnostic of a body, one row each.
pub fn quantity_report<B: DiagnosticBody>(body: &B, alpha: f64) -> Vec<QuantityRow> {
    let fields = body.curvature_fields();
    let mut rows = vec![QuantityRow::field("h", body.support())];
    for (i, r) in fields.radii.iter().enumerate() {
        rows.push(QuantityRow::field(&format!("R{}", i + 1), r));
    }
    rows.extend([
        QuantityRow::field("K", &fields.gauss),
        QuantityRow::field("H", &fields.mean),
        QuantityRow::field("lambda_min", &fields.lambda_min),
        QuantityRow::field("lambda_max", &fields.lambda_max),
        QuantityRow::field("trace_b", &fields.trace_b),
        QuantityRow::field("F2", &body.position_norm_sq()),
        QuantityRow::field("Z", &z_field(body, alpha)),
        QuantityRow::field("W", &w_field(body, alpha)),
        QuantityRow::field("soliton_residual", &soliton_residual(body, alpha).values),
    ]);
    if let Some(c) = body.cubic_norm_field() {
        rows.push(QuantityRow::field("cubic_norm", &c));
    }
    rows.extend([
        QuantityRow::scalar("volume", body.volume()),
        QuantityRow::scalar("roundness", roundness(body)),
        QuantityRow::scalar("entropy", entropy(body, alpha)),
    ]);
    if let Ok(fit) = body.ellipsoid_fit() {
        rows.push(QuantityRow::scalar("ellipsoid_fit", fit.rms));
    }
    rows
}

pub fn write_quantity_report<W: Write>(rows: &[QuantityRow], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["quantity", "min", "max", "mean"])?;
    for r in rows {
        w.write_record([r.quantity.clone(), fmt_f64(r.min), fmt_f64(r.max), fmt_f64(r.mean)])?;
    }
    w.flush()?;
    Ok(())
}
