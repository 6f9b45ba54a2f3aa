//! Figure-data export: RFC-4180 CSV tables and JSON metadata sidecars.
//!
//! Numbers are written in scientific notation with 17 significant digits so
//! every `f64` round-trips exactly.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::control::{ControlScheme, NoiseModel};
use crate::ensemble::{CoherenceCurve, T2Estimate};
use crate::error::{Error, Result};

/// Formats `x` with 17 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// A header plus rows of numbers, all of the header's width.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::DimensionMismatch { expected: self.header.len(), found: row.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_value(x))).map_err(csv_error)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes `meta` as pretty-printed JSON with a trailing newline.
pub fn write_meta(path: impl AsRef<Path>, meta: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Columns `time_s, fidelity, envelope`.
pub fn coherence_table(curve: &CoherenceCurve) -> Table {
    let mut table = Table::new(["time_s", "fidelity", "envelope"]);
    for ((&t, &f), &e) in curve.times.iter().zip(&curve.fidelity).zip(&curve.envelope) {
        table.rows.push(vec![t, f, e]);
    }
    table
}

/// Sidecar for a coherence curve. `t2_seconds` is null when the fidelity
/// never crossed the threshold; `horizon_seconds` is then a lower bound.
#[derive(Clone, Debug, Serialize)]
pub struct CoherenceMeta {
    pub scheme: ControlScheme,
    pub noise: NoiseModel,
    pub seed: u64,
    pub t2_seconds: Option<f64>,
    pub horizon_seconds: f64,
    pub envelope_window_seconds: f64,
    pub multi_crossing: bool,
}

impl CoherenceMeta {
    pub fn new(scheme: ControlScheme, noise: NoiseModel, curve: &CoherenceCurve) -> Self {
        let t2_seconds = match curve.t2 {
            T2Estimate::Crossed { t2 } => Some(t2),
            T2Estimate::BeyondHorizon { .. } => None,
        };
        Self {
            scheme,
            noise,
            seed: noise.seed,
            t2_seconds,
            horizon_seconds: curve.horizon(),
            envelope_window_seconds: curve.window,
            multi_crossing: curve.multi_crossing,
        }
    }
}
