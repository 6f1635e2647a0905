//! Snapshot files: CSV with header `angle,h`, one row per grid sample in
//! grid order. Values are written with 17 significant digits so a read
//! reproduces the samples bit for bit.

use std::io::{Read, Write};

use thiserror::Error;

use super::{ConvexBody, GeometryError};

/// Relative tolerance when matching stored angles against the grid.
const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("snapshot header must be `angle,h`, found `{0}`")]
    Header(String),
    #[error("snapshot row {row}: cannot parse `{value}` as a number")]
    Parse { row: usize, value: String },
    #[error("snapshot row {row}: angle {found} does not match the {backend} grid angle {expected}")]
    GridMismatch {
        row: usize,
        backend: &'static str,
        expected: f64,
        found: f64,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Formats a double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_snapshot<B: ConvexBody, W: Write>(body: &B, writer: W) -> Result<(), SnapshotError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["angle", "h"])?;
    for (a, h) in body.angles().iter().zip(body.support()) {
        w.write_record([fmt_f64(*a), fmt_f64(*h)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads raw `(angle, h)` rows.
pub fn read_rows<R: Read>(reader: R) -> Result<Vec<(f64, f64)>, SnapshotError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.len() != 2 || &header[0] != "angle" || &header[1] != "h" {
        return Err(SnapshotError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    let parse = |row: usize, s: &str| -> Result<f64, SnapshotError> {
        s.trim().parse().map_err(|_| SnapshotError::Parse {
            row,
            value: s.to_string(),
        })
    };
    r.records()
        .enumerate()
        .map(|(row, rec)| {
            let rec = rec?;
            Ok((parse(row, &rec[0])?, parse(row, &rec[1])?))
        })
        .collect()
}

/// Reads a snapshot and checks it lies on the grid of backend `B`.
pub fn read_snapshot<B: ConvexBody, R: Read>(reader: R) -> Result<B, SnapshotError> {
    let rows = read_rows(reader)?;
    let expected = B::grid_angles(rows.len());
    for (row, ((angle, _), want)) in rows.iter().zip(&expected).enumerate() {
        if (angle - want).abs() > ANGLE_TOL * (1.0 + want.abs()) {
            return Err(SnapshotError::GridMismatch {
                row,
                backend: B::NAME,
                expected: *want,
                found: *angle,
            });
        }
    }
    Ok(B::from_support(rows.into_iter().map(|(_, h)| h).collect())?)
}
