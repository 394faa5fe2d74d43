//! Potential snapshots as plain CSV.
//!
//! ```text
//! # kahler-potential v1 n_nodes=64
//! x,value
//! -9.993050417357722e-1,1.2e-3
//! ...
//! ```
//!
//! Values are written in shortest round-trip form, so reading a snapshot back
//! reproduces the nodal values bit for bit.

use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;

use crate::scalar::Scalar;
use crate::spectral::{SpectralGrid, SymField};

pub const FORMAT_TAG: &str = "kahler-potential";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header line `{0}`")]
    Header(String),
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("header declares {declared} nodes but file has {rows} rows")]
    RowCount { declared: usize, rows: usize },
    #[error("node {index} is at x = {found}, grid expects {expected}")]
    NodeMismatch { index: usize, found: f64, expected: f64 },
    #[error("field: {0}")]
    Field(#[from] crate::Error),
}

/// A decoded snapshot: node positions and potential values.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Rebuilds the field on `grid`, checking the node positions match.
    pub fn to_field<T: Scalar>(&self, grid: &SpectralGrid<T>) -> Result<SymField<T>, SnapshotError> {
        if self.n_nodes() != grid.n_nodes() {
            return Err(crate::Error::SizeMismatch { expected: grid.n_nodes(), got: self.n_nodes() }.into());
        }
        let tol = T::tol(1e-13, 16.0).as_f64();
        for (i, (&found, &expected)) in self.nodes.iter().zip(grid.nodes()).enumerate() {
            if (found - expected.as_f64()).abs() > tol {
                return Err(SnapshotError::NodeMismatch { index: i, found, expected: expected.as_f64() });
            }
        }
        let values = self.values.iter().map(|&v| T::lit(v)).collect();
        Ok(SymField::from_values(grid, values)?)
    }
}

pub fn write_snapshot<T: Scalar, W: Write>(
    mut out: W,
    grid: &SpectralGrid<T>,
    phi: &SymField<T>,
) -> Result<(), SnapshotError> {
    writeln!(out, "# {FORMAT_TAG} v{FORMAT_VERSION} n_nodes={}", grid.n_nodes())?;
    writeln!(out, "x,value")?;
    for (x, v) in grid.nodes().iter().zip(phi.values()) {
        writeln!(out, "{:e},{:e}", x.as_f64(), v.as_f64())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(input: R) -> Result<Snapshot, SnapshotError> {
    let mut reader = BufReader::new(input);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let declared = parse_header(header.trim())?;
    let mut csv = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let mut nodes = Vec::with_capacity(declared);
    let mut values = Vec::with_capacity(declared);
    for row in csv.deserialize::<(f64, f64)>() {
        let (x, v) = row?;
        nodes.push(x);
        values.push(v);
    }
    if nodes.len() != declared {
        return Err(SnapshotError::RowCount { declared, rows: nodes.len() });
    }
    Ok(Snapshot { nodes, values })
}

fn parse_header(line: &str) -> Result<usize, SnapshotError> {
    let bad = || SnapshotError::Header(line.to_string());
    let mut parts = line.strip_prefix('#').ok_or_else(bad)?.split_whitespace();
    if parts.next() != Some(FORMAT_TAG) {
        return Err(bad());
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse().ok())
        .ok_or_else(bad)?;
    if version != FORMAT_VERSION {
        return Err(SnapshotError::Version(version));
    }
    parts
        .next()
        .and_then(|v| v.strip_prefix("n_nodes="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(bad)
}
