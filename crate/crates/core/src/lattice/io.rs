//! Lattice serialization.
//!
//! A trajectory is stored as two files: a JSON header carrying the
//! [`GridSpec`] and slice times, and a payload of the node values in
//! slice order, node index order x-major then p. The payload is either raw
//! little-endian `f64` (`.bin`) or CSV with one row per node. Both round-trip
//! bit-exactly.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FieldLattice, GridSpec, Trajectory};
use crate::error::{Error, Result};

pub const FORMAT: &str = "enskog-lattice-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeHeader {
    pub format: String,
    pub encoding: Encoding,
    pub grid: GridSpec,
    pub slices: usize,
    pub times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    F64Le,
    Csv,
}

impl LatticeHeader {
    pub fn for_trajectory(traj: &Trajectory, encoding: Encoding) -> Self {
        LatticeHeader {
            format: FORMAT.to_string(),
            encoding,
            grid: *traj.spec(),
            slices: traj.slices().len(),
            times: traj.spec().times(),
        }
    }
}

pub fn encode_f64le(slices: &[FieldLattice]) -> Vec<u8> {
    slices
        .iter()
        .flat_map(|s| s.values().iter().flat_map(|v| v.to_le_bytes()))
        .collect()
}

pub fn decode_f64le(bytes: &[u8], grid: GridSpec, slices: usize) -> Result<Vec<FieldLattice>> {
    let n = grid.len();
    if bytes.len() != 8 * n * slices {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            8 * n * slices
        )));
    }
    bytes
        .chunks_exact(8 * n)
        .map(|chunk| {
            let values = chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect();
            FieldLattice::from_values(grid, values)
        })
        .collect()
}

/// CSV rows `slice,node,value`; values use the shortest round-trip
/// decimal representation.
pub fn write_csv<W: Write>(mut out: W, slices: &[FieldLattice]) -> std::io::Result<()> {
    writeln!(out, "slice,node,value")?;
    for (k, s) in slices.iter().enumerate() {
        for (i, v) in s.values().iter().enumerate() {
            writeln!(out, "{k},{i},{v:?}")?;
        }
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R, grid: GridSpec, slices: usize) -> Result<Vec<FieldLattice>> {
    let n = grid.len();
    let mut values = vec![vec![0.0; n]; slices];
    let mut seen = 0usize;
    for (line_no, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        if line_no == 0 {
            if line.trim() != "slice,node,value" {
                return Err(Error::Format(format!("unexpected CSV header `{line}`")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("line {}: malformed row `{line}`", line_no + 1));
        let mut parts = line.split(',');
        let k: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let i: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let v: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if k >= slices || i >= n || parts.next().is_some() {
            return Err(bad());
        }
        values[k][i] = v;
        seen += 1;
    }
    if seen != n * slices {
        return Err(Error::Format(format!("expected {} rows, found {seen}", n * slices)));
    }
    values
        .into_iter()
        .map(|v| FieldLattice::from_values(grid, v))
        .collect()
}

/// Writes `header_path` (JSON) and `payload_path`.
pub fn write_trajectory(
    traj: &Trajectory,
    header_path: &Path,
    payload_path: &Path,
    encoding: Encoding,
) -> Result<()> {
    let header = LatticeHeader::for_trajectory(traj, encoding);
    let json = serde_json::to_string_pretty(&header).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(header_path, json + "\n").map_err(|e| Error::io(header_path, e))?;
    match encoding {
        Encoding::F64Le => fs::write(payload_path, encode_f64le(traj.slices()))
            .map_err(|e| Error::io(payload_path, e)),
        Encoding::Csv => {
            let file = fs::File::create(payload_path).map_err(|e| Error::io(payload_path, e))?;
            let mut out = BufWriter::new(file);
            write_csv(&mut out, traj.slices())
                .and_then(|_| out.flush())
                .map_err(|e| Error::io(payload_path, e))
        }
    }
}

pub fn read_header(header_path: &Path) -> Result<LatticeHeader> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header: LatticeHeader =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", header_path.display())))?;
    if header.format != FORMAT {
        return Err(Error::Format(format!("unknown lattice format `{}`", header.format)));
    }
    header.grid.validate()?;
    Ok(header)
}

pub fn read_trajectory(header_path: &Path, payload_path: &Path) -> Result<Trajectory> {
    let header = read_header(header_path)?;
    let slices = match header.encoding {
        Encoding::F64Le => {
            let bytes = fs::read(payload_path).map_err(|e| Error::io(payload_path, e))?;
            decode_f64le(&bytes, header.grid, header.slices)?
        }
        Encoding::Csv => {
            let file = fs::File::open(payload_path).map_err(|e| Error::io(payload_path, e))?;
            read_csv(BufReader::new(file), header.grid, header.slices)?
        }
    };
    let mut grid = header.grid;
    grid.n_t = slices.len();
    Trajectory::new(grid, slices)
}

/// Single-slice convenience: a one-slice payload is read as the field.
pub fn read_field(header_path: &Path, payload_path: &Path) -> Result<FieldLattice> {
    let traj = read_trajectory(header_path, payload_path)?;
    Ok(traj.into_slices().swap_remove(0))
}
