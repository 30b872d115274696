//! JSON file formats.
//!
//! Complex numbers are `[re, im]` pairs, matrices are arrays of rows.
//! Floats are written in scientific notation with 17 significant digits so
//! that a write/read cycle reproduces every `f64` exactly.
//!
//! ```json
//! {"a":-1.0,"b":1.0,"N":1,"moments":[[[[1.0,0.0]]],[[[0.0,0.0]]]]}
//! {"a":-1.0,"b":1.0,"N":1,"atoms":[{"x":-1.0,"W":[[[0.5,0.0]]]}]}
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::linalg::{CMat, HermMatrix};
use crate::moments::{Atom, DiscreteMatrixMeasure, MomentSequence};

/// Hermiticity tolerance applied to parsed matrices.
pub const PARSE_HERMITIAN_TOL: f64 = 1e-10;

/// Row-major matrix of `[re, im]` pairs.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub moments: Vec<MatrixRows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub x: f64,
    #[serde(rename = "W")]
    pub w: MatrixRows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub atoms: Vec<AtomEntry>,
}

pub fn matrix_to_rows(m: &CMat) -> MatrixRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Parses an `n x n` Hermitian matrix; `what` names it in error messages.
pub fn rows_to_hermitian(rows: &MatrixRows, n: usize, what: &str) -> Result<HermMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("{what}: expected a {n}x{n} matrix")));
    }
    let m = CMat::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
    HermMatrix::with_tolerance(m, PARSE_HERMITIAN_TOL).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

impl ProblemFile {
    pub fn from_sequence(seq: &MomentSequence) -> Self {
        Self {
            a: seq.a(),
            b: seq.b(),
            n: seq.block_size(),
            moments: seq.moments().iter().map(|s| matrix_to_rows(s.as_matrix())).collect(),
        }
    }

    pub fn to_sequence(&self) -> Result<MomentSequence> {
        if self.moments.is_empty() {
            return Err(Error::Parse("moments: array is empty".into()));
        }
        let moments = self
            .moments
            .iter()
            .enumerate()
            .map(|(k, rows)| rows_to_hermitian(rows, self.n, &format!("moments[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        MomentSequence::new(self.a, self.b, moments)
    }
}

impl MeasureFile {
    pub fn from_measure(measure: &DiscreteMatrixMeasure) -> Self {
        Self {
            a: measure.a(),
            b: measure.b(),
            n: measure.block_size(),
            atoms: measure
                .atoms()
                .iter()
                .map(|at| AtomEntry {
                    x: at.x,
                    w: matrix_to_rows(at.weight.as_matrix()),
                })
                .collect(),
        }
    }

    pub fn to_measure(&self) -> Result<DiscreteMatrixMeasure> {
        let atoms = self
            .atoms
            .iter()
            .enumerate()
            .map(|(k, e)| {
                Ok(Atom {
                    x: e.x,
                    weight: rows_to_hermitian(&e.w, self.n, &format!("atoms[{k}].W"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteMatrixMeasure::new(self.a, self.b, self.n, atoms)
    }
}

/// Compact JSON with `{:.16e}` floats.
struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` with full-precision scientific floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Internal(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{origin}: {e}")))
}

pub fn parse_problem(text: &str) -> Result<MomentSequence> {
    parse::<ProblemFile>(text, "problem")?.to_sequence()
}

pub fn parse_measure(text: &str) -> Result<DiscreteMatrixMeasure> {
    parse::<MeasureFile>(text, "measure")?.to_measure()
}

/// A parameter file holds one Hermitian matrix (array of rows).
pub fn parse_parameter(text: &str) -> Result<HermMatrix> {
    let rows: MatrixRows = parse(text, "parameter")?;
    let n = rows.len();
    rows_to_hermitian(&rows, n, "parameter")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => Error::Parse(format!("{}: {other}", path.display())),
    })
}

pub fn read_problem(path: &Path) -> Result<MomentSequence> {
    with_path(path, parse_problem(&read(path)?))
}

pub fn read_measure(path: &Path) -> Result<DiscreteMatrixMeasure> {
    with_path(path, parse_measure(&read(path)?))
}

pub fn read_parameter(path: &Path) -> Result<HermMatrix> {
    with_path(path, parse_parameter(&read(path)?))
}

pub fn write_problem(path: &Path, seq: &MomentSequence) -> Result<()> {
    fs::write(path, to_json_string(&ProblemFile::from_sequence(seq))?)?;
    Ok(())
}

pub fn write_measure(path: &Path, measure: &DiscreteMatrixMeasure) -> Result<()> {
    fs::write(path, to_json_string(&MeasureFile::from_measure(measure))?)?;
    Ok(())
}
