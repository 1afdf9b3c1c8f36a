//! Binary tensor files and the metrics CSV.
//!
//! File layout (all integers little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `TLT1` |
//! | 1     | dtype: 0 = `u8` mask, 1 = `f64` |
//! | 1     | order, always 3 |
//! | 2     | reserved, zero |
//! | 24    | `n1`, `n2`, `n3` as `u64` |
//! | ...   | payload in frontal-slice-major order (`k`, then `i`, then `j`) |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Mask3, Tensor3};

pub const MAGIC: [u8; 4] = *b"TLT1";
const HEADER_LEN: usize = 32;
const DTYPE_MASK: u8 = 0;
const DTYPE_F64: u8 = 1;

/// Contents of a tensor file.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    Real(Tensor3),
    Mask(Mask3),
}

impl TensorData {
    fn kind(&self) -> &'static str {
        match self {
            Self::Real(_) => "f64",
            Self::Mask(_) => "mask",
        }
    }
}

fn header(dtype: u8, dims: (usize, usize, usize)) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[dtype, 3, 0, 0]);
    for d in [dims.0, dims.1, dims.2] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out
}

pub fn encode_tensor(x: &Tensor3) -> Vec<u8> {
    let mut out = header(DTYPE_F64, x.dims());
    out.reserve(8 * x.len());
    for v in x.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_mask(m: &Mask3) -> Vec<u8> {
    let mut out = header(DTYPE_MASK, m.dims());
    out.extend(m.data().iter().map(|&b| b as u8));
    out
}

/// Parses a complete file image. Nothing is returned unless every check
/// passes.
pub fn decode(bytes: &[u8]) -> Result<TensorData> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(Error::BadMagic(bytes[..4].try_into().expect("4 bytes")));
        }
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let (dtype, order) = (bytes[4], bytes[5]);
    if order != 3 {
        return Err(Error::BadOrder(order));
    }
    let width = match dtype {
        DTYPE_MASK => 1,
        DTYPE_F64 => 8,
        other => return Err(Error::UnknownDtype(other)),
    };
    if bytes[6] != 0 || bytes[7] != 0 {
        return Err(Error::Corrupt("reserved header bytes are not zero".into()));
    }
    let dim = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let raw = [dim(8), dim(16), dim(24)];
    let to_usize = |d: u64| usize::try_from(d).map_err(|_| Error::Corrupt(format!("extent {d} too large")));
    let dims = (to_usize(raw[0])?, to_usize(raw[1])?, to_usize(raw[2])?);
    let count = dims
        .0
        .checked_mul(dims.1)
        .and_then(|v| v.checked_mul(dims.2))
        .ok_or_else(|| Error::Corrupt(format!("dims {dims:?} overflow")))?;
    let expected = count
        .checked_mul(width)
        .and_then(|v| v.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Corrupt(format!("dims {dims:?} overflow")))?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let payload = &bytes[HEADER_LEN..];
    if dtype == DTYPE_F64 {
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(TensorData::Real(Tensor3::new(dims, data)?))
    } else {
        let data = payload
            .iter()
            .enumerate()
            .map(|(i, &b)| match b {
                0 => Ok(false),
                1 => Ok(true),
                v => Err(Error::Corrupt(format!("mask byte {v} at offset {i}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorData::Mask(Mask3::new(dims, data)?))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn write_tensor(x: &Tensor3, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_tensor(x)).map_err(|e| io_err(path, e))
}

pub fn write_mask(m: &Mask3, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_mask(m)).map_err(|e| io_err(path, e))
}

pub fn read_any(path: impl AsRef<Path>) -> Result<TensorData> {
    let path = path.as_ref();
    decode(&fs::read(path).map_err(|e| io_err(path, e))?)
}

/// Reads an `f64` tensor; a mask file is a [`Error::DtypeMismatch`].
pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor3> {
    match read_any(path)? {
        TensorData::Real(x) => Ok(x),
        other => Err(Error::DtypeMismatch {
            expected: "f64",
            found: other.kind(),
        }),
    }
}

/// Reads a mask; an `f64` file is a [`Error::DtypeMismatch`].
pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask3> {
    match read_any(path)? {
        TensorData::Mask(m) => Ok(m),
        other => Err(Error::DtypeMismatch {
            expected: "mask",
            found: other.kind(),
        }),
    }
}

/// One line of the metrics CSV. Absent metrics are written as empty fields;
/// an infinite PSNR is written as `inf`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsRow {
    pub experiment: String,
    pub solver: String,
    pub psnr: Option<f64>,
    pub rse: Option<f64>,
    pub f_measure: Option<f64>,
    pub cluster_accuracy: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub converged: Option<bool>,
}

/// Column order of the metrics CSV.
pub const METRICS_HEADER: [&str; 9] = [
    "experiment",
    "solver",
    "psnr_db",
    "rse",
    "f_measure",
    "cluster_accuracy",
    "iterations",
    "wall_time_s",
    "converged",
];

fn num(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x == f64::INFINITY => "inf".into(),
        Some(x) => format!("{x}"),
    }
}

impl MetricsRow {
    pub fn fields(&self) -> [String; 9] {
        [
            self.experiment.clone(),
            self.solver.clone(),
            num(self.psnr),
            num(self.rse),
            num(self.f_measure),
            num(self.cluster_accuracy),
            self.iterations.map(|v| v.to_string()).unwrap_or_default(),
            num(self.wall_time_s),
            self.converged.map(|v| v.to_string()).unwrap_or_default(),
        ]
    }
}

/// Appends `row` to the CSV at `path`, writing the header first when the
/// file is new or empty.
pub fn append_metrics(path: impl AsRef<Path>, row: &MetricsRow) -> Result<()> {
    let path = path.as_ref();
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
    if fresh {
        w.write_record(METRICS_HEADER).map_err(csv_err)?;
    }
    w.write_record(row.fields()).map_err(csv_err)?;
    w.flush().map_err(|e| io_err(path, e))
}
