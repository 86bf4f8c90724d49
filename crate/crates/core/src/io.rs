//! On-disk tensor formats.
//!
//! `F8T1` container, little-endian:
//!
//! ```text
//! magic    4 bytes  "F8T1"
//! format   1 byte   exponent bits (2..=5)
//! rank     u32
//! dims     rank x u32
//! payload  prod(dims) bytes, row-major FP8
//! ```
//!
//! Real-valued sources (raw little-endian `f32` streams or CSV text) are
//! quantized with round-to-nearest-even and saturation.

use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::fp8::{Fp8Format, Fp8Tensor};

pub const MAGIC: &[u8; 4] = b"F8T1";

pub fn encode_f8t(tensor: &Fp8Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(9 + 4 * tensor.shape().len() + tensor.len());
    out.extend_from_slice(MAGIC);
    out.push(tensor.format().exp_bits() as u8);
    out.extend_from_slice(&(tensor.shape().len() as u32).to_le_bytes());
    for &d in tensor.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(tensor.bytes());
    out
}

pub fn decode_f8t(data: &[u8], path: &Path) -> Result<Fp8Tensor> {
    let truncated = |detail: &str| Error::Truncated {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    if data.len() < 4 {
        return Err(truncated("missing magic"));
    }
    if &data[..4] != MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    if data.len() < 9 {
        return Err(truncated("missing header"));
    }
    let format = Fp8Format::new(data[4] as u32)?;
    let rank = u32::from_le_bytes(data[5..9].try_into().unwrap()) as usize;
    if rank == 0 {
        return Err(Error::EmptyTensor);
    }
    let dims_end = rank
        .checked_mul(4)
        .and_then(|n| n.checked_add(9))
        .ok_or_else(|| truncated("rank overflow"))?;
    if data.len() < dims_end {
        return Err(truncated("missing dimensions"));
    }
    let shape: Vec<usize> = data[9..dims_end]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| truncated("dimension overflow"))?;
    if count == 0 {
        return Err(Error::EmptyTensor);
    }
    let payload = &data[dims_end..];
    if payload.len() < count {
        return Err(truncated(&format!("payload has {} of {} bytes", payload.len(), count)));
    }
    if payload.len() > count {
        return Err(Error::ShapeMismatch {
            shape,
            len: payload.len(),
        });
    }
    Fp8Tensor::new(format, shape, payload.to_vec())
}

pub fn load_f8t(path: &Path) -> Result<Fp8Tensor> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_f8t(&data, path)
}

pub fn save_f8t(tensor: &Fp8Tensor, path: &Path) -> Result<()> {
    std::fs::write(path, encode_f8t(tensor)).map_err(|e| Error::io(path, e))
}

/// Source encoding for [`import_real`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RealSource {
    /// Little-endian `f32` stream; 1-D unless a shape is given.
    RawF32,
    /// Comma-separated text; one row per line.
    Csv,
}

impl RealSource {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") => Self::Csv,
            _ => Self::RawF32,
        }
    }
}

/// Parses CSV text. Rows of equal length give a 2-D shape, a single line a
/// 1-D shape.
pub fn parse_csv(text: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut values = Vec::new();
    let mut widths = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                location: format!("line {}", n + 1),
                detail: format!("not a number: `{field}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteSource { index: values.len() });
            }
            values.push(v);
        }
        widths.push(values.len() - before);
    }
    if values.is_empty() {
        return Err(Error::EmptyTensor);
    }
    let shape = if widths.len() == 1 {
        vec![widths[0]]
    } else if widths.iter().all(|&w| w == widths[0]) {
        vec![widths.len(), widths[0]]
    } else {
        return Err(Error::Parse {
            location: "csv".into(),
            detail: "ragged rows".into(),
        });
    };
    Ok((shape, values))
}

pub fn parse_raw_f32(data: &[u8], path: &Path) -> Result<Vec<f64>> {
    if !data.len().is_multiple_of(4) {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            detail: format!("{} bytes is not a whole number of f32 values", data.len()),
        });
    }
    let values: Vec<f64> = data
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSource { index });
    }
    Ok(values)
}

/// Outcome of importing real values.
#[derive(Clone, Debug, PartialEq)]
pub struct Import {
    pub tensor: Fp8Tensor,
    pub saturated: usize,
}

pub fn import_real(
    path: &Path,
    source: RealSource,
    fmt: Fp8Format,
    shape: Option<Vec<usize>>,
) -> Result<Import> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (parsed_shape, values) = match source {
        RealSource::Csv => {
            let text = String::from_utf8(data).map_err(|e| Error::Parse {
                location: path.display().to_string(),
                detail: e.to_string(),
            })?;
            parse_csv(&text)?
        }
        RealSource::RawF32 => {
            let v = parse_raw_f32(&data, path)?;
            (vec![v.len()], v)
        }
    };
    let shape = shape.unwrap_or(parsed_shape);
    let (tensor, saturated) = Fp8Tensor::from_reals(fmt, shape, &values)?;
    if saturated > 0 {
        warn!(
            "{}: {saturated} value(s) exceed the {fmt} range and were saturated to {}",
            path.display(),
            fmt.max_finite()
        );
    }
    Ok(Import { tensor, saturated })
}
