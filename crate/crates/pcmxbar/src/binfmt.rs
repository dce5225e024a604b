//! Little-endian binary blobs.
//!
//! `XBARG1` holds a row-major `f64` matrix: 8-byte magic, `u32` rows, `u32`
//! cols, then the values. `XBART1` holds a uniformly sampled trace: 8-byte
//! magic, `u32` sample count, `f64` sampling rate, then the samples.

use std::fs;
use std::path::Path;

use pcmxbar_core::Matrix;

use crate::error::{AppError, AppResult};

pub const MATRIX_MAGIC: &[u8; 8] = b"XBARG1\0\0";
pub const TRACE_MAGIC: &[u8; 8] = b"XBART1\0\0";

pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * m.as_slice().len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn take<const N: usize>(bytes: &[u8], at: usize, what: &str) -> AppResult<[u8; N]> {
    bytes
        .get(at..at + N)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| AppError::Data(format!("{what} is truncated")))
}

fn f64s(body: &[u8], n: usize, what: &str) -> AppResult<Vec<f64>> {
    if body.len() != 8 * n {
        return Err(AppError::Data(format!(
            "{what} payload has {} bytes, header promises {}",
            body.len(),
            8 * n
        )));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn decode_matrix(bytes: &[u8]) -> AppResult<Matrix> {
    if take::<8>(bytes, 0, "XBARG1 header")? != *MATRIX_MAGIC {
        return Err(AppError::Data("not an XBARG1 file".into()));
    }
    let rows = u32::from_le_bytes(take(bytes, 8, "XBARG1 header")?) as usize;
    let cols = u32::from_le_bytes(take(bytes, 12, "XBARG1 header")?) as usize;
    let data = f64s(&bytes[16..], rows * cols, "XBARG1")?;
    Ok(Matrix::from_vec(rows, cols, data)?)
}

pub fn encode_trace(fs: f64, samples: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * samples.len());
    out.extend_from_slice(TRACE_MAGIC);
    out.extend_from_slice(&(samples.len() as u32).to_le_bytes());
    out.extend_from_slice(&fs.to_le_bytes());
    for v in samples {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// `(fs, samples)`.
pub fn decode_trace(bytes: &[u8]) -> AppResult<(f64, Vec<f64>)> {
    if take::<8>(bytes, 0, "XBART1 header")? != *TRACE_MAGIC {
        return Err(AppError::Data("not an XBART1 file".into()));
    }
    let n = u32::from_le_bytes(take(bytes, 8, "XBART1 header")?) as usize;
    let fs = f64::from_le_bytes(take(bytes, 12, "XBART1 header")?);
    Ok((fs, f64s(&bytes[20..], n, "XBART1")?))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> AppResult<()> {
    fs::write(path, encode_matrix(m)).map_err(|e| AppError::io(path, e))
}

pub fn read_matrix(path: &Path) -> AppResult<Matrix> {
    decode_matrix(&fs::read(path).map_err(|e| AppError::io(path, e))?)
}

pub fn write_trace(path: &Path, fs_hz: f64, samples: &[f64]) -> AppResult<()> {
    fs::write(path, encode_trace(fs_hz, samples)).map_err(|e| AppError::io(path, e))
}

pub fn read_trace(path: &Path) -> AppResult<(f64, Vec<f64>)> {
    decode_trace(&fs::read(path).map_err(|e| AppError::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_layout() {
        let m = Matrix::from_vec(1, 2, vec![1.0, -2.5]).unwrap();
        let b = encode_matrix(&m);
        assert_eq!(&b[..8], b"XBARG1\0\0");
        assert_eq!(&b[8..16], &[1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(b.len(), 32);
        assert_eq!(decode_matrix(&b).unwrap(), m);
        assert!(decode_matrix(&b[..31]).is_err());
    }

    #[test]
    fn trace_layout() {
        let b = encode_trace(112_000.0, &[0.5, 1.5, 2.5]);
        assert_eq!(&b[..8], b"XBART1\0\0");
        assert_eq!(&b[8..12], &[3, 0, 0, 0]);
        assert_eq!(b.len(), 20 + 24);
        assert_eq!(decode_trace(&b).unwrap(), (112_000.0, vec![0.5, 1.5, 2.5]));
        let mut wrong = b.clone();
        wrong[5] = b'G';
        assert!(decode_trace(&wrong).is_err());
    }
}
