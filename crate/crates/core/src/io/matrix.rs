//! Binary matrix files.
//!
//! Layout: `frames: u32 LE`, `dims: u32 LE`, then `frames * dims` `f32 LE`
//! values in row-major order. Values are stored as `f32`; reading widens back
//! to `f64`.

use std::fs;
use std::io;
use std::path::Path;

use ndarray::Array2;
use thiserror::Error;

const HEADER_LEN: usize = 8;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix file shorter than its 8-byte header")]
    MissingHeader,
    #[error("matrix payload is {found} bytes, header requires {expected}")]
    PayloadLength { expected: usize, found: usize },
    #[error("matrix dimension {0} does not fit in a u32")]
    TooLarge(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn encode_matrix(matrix: &Array2<f64>) -> Result<Vec<u8>, MatrixError> {
    let (rows, cols) = matrix.dim();
    let rows32 = u32::try_from(rows).map_err(|_| MatrixError::TooLarge(rows))?;
    let cols32 = u32::try_from(cols).map_err(|_| MatrixError::TooLarge(cols))?;
    let mut out = Vec::with_capacity(HEADER_LEN + rows * cols * 4);
    out.extend_from_slice(&rows32.to_le_bytes());
    out.extend_from_slice(&cols32.to_le_bytes());
    for row in matrix.rows() {
        for &v in row {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Array2<f64>, MatrixError> {
    if bytes.len() < HEADER_LEN {
        return Err(MatrixError::MissingHeader);
    }
    let rows = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or(MatrixError::TooLarge(rows))?;
    if payload.len() != expected {
        return Err(MatrixError::PayloadLength { expected, found: payload.len() });
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked above"))
}

pub fn save_matrix(path: impl AsRef<Path>, matrix: &Array2<f64>) -> Result<(), MatrixError> {
    fs::write(path, encode_matrix(matrix)?)?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>, MatrixError> {
    decode_matrix(&fs::read(path)?)
}
