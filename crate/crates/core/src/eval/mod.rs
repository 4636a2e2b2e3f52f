//! Objective distortions between natural and synthesized renderings.

mod compare;
mod note_level;
mod report;
mod stft_loss;

use ndarray::{s, Array2};
use thiserror::Error;

use crate::align::{aligned_len, LengthMismatch};
use crate::pitch::PitchError;
use crate::spectral::SpectralError;

pub use compare::{compare, FeatureSetup, SampleComparison};
pub use note_level::{
    note_level_mos, note_level_pitch_distortion, note_level_spec_distortion, note_level_squared_error, NoteMeans,
};
pub use report::{NoteLevelBuilder, NoteLevelReport, NoteRow, SystemMetrics};
pub use stft_loss::{multires_stft_loss, Resolution, DEFAULT_RESOLUTIONS, LOG_MAGNITUDE_FLOOR};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("feature matrices have {left} and {right} columns")]
    ColumnMismatch { left: usize, right: usize },
    #[error(transparent)]
    Length(#[from] LengthMismatch),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("no note presence entry for sample {0:?}")]
    MissingPresence(String),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Pitch(#[from] PitchError),
}

/// Truncates two matrices to their common row count (at most 5% apart).
pub(crate) fn align_rows(a: &Array2<f64>, b: &Array2<f64>) -> Result<usize, EvalError> {
    if a.ncols() != b.ncols() {
        return Err(EvalError::ColumnMismatch { left: a.ncols(), right: b.ncols() });
    }
    Ok(aligned_len(a.nrows(), b.nrows())?)
}

/// Mean over all cells of `(a − b)²` after row alignment.
pub fn feature_mse(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64, EvalError> {
    let n = align_rows(a, b)?;
    let cells = n * a.ncols();
    if cells == 0 {
        return Err(EvalError::Empty("feature matrix"));
    }
    let sum: f64 = a.slice(s![..n, ..]).iter().zip(b.slice(s![..n, ..])).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(sum / cells as f64)
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::Degenerate("inputs differ in length"));
    }
    if xs.len() < 3 {
        return Err(EvalError::Degenerate("need at least three points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::Degenerate("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
