//! Deterministic waveform generators used as reference systems.

mod additive;
mod griffin_lim;
mod source_filter;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{SpectralError, StftConfig};

pub use additive::additive_synth;
pub use griffin_lim::{griffin_lim, griffin_lim_with_phase, spectral_convergence, GriffinLim};
pub use source_filter::{invert_filterbank, source_filter_synth, NNLS_ITERATIONS, RIDGE};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthesis configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub sample_rate: u32,
    pub harmonics: usize,
    /// Harmonic `k` has amplitude `k^-rolloff_exponent`.
    pub rolloff_exponent: f64,
    /// Linear attack time in seconds.
    pub attack: f64,
    /// Time for the release tail to decay by 60 dB, in seconds.
    pub release: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { sample_rate: 24_000, harmonics: 8, rolloff_exponent: 1.0, attack: 0.01, release: 0.1 }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.sample_rate == 0 {
            return Err(SynthError::InvalidConfig("sample rate must be positive"));
        }
        if self.harmonics == 0 {
            return Err(SynthError::InvalidConfig("need at least one harmonic"));
        }
        if !(self.rolloff_exponent > 0.0) {
            return Err(SynthError::InvalidConfig("rolloff exponent must be positive"));
        }
        if !(self.attack >= 0.0 && self.release >= 0.0) {
            return Err(SynthError::InvalidConfig("attack and release must be non-negative"));
        }
        Ok(())
    }
}

/// Non-negative one-sided magnitudes, frames × (n_fft / 2 + 1).
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrogram {
    data: Array2<f64>,
    config: StftConfig,
}

impl MagnitudeSpectrogram {
    pub fn new(data: Array2<f64>, config: StftConfig) -> Result<Self, SynthError> {
        config.validate()?;
        if data.ncols() != config.bins() {
            return Err(SynthError::DimensionMismatch { expected: config.bins(), found: data.ncols() });
        }
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SynthError::InvalidConfig("magnitudes must be finite and non-negative"));
        }
        Ok(Self { data, config })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }
}
