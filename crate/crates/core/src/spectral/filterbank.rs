use std::collections::BTreeSet;
use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView1};

use super::SpectralError;
use crate::midi::NOTE_COUNT;

/// Equal-tempered frequency of MIDI note `m` (A4 = 69 = 440 Hz). Accepts
/// notes outside 0..=127 for filter edges.
pub fn midi_note_frequency(m: f64) -> f64 {
    440.0 * 2f64.powf((m - 69.0) / 12.0)
}

/// 128 triangular filters centred on MIDI notes, applied to one-sided spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct MidiFilterbank {
    weights: Array2<f64>,
    center_freqs: Vec<f64>,
    sample_rate: u32,
    n_fft: usize,
    /// Bins with a non-zero weight in each row.
    support: Vec<Range<usize>>,
}

impl MidiFilterbank {
    /// Wraps an arbitrary non-negative weight matrix (128 rows).
    pub fn from_weights(weights: Array2<f64>, sample_rate: u32, n_fft: usize) -> Result<Self, SpectralError> {
        if weights.nrows() != NOTE_COUNT {
            return Err(SpectralError::DimensionMismatch { expected: NOTE_COUNT, found: weights.nrows() });
        }
        if weights.ncols() != n_fft / 2 + 1 {
            return Err(SpectralError::DimensionMismatch { expected: n_fft / 2 + 1, found: weights.ncols() });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(SpectralError::InvalidFilterbank("weights must be finite and non-negative".into()));
        }
        let support = weights
            .rows()
            .into_iter()
            .map(|row| match row.iter().position(|&w| w > 0.0) {
                Some(first) => first..row.iter().rposition(|&w| w > 0.0).unwrap() + 1,
                None => 0..0,
            })
            .collect();
        let center_freqs = (0..NOTE_COUNT).map(|m| midi_note_frequency(m as f64)).collect();
        Ok(Self { weights, center_freqs, sample_rate, n_fft, support })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn center_freqs(&self) -> &[f64] {
        &self.center_freqs
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn bins(&self) -> usize {
        self.weights.ncols()
    }

    pub fn row_support(&self, m: usize) -> Range<usize> {
        self.support[m].clone()
    }

    pub fn row_sums(&self) -> Array1<f64> {
        self.weights.sum_axis(ndarray::Axis(1))
    }

    /// Indices of rows whose weights are all exactly zero.
    pub fn zero_filter_indices(&self) -> BTreeSet<usize> {
        (0..NOTE_COUNT).filter(|&m| self.support[m].is_empty()).collect()
    }

    /// Filter energies of one power-spectrum frame.
    pub fn apply(&self, power: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_iter((0..NOTE_COUNT).map(|m| {
            let r = self.support[m].clone();
            self.weights.row(m).slice(ndarray::s![r.clone()]).dot(&power.slice(ndarray::s![r]))
        }))
    }
}

/// Triangular filters with peak 1 at each note's centre and edges at the
/// neighbouring notes' centres; edge filters extrapolate to notes -1 and 128.
/// Weights are sampled at bin frequencies `k * sample_rate / n_fft`.
pub fn build_midi_filterbank(sample_rate: u32, n_fft: usize) -> Result<MidiFilterbank, SpectralError> {
    if sample_rate == 0 {
        return Err(SpectralError::InvalidConfig("sample rate must be positive".into()));
    }
    if !n_fft.is_power_of_two() {
        return Err(SpectralError::InvalidConfig(format!("n_fft {n_fft} is not a power of two")));
    }
    let bins = n_fft / 2 + 1;
    let df = sample_rate as f64 / n_fft as f64;
    let mut weights = Array2::zeros((NOTE_COUNT, bins));
    for m in 0..NOTE_COUNT {
        let lo = midi_note_frequency(m as f64 - 1.0);
        let c = midi_note_frequency(m as f64);
        let hi = midi_note_frequency(m as f64 + 1.0);
        let first = (lo / df).floor() as usize;
        let last = ((hi / df).ceil() as usize).min(bins - 1);
        for k in first..=last {
            let f = k as f64 * df;
            let w = if f > lo && f <= c {
                (f - lo) / (c - lo)
            } else if f > c && f < hi {
                (hi - f) / (hi - c)
            } else {
                0.0
            };
            weights[[m, k]] = w;
        }
    }
    MidiFilterbank::from_weights(weights, sample_rate, n_fft)
}

pub fn zero_filter_indices(fb: &MidiFilterbank) -> BTreeSet<usize> {
    fb.zero_filter_indices()
}
