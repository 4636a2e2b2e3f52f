use ndarray::Array2;

use super::{stft, MidiFilterbank, SpectralError, StftConfig};
use crate::midi::NOTE_COUNT;
use crate::Waveform;

/// Energy floor applied before log compression.
pub const DEFAULT_FLOOR: f64 = 1e-5;

/// Log10 filterbank energies, frames × 128.
#[derive(Debug, Clone, PartialEq)]
pub struct MidiSpectrogram {
    pub values: Array2<f64>,
    pub floor: f64,
    pub config: StftConfig,
}

impl MidiSpectrogram {
    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    /// Linear filter energies, `10^values`.
    pub fn energies(&self) -> Array2<f64> {
        self.values.mapv(|v| 10f64.powf(v))
    }

    /// Index of the strongest band in each frame.
    pub fn argmax(&self) -> Vec<usize> {
        self.values
            .rows()
            .into_iter()
            .map(|r| r.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i))
            .collect()
    }
}

fn check_filterbank(fb: &MidiFilterbank, cfg: &StftConfig) -> Result<(), SpectralError> {
    if fb.n_fft() != cfg.n_fft || fb.sample_rate() != cfg.sample_rate {
        return Err(SpectralError::FilterbankMismatch {
            fb_rate: fb.sample_rate(),
            fb_n_fft: fb.n_fft(),
            rate: cfg.sample_rate,
            n_fft: cfg.n_fft,
        });
    }
    Ok(())
}

/// `log10(max(fb · |STFT|², floor))` per frame.
pub fn midi_spectrogram(
    w: &Waveform,
    cfg: &StftConfig,
    fb: &MidiFilterbank,
    floor: f64,
) -> Result<MidiSpectrogram, SpectralError> {
    check_filterbank(fb, cfg)?;
    if !(floor > 0.0) {
        return Err(SpectralError::InvalidConfig("floor must be positive".into()));
    }
    let power = stft(w, cfg)?.power();
    let mut values = Array2::zeros((power.nrows(), NOTE_COUNT));
    for (t, frame) in power.rows().into_iter().enumerate() {
        let energies = fb.apply(frame);
        values.row_mut(t).iter_mut().zip(&energies).for_each(|(v, e)| *v = e.max(floor).log10());
    }
    Ok(MidiSpectrogram { values, floor, config: *cfg })
}

/// Pitch class of a frequency, C = 0.
fn pitch_class(f: f64) -> usize {
    ((12.0 * (f / 440.0).log2()).round() as i64 + 9).rem_euclid(12) as usize
}

/// Chroma from a power spectrogram; each frame scaled so its maximum is 1.
pub fn chroma_from_power(power: &Array2<f64>, cfg: &StftConfig) -> Array2<f64> {
    let classes: Vec<Option<usize>> = (0..power.ncols())
        .map(|k| Some(cfg.bin_frequency(k)).filter(|f| *f > 0.0).map(pitch_class))
        .collect();
    let mut out = Array2::zeros((power.nrows(), 12));
    for (t, frame) in power.rows().into_iter().enumerate() {
        let mut row = out.row_mut(t);
        for (p, class) in frame.iter().zip(&classes) {
            if let Some(c) = class {
                row[*c] += p;
            }
        }
        let max = row.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            row.mapv_inplace(|v| v / max);
        }
    }
    out
}

/// 12-dimensional chroma, frames × 12.
pub fn chroma(w: &Waveform, cfg: &StftConfig) -> Result<Array2<f64>, SpectralError> {
    Ok(chroma_from_power(&stft(w, cfg)?.power(), cfg))
}
