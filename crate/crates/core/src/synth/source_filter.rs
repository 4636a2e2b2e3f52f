use ndarray::{s, Array1, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{MagnitudeSpectrogram, SynthError};
use crate::midi::NOTE_COUNT;
use crate::spectral::{istft, stft, ComplexSpectrogram, MidiFilterbank, MidiSpectrogram, SpectralError, StftConfig};
use crate::Waveform;

pub const NNLS_ITERATIONS: usize = 200;
/// Ridge weight of the filterbank inversion.
pub const RIDGE: f64 = 1e-4;

/// Per-frame non-negative ridge least squares for the power spectrum `x`
/// whose filterbank energies match `10^values`; returns `sqrt(x)`.
///
/// Starts from the normalized back-projection of the energies and runs a
/// fixed number of projected-gradient steps. All-zero filter rows are ignored.
pub fn invert_filterbank(spec: &MidiSpectrogram, fb: &MidiFilterbank) -> Result<MagnitudeSpectrogram, SynthError> {
    if spec.values.ncols() != NOTE_COUNT {
        return Err(SynthError::DimensionMismatch { expected: NOTE_COUNT, found: spec.values.ncols() });
    }
    let cfg = StftConfig { sample_rate: fb.sample_rate(), n_fft: fb.n_fft(), ..spec.config };
    let bins = fb.bins();
    let w = fb.weights();
    let rows: Vec<(usize, std::ops::Range<usize>)> =
        (0..NOTE_COUNT).map(|m| (m, fb.row_support(m))).filter(|(_, r)| !r.is_empty()).collect();
    let row_sum: Vec<f64> = (0..NOTE_COUNT).map(|m| w.row(m).sum()).collect();
    let col_sum: Array1<f64> = w.sum_axis(ndarray::Axis(0));
    let max_row = row_sum.iter().copied().fold(0.0, f64::max);
    let max_col = col_sum.iter().copied().fold(0.0, f64::max);
    let step = 1.0 / (max_row * max_col + RIDGE);

    let mut out = Array2::zeros((spec.values.nrows(), bins));
    let mut x = vec![0.0; bins];
    let mut grad = vec![0.0; bins];
    for (t, frame) in spec.values.rows().into_iter().enumerate() {
        let e: Vec<f64> = frame.iter().map(|v| 10f64.powf(*v)).collect();
        x.iter_mut().for_each(|v| *v = 0.0);
        for (m, r) in &rows {
            let share = e[*m] / row_sum[*m];
            for k in r.clone() {
                x[k] += w[[*m, k]] * share;
            }
        }
        for (k, v) in x.iter_mut().enumerate() {
            *v = if col_sum[k] > 0.0 { *v / col_sum[k] } else { 0.0 };
        }
        for _ in 0..NNLS_ITERATIONS {
            grad.iter_mut().zip(&x).for_each(|(g, v)| *g = RIDGE * v);
            for (m, r) in &rows {
                let row = w.slice(s![*m, r.clone()]);
                let resid = row.iter().zip(&x[r.clone()]).map(|(a, b)| a * b).sum::<f64>() - e[*m];
                for (g, a) in grad[r.clone()].iter_mut().zip(row) {
                    *g += a * resid;
                }
            }
            x.iter_mut().zip(&grad).for_each(|(v, g)| *v = (*v - step * g).max(0.0));
        }
        out.row_mut(t).iter_mut().zip(&x).for_each(|(o, v)| *o = v.sqrt());
    }
    MagnitudeSpectrogram::new(out, cfg)
}

/// Noise-excited synthesis from a MIDI spectrogram.
///
/// Seeded unit-variance white noise is analysed with `cfg`; each frame's
/// magnitudes are normalized by the window energy and multiplied by the
/// envelope recovered with [`invert_filterbank`], keeping the noise phase.
/// Output has `(frames - 1) * hop` samples (at least one).
pub fn source_filter_synth(
    spec: &MidiSpectrogram,
    fb: &MidiFilterbank,
    cfg: &StftConfig,
    seed: u64,
) -> Result<Waveform, SynthError> {
    cfg.validate()?;
    if fb.n_fft() != cfg.n_fft || fb.sample_rate() != cfg.sample_rate {
        return Err(SpectralError::FilterbankMismatch {
            fb_rate: fb.sample_rate(),
            fb_n_fft: fb.n_fft(),
            rate: cfg.sample_rate,
            n_fft: cfg.n_fft,
        }
        .into());
    }
    let frames = spec.values.nrows();
    if frames == 0 {
        return Err(SynthError::DimensionMismatch { expected: 1, found: 0 });
    }
    let envelope = invert_filterbank(&MidiSpectrogram { config: *cfg, ..spec.clone() }, fb)?;

    let len = ((frames - 1) * cfg.hop).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
    let excitation = stft(&Waveform::new(noise, cfg.sample_rate), cfg)?;

    let gain = 1.0 / cfg.window.coefficients(cfg.window_length).iter().map(|w| w * w).sum::<f64>().sqrt();
    let mut shaped = Array2::<Complex64>::zeros(excitation.data().dim());
    let rows = frames.min(excitation.frames());
    for t in 0..rows {
        for (k, (o, n)) in shaped.row_mut(t).iter_mut().zip(excitation.data().row(t)).enumerate() {
            *o = n * gain * envelope.data()[[t, k]];
        }
    }
    let shaped = ComplexSpectrogram::new(shaped, *cfg)?;
    Ok(istft(&shaped, len))
}
