use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodic Hann window.
    #[default]
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos()).collect(),
            WindowKind::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub sample_rate: u32,
    pub window_length: usize,
    pub hop: usize,
    /// Transform size; frames are zero-padded from `window_length` to this.
    pub n_fft: usize,
    #[serde(default)]
    pub window: WindowKind,
}

impl Default for StftConfig {
    /// 2048-sample window zero-padded to 16384 points, 12 ms hop at 24 kHz.
    fn default() -> Self {
        Self { sample_rate: 24_000, window_length: 2048, hop: 288, n_fft: 16_384, window: WindowKind::Hann }
    }
}

impl StftConfig {
    pub fn new(sample_rate: u32, window_length: usize, hop: usize, n_fft: usize) -> Result<Self, SpectralError> {
        let cfg = Self { sample_rate, window_length, hop, n_fft, window: WindowKind::Hann };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_window(self, window: WindowKind) -> Self {
        Self { window, ..self }
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        let bad = |m: &str| Err(SpectralError::InvalidConfig(m.to_string()));
        if self.sample_rate == 0 {
            return bad("sample rate must be positive");
        }
        if self.window_length == 0 || self.hop == 0 {
            return bad("window length and hop must be positive");
        }
        if self.n_fft < self.window_length {
            return bad("n_fft must be at least the window length");
        }
        if self.hop > self.window_length {
            return bad("hop must not exceed the window length");
        }
        Ok(())
    }

    /// One-sided bin count, `n_fft / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate as f64 / self.n_fft as f64
    }

    /// Frames produced for a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        1 + len / self.hop
    }

    /// Reflect padding added before the first sample.
    pub fn left_pad(&self) -> usize {
        self.window_length / 2
    }

    /// Length of the padded signal spanned by `frames` frames.
    pub fn padded_len(&self, frames: usize) -> usize {
        frames.saturating_sub(1) * self.hop + self.window_length
    }
}

/// One-sided complex STFT, frames × (n_fft / 2 + 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    data: Array2<Complex64>,
    config: StftConfig,
}

impl ComplexSpectrogram {
    pub fn new(data: Array2<Complex64>, config: StftConfig) -> Result<Self, SpectralError> {
        config.validate()?;
        if data.ncols() != config.bins() {
            return Err(SpectralError::DimensionMismatch { expected: config.bins(), found: data.ncols() });
        }
        Ok(Self { data, config })
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn bins(&self) -> usize {
        self.data.ncols()
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.data.mapv(|c| c.norm())
    }

    pub fn power(&self) -> Array2<f64> {
        self.data.mapv(|c| c.norm_sqr())
    }

    pub fn phase(&self) -> Array2<f64> {
        self.data.mapv(|c| c.arg())
    }
}

/// Forward and inverse transforms for one configuration, with cached plans.
pub struct Stft {
    config: StftConfig,
    window: Vec<f64>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl Stft {
    pub fn new(config: StftConfig) -> Result<Self, SpectralError> {
        config.validate()?;
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Self {
            window: config.window.coefficients(config.window_length),
            forward: planner.plan_fft_forward(config.n_fft),
            inverse: planner.plan_fft_inverse(config.n_fft),
            config,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Reflect-pads `signal` by half a window on each side.
    pub fn pad(&self, signal: &[f64]) -> Vec<f64> {
        let left = self.config.left_pad();
        let right = self.config.window_length - left;
        let n = signal.len() as isize;
        let reflect = |i: isize| -> f64 {
            if n == 1 {
                return signal[0];
            }
            let period = 2 * (n - 1);
            let j = i.rem_euclid(period);
            signal[(if j < n { j } else { period - j }) as usize]
        };
        (-(left as isize)..n + right as isize).map(reflect).collect()
    }

    /// Windowed frame `t` of an already padded signal, zero-filled to n_fft.
    pub fn windowed_frame(&self, padded: &[f64], t: usize) -> Vec<f64> {
        let start = t * self.config.hop;
        let mut frame = vec![0.0; self.config.n_fft];
        for (i, w) in self.window.iter().enumerate() {
            frame[i] = padded.get(start + i).copied().unwrap_or(0.0) * w;
        }
        frame
    }

    /// Transforms frames of a padded signal without further padding.
    pub fn analyze_padded(&self, padded: &[f64], frames: usize) -> Array2<Complex64> {
        let bins = self.config.bins();
        let mut out = Array2::zeros((frames, bins));
        let mut spectrum = self.forward.make_output_vec();
        let mut scratch = self.forward.make_scratch_vec();
        for t in 0..frames {
            let mut frame = self.windowed_frame(padded, t);
            self.forward
                .process_with_scratch(&mut frame, &mut spectrum, &mut scratch)
                .expect("buffer sizes come from the plan");
            out.row_mut(t).iter_mut().zip(&spectrum).for_each(|(o, s)| *o = *s);
        }
        out
    }

    pub fn analyze(&self, signal: &[f64]) -> Result<ComplexSpectrogram, SpectralError> {
        if signal.is_empty() {
            return Err(SpectralError::EmptyWaveform);
        }
        let frames = self.config.frame_count(signal.len());
        let data = self.analyze_padded(&self.pad(signal), frames);
        Ok(ComplexSpectrogram { data, config: self.config })
    }

    /// Least-squares inverse onto the padded time axis.
    ///
    /// Overlap-adds windowed inverse frames and divides by the summed squared
    /// window; samples no window covers are zero. This is the pseudo-inverse
    /// of [`Stft::analyze_padded`].
    pub fn synthesize_padded(&self, data: &Array2<Complex64>) -> Vec<f64> {
        let frames = data.nrows();
        let n_fft = self.config.n_fft;
        let len = self.config.padded_len(frames);
        let mut out = vec![0.0; len];
        let mut norm = vec![0.0; len];
        let mut spectrum = self.inverse.make_input_vec();
        let mut frame = self.inverse.make_output_vec();
        let mut scratch = self.inverse.make_scratch_vec();
        for t in 0..frames {
            spectrum.iter_mut().zip(data.row(t)).for_each(|(s, d)| *s = *d);
            // the real transform has no imaginary part at DC or Nyquist
            spectrum[0].im = 0.0;
            if n_fft % 2 == 0 {
                spectrum[n_fft / 2].im = 0.0;
            }
            self.inverse
                .process_with_scratch(&mut spectrum, &mut frame, &mut scratch)
                .expect("buffer sizes come from the plan");
            let start = t * self.config.hop;
            for (i, w) in self.window.iter().enumerate() {
                out[start + i] += frame[i] / n_fft as f64 * w;
                norm[start + i] += w * w;
            }
        }
        for (o, n) in out.iter_mut().zip(&norm) {
            *o = if *n > 1e-10 { *o / n } else { 0.0 };
        }
        out
    }

    /// Inverse STFT trimmed to `length` samples of the original time axis.
    pub fn synthesize(&self, spec: &ComplexSpectrogram, length: usize) -> Vec<f64> {
        let padded = self.synthesize_padded(&spec.data);
        let left = self.config.left_pad();
        (0..length).map(|i| padded.get(left + i).copied().unwrap_or(0.0)).collect()
    }
}

/// Centered STFT with reflect-padded ends; `1 + len / hop` frames.
pub fn stft(wave: &Waveform, cfg: &StftConfig) -> Result<ComplexSpectrogram, SpectralError> {
    if wave.sample_rate != cfg.sample_rate {
        return Err(SpectralError::SampleRateMismatch { expected: cfg.sample_rate, found: wave.sample_rate });
    }
    Stft::new(*cfg)?.analyze(&wave.samples)
}

/// Inverse of [`stft`], returning `length` samples.
pub fn istft(spec: &ComplexSpectrogram, length: usize) -> Waveform {
    let engine = Stft::new(spec.config).expect("spectrogram config validated on construction");
    Waveform::new(engine.synthesize(spec, length), spec.config.sample_rate)
}
