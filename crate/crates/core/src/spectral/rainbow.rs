use std::f64::consts::PI;

use ndarray::Array2;

use super::{stft, SpectralError, StftConfig, DEFAULT_FLOOR};
use crate::io::{hsl_to_rgb, RgbImage};
use crate::Waveform;

/// Amplitude in dB and instantaneous frequency in Hz, both frames × bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Rainbowgram {
    pub amplitude_db: Array2<f64>,
    pub inst_freq_hz: Array2<f64>,
    pub config: StftConfig,
}

fn wrap(phase: f64) -> f64 {
    let w = (phase + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

impl Rainbowgram {
    /// Hue follows instantaneous frequency (0 Hz red to Nyquist violet),
    /// lightness follows amplitude over an 80 dB range. Low bins at the bottom.
    pub fn to_image(&self) -> RgbImage {
        const RANGE_DB: f64 = 80.0;
        let (frames, bins) = self.amplitude_db.dim();
        let nyquist = self.config.sample_rate as f64 / 2.0;
        let top = self.amplitude_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut img = RgbImage::new(frames, bins, [0, 0, 0]);
        for t in 0..frames {
            for k in 0..bins {
                let level = ((self.amplitude_db[[t, k]] - (top - RANGE_DB)) / RANGE_DB).clamp(0.0, 1.0);
                let hue = self.inst_freq_hz[[t, k]] / nyquist * 300.0;
                img.set(t, bins - 1 - k, hsl_to_rgb(hue, 1.0, 0.5 * level));
            }
        }
        img
    }
}

/// Amplitude `20·log10(max(|X|, 1e-5))` and phase-derived instantaneous
/// frequency, clamped to [0, sample_rate / 2]. The first frame has no
/// predecessor and reports bin frequencies.
pub fn rainbowgram(w: &Waveform, cfg: &StftConfig) -> Result<Rainbowgram, SpectralError> {
    if cfg.hop >= cfg.window_length {
        return Err(SpectralError::InvalidConfig("rainbow-gram needs hop < window length".into()));
    }
    let spec = stft(w, cfg)?;
    let data = spec.data();
    let (frames, bins) = data.dim();
    let sr = cfg.sample_rate as f64;
    let n_fft = cfg.n_fft as f64;
    let hop = cfg.hop as f64;
    let amplitude_db = data.mapv(|c| 20.0 * c.norm().max(DEFAULT_FLOOR).log10());
    let mut inst_freq_hz = Array2::zeros((frames, bins));
    for k in 0..bins {
        inst_freq_hz[[0, k]] = cfg.bin_frequency(k);
    }
    for t in 1..frames {
        for k in 0..bins {
            let expected = 2.0 * PI * hop * k as f64 / n_fft;
            let deviation = wrap(data[[t, k]].arg() - data[[t - 1, k]].arg() - expected);
            let f = (k as f64 / n_fft + deviation / (2.0 * PI * hop)) * sr;
            inst_freq_hz[[t, k]] = f.clamp(0.0, sr / 2.0);
        }
    }
    Ok(Rainbowgram { amplitude_db, inst_freq_hz, config: *cfg })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, n: usize) -> Waveform {
        Waveform::new((0..n).map(|i| (2.0 * PI * freq * i as f64 / 24000.0).sin()).collect(), 24000)
    }

    #[test]
    fn sine_inst_freq_near_peak() {
        let cfg = StftConfig::new(24000, 2048, 288, 4096).unwrap();
        let rg = rainbowgram(&tone(440.0, 24000), &cfg).unwrap();
        let peak = (440.0f64 * 4096.0 / 24000.0).round() as usize;
        let frames = rg.amplitude_db.nrows();
        for t in 8..frames - 8 {
            for k in peak - 1..=peak + 1 {
                assert!((rg.inst_freq_hz[[t, k]] - 440.0).abs() < 1.0, "t={t} k={k}");
            }
        }
        let col: Vec<f64> = (8..frames - 8).map(|t| rg.inst_freq_hz[[t, peak]]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let sd = (col.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
        assert!(sd < 0.5);
    }

    #[test]
    fn bin_centred_tone() {
        let cfg = StftConfig::new(24000, 2048, 288, 4096).unwrap();
        let k = 75;
        let rg = rainbowgram(&tone(cfg.bin_frequency(k), 24000), &cfg).unwrap();
        for t in 8..rg.amplitude_db.nrows() - 8 {
            assert!((rg.inst_freq_hz[[t, k]] - cfg.bin_frequency(k)).abs() < 1e-3);
        }
    }

    #[test]
    fn silence_and_range() {
        let cfg = StftConfig::new(24000, 512, 128, 512).unwrap();
        let rg = rainbowgram(&Waveform::silence(2000, 24000), &cfg).unwrap();
        assert!(rg.amplitude_db.iter().all(|&a| a == -100.0));
        let noisy = Waveform::new((0..4000).map(|i| ((i * 7919 % 997) as f64 / 498.5) - 1.0).collect(), 24000);
        let rg = rainbowgram(&noisy, &cfg).unwrap();
        assert!(rg.inst_freq_hz.iter().all(|&f| (0.0..=12000.0).contains(&f)));
        let img = rg.to_image();
        assert_eq!((img.width(), img.height()), (rg.amplitude_db.nrows(), 257));
    }

    #[test]
    fn wrap_range() {
        for x in [-7.0, -PI, -1.0, 0.0, PI, 4.0, 10.0] {
            let w = wrap(x);
            assert!(w > -PI && w <= PI);
            assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-12 || ((x - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-12);
        }
    }
}
