//! Frame-level pitch posteriors on a 360-bin, 20-cent grid and their
//! cross-entropy.

use std::sync::Arc;

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{aligned_len, LengthMismatch};
use crate::Waveform;

/// C1, the lowest grid frequency.
pub const C1_HZ: f64 = 32.703_195_662_574_83;
/// Frames quieter than this RMS get a uniform posterior.
pub const SILENCE_RMS: f64 = 1e-4;
/// Probability floor inside the cross-entropy logarithm.
pub const LOG_FLOOR: f64 = 1e-10;
/// Cumulative-mean-normalized difference below which a lag counts as periodic.
pub const DIP_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PitchError {
    #[error("invalid pitch configuration: {0}")]
    InvalidConfig(String),
    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    SampleRateMismatch { expected: u32, found: u32 },
    #[error("posteriors have {left} and {right} bins")]
    BinMismatch { left: usize, right: usize },
    #[error(transparent)]
    Length(#[from] LengthMismatch),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub sample_rate: u32,
    /// Centre frequency of bin 0.
    pub f_min: f64,
    pub bins: usize,
    pub cents_per_bin: f64,
    /// Analysis frame length in samples; half of it is the difference-function
    /// integration window, the other half the largest lag.
    pub window: usize,
    pub hop: usize,
    /// Standard deviation of the Gaussian blur across bins, in cents.
    pub smoothing_std: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            sample_rate: 24_000,
            f_min: C1_HZ,
            bins: 360,
            cents_per_bin: 20.0,
            window: 2048,
            hop: 288,
            smoothing_std: 25.0,
        }
    }
}

impl PitchConfig {
    pub fn validate(&self) -> Result<(), PitchError> {
        let bad = |m: String| Err(PitchError::InvalidConfig(m));
        if !(self.f_min > 0.0) || self.bins == 0 || !(self.cents_per_bin > 0.0) {
            return bad("grid must have positive f_min, bins and spacing".into());
        }
        if (self.bins as f64 * self.cents_per_bin - 7200.0).abs() > 1e-9 {
            return bad(format!("grid spans {} cents, expected 7200", self.bins as f64 * self.cents_per_bin));
        }
        if self.hop == 0 || self.window < 4 {
            return bad("window and hop must be positive".into());
        }
        if !(self.smoothing_std >= 0.0) {
            return bad("smoothing_std must be non-negative".into());
        }
        if (self.sample_rate as f64) < 2.0 * self.f_max() {
            return bad(format!("sample rate {} is below twice the grid maximum {:.1} Hz", self.sample_rate, self.f_max()));
        }
        if self.sample_rate as f64 / self.f_min >= (self.window / 2) as f64 - 2.0 {
            return bad("window too short for the lowest grid frequency".into());
        }
        Ok(())
    }

    pub fn bin_frequency(&self, bin: f64) -> f64 {
        self.f_min * 2f64.powf(bin * self.cents_per_bin / 1200.0)
    }

    /// Fractional bin of a frequency.
    pub fn frequency_bin(&self, hz: f64) -> f64 {
        1200.0 * (hz / self.f_min).log2() / self.cents_per_bin
    }

    pub fn f_max(&self) -> f64 {
        self.bin_frequency((self.bins - 1) as f64)
    }

    pub fn frame_count(&self, len: usize) -> usize {
        1 + len / self.hop
    }
}

/// Per-frame probability distributions over the pitch grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchPosterior {
    pub probs: Array2<f64>,
    pub config: PitchConfig,
}

/// One row of the argmax dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PitchEstimate {
    pub frame_index: usize,
    pub hz: f64,
    pub confidence: f64,
}

impl PitchPosterior {
    pub fn frames(&self) -> usize {
        self.probs.nrows()
    }

    pub fn argmax(&self) -> Vec<usize> {
        self.probs.rows().into_iter().map(argmax).collect()
    }

    /// Most probable frequency per frame with its probability.
    pub fn estimates(&self) -> Vec<PitchEstimate> {
        self.probs
            .rows()
            .into_iter()
            .enumerate()
            .map(|(frame_index, r)| {
                let b = argmax(r);
                PitchEstimate { frame_index, hz: self.config.bin_frequency(b as f64), confidence: r[b] }
            })
            .collect()
    }
}

fn argmax(row: ArrayView1<f64>) -> usize {
    row.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best }).0
}

/// Difference-function machinery for one frame length.
struct Yin {
    half: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    size: usize,
}

impl Yin {
    fn new(window: usize) -> Self {
        let size = (window + window / 2).next_power_of_two();
        let mut planner = RealFftPlanner::new();
        Self { half: window / 2, forward: planner.plan_fft_forward(size), inverse: planner.plan_fft_inverse(size), size }
    }

    /// Cumulative-mean-normalized difference for lags 0..=half.
    fn cmnd(&self, frame: &[f64]) -> Vec<f64> {
        let w = self.half;
        let max_lag = frame.len() - w;
        let mut a = vec![0.0; self.size];
        a[..w].copy_from_slice(&frame[..w]);
        let mut b = vec![0.0; self.size];
        b[..frame.len()].copy_from_slice(frame);
        let mut fa = self.forward.make_output_vec();
        let mut fb = self.forward.make_output_vec();
        self.forward.process(&mut a, &mut fa).expect("plan sized buffers");
        self.forward.process(&mut b, &mut fb).expect("plan sized buffers");
        let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
        prod[0].im = 0.0;
        if let Some(last) = prod.last_mut() {
            last.im = 0.0;
        }
        let mut corr = self.inverse.make_output_vec();
        self.inverse.process(&mut prod, &mut corr).expect("plan sized buffers");

        let mut prefix = vec![0.0; frame.len() + 1];
        for (i, x) in frame.iter().enumerate() {
            prefix[i + 1] = prefix[i] + x * x;
        }
        let e0 = prefix[w];
        let mut out = vec![1.0; max_lag + 1];
        let mut running = 0.0;
        for tau in 1..=max_lag {
            let r = corr[tau] / self.size as f64;
            let d = (e0 + prefix[tau + w] - prefix[tau] - 2.0 * r).max(0.0);
            running += d;
            out[tau] = if running > 0.0 { d * tau as f64 / running } else { 1.0 };
        }
        out
    }
}

/// Catmull-Rom interpolation of `v` at fractional index `x`.
fn catmull_rom(v: &[f64], x: f64) -> f64 {
    let i = x.floor() as isize;
    let t = x - i as f64;
    let at = |j: isize| v[j.clamp(0, v.len() as isize - 1) as usize];
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    0.5 * (2.0 * p1 + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t + (3.0 * (p1 - p2) + p3 - p0) * t * t * t)
}

/// Grid posterior of one frame, or `None` when nothing is salient.
fn frame_posterior(cmnd: &[f64], cfg: &PitchConfig, lags: &[f64], kernel: &[f64]) -> Option<Vec<f64>> {
    let sr = cfg.sample_rate as f64;
    let lo = ((sr / cfg.f_max()).floor() as usize).max(1);
    let hi = ((sr / cfg.f_min).ceil() as usize).min(cmnd.len() - 2);
    // shortest lag dipping below the threshold, descended to its local minimum
    let best = match (lo..=hi).find(|&t| cmnd[t] < DIP_THRESHOLD) {
        Some(mut t) => {
            while t < hi && cmnd[t + 1] < cmnd[t] {
                t += 1;
            }
            t
        }
        None => (lo..=hi).min_by(|&a, &b| cmnd[a].total_cmp(&cmnd[b]))?,
    } as f64;

    // lags much longer than the period are its subharmonics
    let salience: Vec<f64> = lags
        .iter()
        .map(|&tau| if tau <= 1.5 * best { (1.0 - catmull_rom(cmnd, tau)).max(0.0) } else { 0.0 })
        .collect();
    let radius = kernel.len() / 2;
    let n = salience.len();
    let mut blurred = vec![0.0; n];
    for (b, out) in blurred.iter_mut().enumerate() {
        for (j, k) in kernel.iter().enumerate() {
            if let Some(src) = (b + j).checked_sub(radius).filter(|&s| s < n) {
                *out += k * salience[src];
            }
        }
    }
    let total: f64 = blurred.iter().sum();
    (total > 0.0).then(|| blurred.into_iter().map(|v| v / total).collect())
}

fn gaussian_kernel(sigma_bins: f64) -> Vec<f64> {
    if sigma_bins <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma_bins).ceil() as isize;
    (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma_bins * sigma_bins)).exp()).collect()
}

/// YIN-style pitch posterior.
///
/// Frames of `window` samples are centred on multiples of `hop` (zero outside
/// the signal). Each grid bin's salience is `1 − d'(τ)` at its lag, restricted
/// to lags up to 1.5 times the detected period, then blurred and normalized.
pub fn pitch_posterior(w: &Waveform, cfg: &PitchConfig) -> Result<PitchPosterior, PitchError> {
    cfg.validate()?;
    if w.sample_rate != cfg.sample_rate {
        return Err(PitchError::SampleRateMismatch { expected: cfg.sample_rate, found: w.sample_rate });
    }
    let frames = cfg.frame_count(w.len());
    let yin = Yin::new(cfg.window);
    let lags: Vec<f64> = (0..cfg.bins).map(|b| cfg.sample_rate as f64 / cfg.bin_frequency(b as f64)).collect();
    let kernel = gaussian_kernel(cfg.smoothing_std / cfg.cents_per_bin);
    let uniform = 1.0 / cfg.bins as f64;
    let mut probs = Array2::from_elem((frames, cfg.bins), uniform);
    let half = cfg.window as isize / 2;
    let mut frame = vec![0.0; cfg.window];
    for t in 0..frames {
        let start = (t * cfg.hop) as isize - half;
        for (i, v) in frame.iter_mut().enumerate() {
            let j = start + i as isize;
            *v = if j >= 0 && (j as usize) < w.len() { w.samples[j as usize] } else { 0.0 };
        }
        let rms = (frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64).sqrt();
        if rms < SILENCE_RMS {
            continue;
        }
        if let Some(p) = frame_posterior(&yin.cmnd(&frame), cfg, &lags, &kernel) {
            probs.row_mut(t).iter_mut().zip(p).for_each(|(o, v)| *o = v);
        }
    }
    Ok(PitchPosterior { probs, config: *cfg })
}

/// `−Σ_b ref[b]·ln(max(test[b], 1e-10))` for each aligned frame.
pub fn frame_cross_entropy(reference: &PitchPosterior, test: &PitchPosterior) -> Result<Vec<f64>, PitchError> {
    let (rb, tb) = (reference.probs.ncols(), test.probs.ncols());
    if rb != tb {
        return Err(PitchError::BinMismatch { left: rb, right: tb });
    }
    let n = aligned_len(reference.frames(), test.frames())?;
    Ok((0..n)
        .map(|t| {
            reference
                .probs
                .row(t)
                .iter()
                .zip(test.probs.row(t))
                .map(|(r, q)| if *r > 0.0 { -r * q.max(LOG_FLOOR).ln() } else { 0.0 })
                .sum()
        })
        .collect())
}

/// Mean frame cross-entropy in nats; 0 for empty input.
pub fn pitch_cross_entropy(reference: &PitchPosterior, test: &PitchPosterior) -> Result<f64, PitchError> {
    let ce = frame_cross_entropy(reference, test)?;
    Ok(if ce.is_empty() { 0.0 } else { ce.iter().sum::<f64>() / ce.len() as f64 })
}
