use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::spectral::{stft, StftConfig, WindowKind};
use crate::Waveform;

/// Magnitude floor inside the log term.
pub const LOG_MAGNITUDE_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub n_fft: usize,
    pub hop: usize,
    pub window: usize,
}

pub const DEFAULT_RESOLUTIONS: [Resolution; 3] = [
    Resolution { n_fft: 512, hop: 128, window: 512 },
    Resolution { n_fft: 1024, hop: 256, window: 1024 },
    Resolution { n_fft: 2048, hop: 512, window: 2048 },
];

/// Mean over resolutions of spectral convergence plus mean absolute log
/// magnitude difference. `y` is the reference; both signals are truncated to
/// the shorter length.
pub fn multires_stft_loss(x: &Waveform, y: &Waveform, resolutions: &[Resolution]) -> Result<f64, EvalError> {
    let n = x.len().min(y.len());
    if n == 0 {
        return Err(EvalError::Empty("waveform"));
    }
    if resolutions.is_empty() {
        return Err(EvalError::Empty("resolution list"));
    }
    let x = Waveform::new(x.samples[..n].to_vec(), x.sample_rate);
    let y = Waveform::new(y.samples[..n].to_vec(), x.sample_rate);
    let mut total = 0.0;
    for r in resolutions {
        let cfg = StftConfig::new(x.sample_rate, r.window, r.hop, r.n_fft)?.with_window(WindowKind::Hann);
        let mx = stft(&x, &cfg)?.magnitude();
        let my = stft(&y, &cfg)?.magnitude();
        let (mut diff, mut reference, mut log_sum) = (0.0, 0.0, 0.0);
        for (a, b) in mx.iter().zip(&my) {
            diff += (b - a).powi(2);
            reference += b * b;
            log_sum += (b.max(LOG_MAGNITUDE_FLOOR).ln() - a.max(LOG_MAGNITUDE_FLOOR).ln()).abs();
        }
        let convergence = if reference > 0.0 {
            (diff / reference).sqrt()
        } else if diff > 0.0 {
            1.0
        } else {
            0.0
        };
        total += convergence + log_sum / mx.len() as f64;
    }
    Ok(total / resolutions.len() as f64)
}
