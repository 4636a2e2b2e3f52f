use super::{feature_mse, note_level_squared_error, EvalError};
use crate::pitch::{frame_cross_entropy, pitch_posterior, PitchConfig};
use crate::spectral::{build_midi_filterbank, chroma, midi_spectrogram, MidiFilterbank, StftConfig, DEFAULT_FLOOR};
use crate::Waveform;

/// Analysis settings shared by every comparison in a run.
#[derive(Debug, Clone)]
pub struct FeatureSetup {
    pub spectrogram: StftConfig,
    pub filterbank: MidiFilterbank,
    pub chroma: StftConfig,
    pub pitch: PitchConfig,
    pub floor: f64,
}

impl FeatureSetup {
    pub fn new(spectrogram: StftConfig, chroma: StftConfig, pitch: PitchConfig, floor: f64) -> Result<Self, EvalError> {
        let filterbank = build_midi_filterbank(spectrogram.sample_rate, spectrogram.n_fft)?;
        Ok(Self { spectrogram, filterbank, chroma, pitch, floor })
    }

    /// 16384-point MIDI spectrogram, 2048-point chroma, default pitch grid.
    pub fn standard() -> Self {
        Self::new(
            StftConfig::default(),
            StftConfig { n_fft: 2048, ..StftConfig::default() },
            PitchConfig::default(),
            DEFAULT_FLOOR,
        )
        .expect("default configuration is valid")
    }
}

/// Distortions of one synthesized sample against its natural reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleComparison {
    pub pitch_ce: f64,
    pub chroma_mse: f64,
    pub spec_mse: f64,
    /// Pitch cross-entropy of every aligned frame.
    pub frame_ce: Vec<f64>,
    /// Per-dimension sums of squared MIDI-spectrogram error.
    pub spec_squared_error: Vec<f64>,
    pub spec_frames: usize,
}

/// Compares `synthesized` against the `natural` reference.
pub fn compare(natural: &Waveform, synthesized: &Waveform, setup: &FeatureSetup) -> Result<SampleComparison, EvalError> {
    let nat = midi_spectrogram(natural, &setup.spectrogram, &setup.filterbank, setup.floor)?;
    let syn = midi_spectrogram(synthesized, &setup.spectrogram, &setup.filterbank, setup.floor)?;
    let spec_mse = feature_mse(&nat.values, &syn.values)?;
    let (spec_squared_error, spec_frames) = note_level_squared_error(&nat.values, &syn.values)?;

    let chroma_mse = feature_mse(&chroma(natural, &setup.chroma)?, &chroma(synthesized, &setup.chroma)?)?;

    let frame_ce = frame_cross_entropy(&pitch_posterior(natural, &setup.pitch)?, &pitch_posterior(synthesized, &setup.pitch)?)?;
    let pitch_ce = if frame_ce.is_empty() { 0.0 } else { frame_ce.iter().sum::<f64>() / frame_ce.len() as f64 };

    Ok(SampleComparison { pitch_ce, chroma_mse, spec_mse, frame_ce, spec_squared_error, spec_frames })
}
