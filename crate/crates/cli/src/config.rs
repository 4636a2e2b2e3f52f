//! Run configuration: a TOML file whose values command-line flags override.

use std::path::Path;

use m2a_core::midi::FrameSpec;
use m2a_core::pitch::{PitchConfig, C1_HZ};
use m2a_core::spectral::{StftConfig, DEFAULT_FLOOR};
use m2a_core::stats::ObservationUnit;
use m2a_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CmdResult, Context, Failure};

/// FFT sizes accepted for the MIDI spectrogram.
pub const SUPPORTED_N_FFT: [usize; 2] = [4096, 16_384];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sample_rate: u32,
    /// Frame hop shared by piano rolls and every frame-level feature.
    pub hop: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub roll: RollSection,
    pub segment: SegmentSection,
    pub spectrogram: SpectrogramSection,
    pub chroma: WindowSection,
    pub rainbow: WindowSection,
    pub pitch: PitchSection,
    pub synth: SynthSection,
    pub stats: StatsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RollSection {
    pub frames_per_chunk: usize,
    pub sustain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentSection {
    pub min_pause: f64,
    pub min_len: f64,
    pub max_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrogramSection {
    pub window_length: usize,
    pub n_fft: usize,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub window_length: usize,
    pub n_fft: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchSection {
    pub f_min: f64,
    pub bins: usize,
    pub cents_per_bin: f64,
    pub window: usize,
    pub smoothing_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub harmonics: usize,
    pub rolloff_exponent: f64,
    pub attack: f64,
    pub release: f64,
    pub griffin_lim_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub alpha: f64,
    pub unit: Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    Rating,
    SampleMean,
}

impl From<Unit> for ObservationUnit {
    fn from(u: Unit) -> Self {
        match u {
            Unit::Rating => ObservationUnit::Rating,
            Unit::SampleMean => ObservationUnit::SampleMean,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sample_rate: 24_000,
            hop: 288,
            seed: 0,
            threads: 0,
            roll: RollSection::default(),
            segment: SegmentSection::default(),
            spectrogram: SpectrogramSection::default(),
            chroma: WindowSection::default(),
            rainbow: WindowSection::default(),
            pitch: PitchSection::default(),
            synth: SynthSection::default(),
            stats: StatsSection::default(),
        }
    }
}

impl Default for RollSection {
    fn default() -> Self {
        Self { frames_per_chunk: 800, sustain: true }
    }
}

impl Default for SegmentSection {
    fn default() -> Self {
        Self { min_pause: 0.5, min_len: 10.0, max_len: 30.0 }
    }
}

impl Default for SpectrogramSection {
    fn default() -> Self {
        Self { window_length: 2048, n_fft: 16_384, floor: DEFAULT_FLOOR }
    }
}

impl Default for WindowSection {
    fn default() -> Self {
        Self { window_length: 2048, n_fft: 2048 }
    }
}

impl Default for PitchSection {
    fn default() -> Self {
        Self { f_min: C1_HZ, bins: 360, cents_per_bin: 20.0, window: 2048, smoothing_std: 25.0 }
    }
}

impl Default for SynthSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        Self {
            harmonics: s.harmonics,
            rolloff_exponent: s.rolloff_exponent,
            attack: s.attack,
            release: s.release,
            griffin_lim_iterations: 32,
        }
    }
}

impl Default for StatsSection {
    fn default() -> Self {
        Self { alpha: 0.05, unit: Unit::Rating }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path).input(format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).input(format!("invalid config {}", path.display()))
    }

    pub fn frame_spec(&self) -> FrameSpec {
        FrameSpec { sample_rate: self.sample_rate, hop: self.hop, frames_per_chunk: self.roll.frames_per_chunk }
    }

    pub fn spectrogram_stft(&self) -> StftConfig {
        StftConfig {
            sample_rate: self.sample_rate,
            window_length: self.spectrogram.window_length,
            hop: self.hop,
            n_fft: self.spectrogram.n_fft,
            ..StftConfig::default()
        }
    }

    pub fn chroma_stft(&self) -> StftConfig {
        StftConfig {
            window_length: self.chroma.window_length,
            n_fft: self.chroma.n_fft,
            ..self.spectrogram_stft()
        }
    }

    pub fn rainbow_stft(&self) -> StftConfig {
        StftConfig {
            window_length: self.rainbow.window_length,
            n_fft: self.rainbow.n_fft,
            ..self.spectrogram_stft()
        }
    }

    pub fn pitch_config(&self) -> PitchConfig {
        PitchConfig {
            sample_rate: self.sample_rate,
            f_min: self.pitch.f_min,
            bins: self.pitch.bins,
            cents_per_bin: self.pitch.cents_per_bin,
            window: self.pitch.window,
            hop: self.hop,
            smoothing_std: self.pitch.smoothing_std,
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            sample_rate: self.sample_rate,
            harmonics: self.synth.harmonics,
            rolloff_exponent: self.synth.rolloff_exponent,
            attack: self.synth.attack,
            release: self.synth.release,
        }
    }

    /// Checks every parameter, so that no file is touched with a bad config.
    pub fn validate(&self) -> CmdResult {
        if !SUPPORTED_N_FFT.contains(&self.spectrogram.n_fft) {
            return Err(Failure::Input(format!(
                "spectrogram n_fft must be one of {SUPPORTED_N_FFT:?}, got {}",
                self.spectrogram.n_fft
            )));
        }
        self.frame_spec().validate().input("invalid frame settings")?;
        self.spectrogram_stft().validate().input("invalid spectrogram settings")?;
        self.chroma_stft().validate().input("invalid chroma settings")?;
        self.rainbow_stft().validate().input("invalid rainbow settings")?;
        if self.rainbow.window_length <= self.hop {
            return Err(Failure::Input("rainbow window must be longer than the hop".into()));
        }
        if !(self.spectrogram.floor > 0.0) {
            return Err(Failure::Input("spectrogram floor must be positive".into()));
        }
        self.pitch_config().validate().input("invalid pitch settings")?;
        self.synth_config().validate().input("invalid synth settings")?;
        let s = &self.segment;
        if !(s.min_pause > 0.0 && s.min_len < s.max_len && s.max_len > 0.0) {
            return Err(Failure::Input("segment needs min_pause > 0 and min_len < max_len".into()));
        }
        if !(self.stats.alpha > 0.0 && self.stats.alpha < 1.0) {
            return Err(Failure::Input(format!("alpha must lie in (0, 1), got {}", self.stats.alpha)));
        }
        Ok(())
    }
}
