//! STFT, the MIDI-scale filterbank and the features built on them.

mod features;
mod filterbank;
mod rainbow;
mod stft;

use thiserror::Error;

pub use features::{chroma, chroma_from_power, midi_spectrogram, MidiSpectrogram, DEFAULT_FLOOR};
pub use filterbank::{build_midi_filterbank, midi_note_frequency, zero_filter_indices, MidiFilterbank};
pub use rainbow::{rainbowgram, Rainbowgram};
pub use stft::{istft, stft, ComplexSpectrogram, Stft, StftConfig, WindowKind};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectralError {
    #[error("waveform is empty")]
    EmptyWaveform,
    #[error("invalid STFT configuration: {0}")]
    InvalidConfig(String),
    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    SampleRateMismatch { expected: u32, found: u32 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("filterbank was built for {fb_rate} Hz / {fb_n_fft} points, STFT uses {rate} Hz / {n_fft} points")]
    FilterbankMismatch { fb_rate: u32, fb_n_fft: usize, rate: u32, n_fft: usize },
    #[error("invalid filterbank: {0}")]
    InvalidFilterbank(String),
}
