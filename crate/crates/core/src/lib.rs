//! Feature extraction, baseline synthesis and evaluation for MIDI-to-audio
//! piano synthesis.
//!
//! The crate is organised the way the data flows:
//!
//! - [`midi`]: Standard MIDI File parsing, piano rolls, segmentation and chunking.
//! - [`spectral`]: STFT, the 128-band MIDI-scale filterbank, MIDI spectrograms,
//!   chroma and rainbow-grams.
//! - [`synth`]: deterministic waveform generators (additive, noise-excited
//!   source-filter, Griffin-Lim).
//! - [`pitch`]: frame-level pitch posteriors on a 360-bin / 20-cent grid.
//! - [`eval`]: objective distortions, multi-resolution STFT loss and
//!   note-level analysis.
//! - [`stats`]: MOS aggregation, Mann-Whitney U and Holm-Bonferroni.
//! - [`io`]: WAV, binary feature matrices and PPM images.

pub mod align;
pub mod eval;
pub mod io;
pub mod midi;
pub mod pitch;
pub mod spectral;
pub mod stats;
pub mod synth;
mod waveform;

pub use waveform::Waveform;
