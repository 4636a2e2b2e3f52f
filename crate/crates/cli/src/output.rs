//! Loading inputs and writing outputs with exit-code-aware errors.

use std::path::Path;

use m2a_core::io::{load_matrix, read_wav, save_matrix};
use m2a_core::midi::{parse_midi, FrameSpec, NoteSequence, PianoRoll, NOTE_COUNT};
use m2a_core::Waveform;
use ndarray::Array2;

use crate::error::{CmdResult, Context, Failure};

pub fn ensure_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).internal(format!("cannot create {}", dir.display()))
}

fn ensure_parent(path: &Path) -> CmdResult {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

pub fn write_bytes(path: &Path, bytes: impl AsRef<[u8]>) -> CmdResult {
    ensure_parent(path)?;
    std::fs::write(path, bytes).internal(format!("cannot write {}", path.display()))
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> CmdResult {
    ensure_parent(path)?;
    save_matrix(path, m).internal(format!("cannot write {}", path.display()))
}

/// Serializes `rows` as CSV with a header from the row type.
pub fn csv_bytes<T: serde::Serialize>(rows: &[T]) -> CmdResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).internal("cannot encode CSV")?;
    }
    w.into_inner().internal("cannot encode CSV")
}

pub fn load_midi(path: &Path) -> CmdResult<NoteSequence> {
    let bytes = std::fs::read(path).input(format!("cannot read {}", path.display()))?;
    parse_midi(&bytes).input(format!("invalid MIDI file {}", path.display()))
}

/// Reads a WAV file recorded at `sample_rate`.
pub fn load_wav(path: &Path, sample_rate: u32) -> CmdResult<Waveform> {
    let w = read_wav(path).input(format!("cannot read {}", path.display()))?;
    if w.sample_rate != sample_rate {
        return Err(Failure::Input(format!(
            "{} is sampled at {} Hz, expected {sample_rate} Hz",
            path.display(),
            w.sample_rate
        )));
    }
    if w.is_empty() {
        return Err(Failure::Input(format!("{} has no samples", path.display())));
    }
    Ok(w)
}

pub fn load_feature(path: &Path) -> CmdResult<Array2<f64>> {
    load_matrix(path).input(format!("cannot read {}", path.display()))
}

pub fn load_roll(path: &Path, spec: FrameSpec) -> CmdResult<PianoRoll> {
    let values = load_feature(path)?;
    if values.ncols() != NOTE_COUNT {
        return Err(Failure::Input(format!("{} has {} columns, expected {NOTE_COUNT}", path.display(), values.ncols())));
    }
    let frames = values.nrows();
    PianoRoll::new(values, spec, frames).input(format!("invalid piano roll {}", path.display()))
}

/// File-name-safe version of an identifier.
pub fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}
