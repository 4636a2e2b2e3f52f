use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::{MidiError, NoteSequence, NOTE_COUNT};

/// Frame grid shared by piano rolls and frame-level features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub sample_rate: u32,
    /// Samples per frame.
    pub hop: usize,
    pub frames_per_chunk: usize,
}

impl Default for FrameSpec {
    /// 12 ms frames at 24 kHz; 800-frame chunks are 9.6 s.
    fn default() -> Self {
        Self { sample_rate: 24_000, hop: 288, frames_per_chunk: 800 }
    }
}

impl FrameSpec {
    pub fn new(sample_rate: u32, hop: usize, frames_per_chunk: usize) -> Result<Self, MidiError> {
        let spec = Self { sample_rate, hop, frames_per_chunk };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), MidiError> {
        if self.sample_rate == 0 {
            return Err(MidiError::InvalidFrameSpec("sample rate must be positive"));
        }
        if self.hop == 0 {
            return Err(MidiError::InvalidFrameSpec("hop must be at least one sample"));
        }
        if self.frames_per_chunk == 0 {
            return Err(MidiError::InvalidFrameSpec("chunk length must be positive"));
        }
        Ok(())
    }

    /// Frame period in seconds.
    pub fn frame_period(&self) -> f64 {
        self.hop as f64 / self.sample_rate as f64
    }

    /// First frame touched by time `t`.
    pub fn floor_frame(&self, t: f64) -> usize {
        snap(t / self.frame_period()).floor().max(0.0) as usize
    }

    /// One past the last frame touched by an interval ending at `t`.
    pub fn ceil_frame(&self, t: f64) -> usize {
        snap(t / self.frame_period()).ceil().max(0.0) as usize
    }
}

/// Rounds values within 1e-9 of an integer, so that times lying exactly on a
/// frame boundary are not pushed across it by floating-point error.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x
    }
}

/// Frames × 128 matrix of velocities normalized to [0, 1].
///
/// Rows at and beyond `valid_frames` are padding and are all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PianoRoll {
    values: Array2<f64>,
    frame_spec: FrameSpec,
    valid_frames: usize,
}

impl PianoRoll {
    pub fn new(values: Array2<f64>, frame_spec: FrameSpec, valid_frames: usize) -> Result<Self, MidiError> {
        frame_spec.validate()?;
        if values.ncols() != NOTE_COUNT {
            return Err(MidiError::InvalidRoll("piano roll must have 128 columns"));
        }
        if valid_frames > values.nrows() {
            return Err(MidiError::InvalidRoll("valid_frames exceeds frame count"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(MidiError::InvalidRoll("entries must lie in [0, 1]"));
        }
        if values.slice(s![valid_frames.., ..]).iter().any(|&v| v != 0.0) {
            return Err(MidiError::InvalidRoll("padding frames must be zero"));
        }
        Ok(Self { values, frame_spec, valid_frames })
    }

    pub fn zeros(frames: usize, frame_spec: FrameSpec) -> Self {
        Self { values: Array2::zeros((frames, NOTE_COUNT)), frame_spec, valid_frames: frames }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn frame_spec(&self) -> FrameSpec {
        self.frame_spec
    }

    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn valid_frames(&self) -> usize {
        self.valid_frames
    }

    /// Pitches with a nonzero value in `frame`.
    pub fn active_notes(&self, frame: usize) -> impl Iterator<Item = u8> + '_ {
        self.values
            .row(frame)
            .into_iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(p, _)| p as u8)
    }

    /// Pitches active anywhere in the valid region.
    pub fn present_notes(&self) -> std::collections::BTreeSet<u8> {
        (0..self.valid_frames).flat_map(|t| self.active_notes(t)).collect()
    }
}

/// Renders notes onto the frame grid.
///
/// A note occupies frames `floor(onset / Tf)` through `ceil(offset / Tf) - 1`
/// with value `velocity / 127`. Notes are drawn in onset order, so a later
/// onset overwrites an earlier note of the same pitch. With `sustain`, an
/// offset that falls inside a pedal-down interval is moved to the pedal release.
pub fn to_piano_roll(seq: &NoteSequence, spec: FrameSpec, sustain: bool) -> PianoRoll {
    let offset_of = |offset: f64| -> f64 {
        if !sustain {
            return offset;
        }
        seq.sustain()
            .iter()
            .find(|&&(down, up)| down <= offset && offset < up)
            .map_or(offset, |&(_, up)| up)
    };

    let mut frames = spec.ceil_frame(seq.duration());
    let spans: Vec<(usize, usize, usize, f64)> = seq
        .notes()
        .iter()
        .map(|n| {
            let start = spec.floor_frame(n.onset);
            let end = spec.ceil_frame(offset_of(n.offset)).max(start + 1);
            frames = frames.max(end);
            (n.pitch as usize, start, end, f64::from(n.velocity) / 127.0)
        })
        .collect();

    let mut values = Array2::zeros((frames, NOTE_COUNT));
    for (pitch, start, end, v) in spans {
        values.slice_mut(s![start..end, pitch]).fill(v);
    }
    PianoRoll { values, frame_spec: spec, valid_frames: frames }
}

/// Splits the valid part of a roll into consecutive `frames_per_chunk`-frame
/// chunks. The final chunk is zero-padded and records its unpadded length.
pub fn chunk_frames(roll: &PianoRoll) -> Vec<PianoRoll> {
    let size = roll.frame_spec.frames_per_chunk;
    (0..roll.valid_frames)
        .step_by(size)
        .map(|start| {
            let end = (start + size).min(roll.valid_frames);
            let mut values = Array2::zeros((size, NOTE_COUNT));
            values.slice_mut(s![..end - start, ..]).assign(&roll.values.slice(s![start..end, ..]));
            PianoRoll { values, frame_spec: roll.frame_spec, valid_frames: end - start }
        })
        .collect()
}
