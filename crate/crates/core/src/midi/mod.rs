//! Symbolic input: MIDI notes, piano rolls and their segmentation.

mod roll;
mod segment;
mod smf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use roll::{chunk_frames, to_piano_roll, FrameSpec, PianoRoll};
pub use segment::{segment_by_pauses, Segment};
pub use smf::{parse_midi, write_smf};

/// Number of MIDI notes, and so piano-roll dimensions.
pub const NOTE_COUNT: usize = 128;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MidiError {
    #[error("malformed header chunk: {0}")]
    BadHeader(&'static str),
    #[error("SMF format {0} is not supported")]
    UnsupportedFormat(u16),
    #[error("SMPTE time division is not supported")]
    SmpteTiming,
    #[error("track {track} is truncated")]
    TruncatedTrack { track: usize },
    #[error("malformed event in track {track} at byte {offset}")]
    MalformedEvent { track: usize, offset: usize },
    #[error("invalid note: {0}")]
    InvalidNote(String),
    #[error("invalid frame spec: {0}")]
    InvalidFrameSpec(&'static str),
    #[error("invalid segmentation parameters: {0}")]
    InvalidSegmentation(&'static str),
    #[error("invalid piano roll: {0}")]
    InvalidRoll(&'static str),
}

/// A sounding note with times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteEvent {
    pub pitch: u8,
    pub onset: f64,
    pub offset: f64,
    pub velocity: u8,
}

impl NoteEvent {
    pub fn new(pitch: u8, onset: f64, offset: f64, velocity: u8) -> Result<Self, MidiError> {
        let note = Self { pitch, onset, offset, velocity };
        note.validate()?;
        Ok(note)
    }

    fn validate(&self) -> Result<(), MidiError> {
        if self.pitch > 127 {
            return Err(MidiError::InvalidNote(format!("pitch {} > 127", self.pitch)));
        }
        if !(1..=127).contains(&self.velocity) {
            return Err(MidiError::InvalidNote(format!("velocity {} outside 1..=127", self.velocity)));
        }
        if !(self.onset.is_finite() && self.offset.is_finite()) || self.onset < 0.0 || self.offset <= self.onset {
            return Err(MidiError::InvalidNote(format!(
                "need 0 <= onset < offset, got {}..{}",
                self.onset, self.offset
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }

    fn sort_key(a: &Self, b: &Self) -> std::cmp::Ordering {
        a.onset
            .total_cmp(&b.onset)
            .then(a.pitch.cmp(&b.pitch))
            .then(a.offset.total_cmp(&b.offset))
            .then(a.velocity.cmp(&b.velocity))
    }
}

/// Notes of a performance, sorted by onset (ties by pitch).
///
/// Also carries sustain-pedal intervals (controller 64 held at or above 64)
/// and the number of note-ons that were still open at the end of their track.
#[derive(Debug, Clone, PartialEq)]
pub struct NoteSequence {
    notes: Vec<NoteEvent>,
    duration: f64,
    ticks_per_quarter: u16,
    sustain: Vec<(f64, f64)>,
    unmatched_note_ons: usize,
}

impl NoteSequence {
    /// Builds a sequence; `duration` is raised to the last offset if shorter.
    pub fn new(mut notes: Vec<NoteEvent>, duration: f64, ticks_per_quarter: u16) -> Result<Self, MidiError> {
        for n in &notes {
            n.validate()?;
        }
        notes.sort_by(NoteEvent::sort_key);
        let last = notes.iter().map(|n| n.offset).fold(0.0, f64::max);
        Ok(Self {
            notes,
            duration: duration.max(last),
            ticks_per_quarter,
            sustain: Vec::new(),
            unmatched_note_ons: 0,
        })
    }

    pub fn empty(duration: f64) -> Self {
        Self::new(Vec::new(), duration, 480).expect("no notes to validate")
    }

    /// Attaches pedal-down intervals; overlapping intervals are merged.
    pub fn with_sustain(mut self, mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.retain(|(a, b)| b > a);
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        if let Some(&(_, end)) = merged.last() {
            self.duration = self.duration.max(end);
        }
        self.sustain = merged;
        self
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn ticks_per_quarter(&self) -> u16 {
        self.ticks_per_quarter
    }

    pub fn sustain(&self) -> &[(f64, f64)] {
        &self.sustain
    }

    /// Note-ons closed at end of track because no matching note-off was found.
    pub fn unmatched_note_ons(&self) -> usize {
        self.unmatched_note_ons
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    /// Distinct pitches that occur in the sequence.
    pub fn pitches(&self) -> std::collections::BTreeSet<u8> {
        self.notes.iter().map(|n| n.pitch).collect()
    }

    /// JSON array of `{pitch, onset, offset, velocity}` objects.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.notes).expect("notes always serialize")
    }

    pub fn from_json(json: &str) -> Result<Self, MidiError> {
        let notes: Vec<NoteEvent> =
            serde_json::from_str(json).map_err(|e| MidiError::InvalidNote(e.to_string()))?;
        Self::new(notes, 0.0, 480)
    }
}
