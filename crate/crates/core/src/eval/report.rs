use std::io::Write;

use serde::Serialize;

use super::{EvalError, NoteMeans, SampleComparison};
use crate::midi::{PianoRoll, NOTE_COUNT};

/// One row of the system-level metrics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemMetrics {
    #[serde(rename = "system")]
    pub system_id: String,
    #[serde(rename = "pitch")]
    pub pitch_ce: f64,
    #[serde(rename = "chroma")]
    pub chroma_mse: f64,
    #[serde(rename = "spec")]
    pub spec_mse: f64,
    #[serde(rename = "mos")]
    pub mos_mean: Option<f64>,
}

impl SystemMetrics {
    /// Averages per-sample distortions, in the order given.
    pub fn from_samples(system_id: &str, samples: &[SampleComparison], mos_mean: Option<f64>) -> Result<Self, EvalError> {
        if samples.is_empty() {
            return Err(EvalError::Empty("no samples for system"));
        }
        let n = samples.len() as f64;
        let mean = |f: fn(&SampleComparison) -> f64| samples.iter().map(f).sum::<f64>() / n;
        Ok(Self {
            system_id: system_id.to_string(),
            pitch_ce: mean(|s| s.pitch_ce),
            chroma_mse: mean(|s| s.chroma_mse),
            spec_mse: mean(|s| s.spec_mse),
            mos_mean,
        })
    }

    pub fn write_csv<W: Write>(rows: &[SystemMetrics], out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(rows: &[SystemMetrics]) -> String {
        serde_json::to_string_pretty(rows).expect("metrics always serialize")
    }
}

/// Per-note values; `support` counts samples containing the note.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoteRow {
    pub note: u8,
    pub mos: Option<f64>,
    pub pitch_ce: Option<f64>,
    pub spec_mse: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoteLevelReport {
    pub rows: Vec<NoteRow>,
}

/// Accumulates note-level distortions sample by sample.
///
/// Pitch cross-entropy is fanned out to the notes active in each frame. The
/// squared error of dimension `n` counts toward note `n` only for samples in
/// which that note is played.
#[derive(Debug, Clone)]
pub struct NoteLevelBuilder {
    pitch: NoteMeans,
    spec: NoteMeans,
    samples: Vec<usize>,
}

impl Default for NoteLevelBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl NoteLevelBuilder {
    pub fn new() -> Self {
        Self { pitch: NoteMeans::default(), spec: NoteMeans::default(), samples: vec![0; NOTE_COUNT] }
    }

    pub fn add_sample(&mut self, comparison: &SampleComparison, roll: &PianoRoll) -> Result<(), EvalError> {
        let pitch = super::note_level_pitch_distortion(&comparison.frame_ce, roll)?;
        self.pitch.merge(&pitch);
        for n in roll.present_notes() {
            let n = n as usize;
            self.samples[n] += 1;
            self.spec.add_total(n, comparison.spec_squared_error[n], comparison.spec_frames);
        }
        Ok(())
    }

    pub fn finish(&self, mos: Option<&NoteMeans>) -> NoteLevelReport {
        let rows = (0..NOTE_COUNT)
            .filter_map(|n| {
                let mos = mos.and_then(|m| m.mean(n));
                let row = NoteRow {
                    note: n as u8,
                    mos,
                    pitch_ce: self.pitch.mean(n),
                    spec_mse: self.spec.mean(n),
                    support: self.samples[n],
                };
                (row.support > 0 || row.mos.is_some()).then_some(row)
            })
            .collect();
        NoteLevelReport { rows }
    }
}

impl NoteLevelReport {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}
