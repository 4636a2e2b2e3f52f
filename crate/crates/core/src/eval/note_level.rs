use std::collections::{BTreeMap, BTreeSet};

use ndarray::{s, Array2};

use super::{align_rows, EvalError};
use crate::align::aligned_len;
use crate::midi::{PianoRoll, NOTE_COUNT};
use crate::spectral::MidiSpectrogram;

/// Running per-note sums and observation counts.
#[derive(Debug, Clone, PartialEq)]
pub struct NoteMeans {
    sums: Vec<f64>,
    support: Vec<usize>,
}

impl Default for NoteMeans {
    fn default() -> Self {
        Self { sums: vec![0.0; NOTE_COUNT], support: vec![0; NOTE_COUNT] }
    }
}

impl NoteMeans {
    pub fn add(&mut self, note: usize, value: f64) {
        self.sums[note] += value;
        self.support[note] += 1;
    }

    /// Adds `count` observations whose values total `sum`.
    pub fn add_total(&mut self, note: usize, sum: f64, count: usize) {
        self.sums[note] += sum;
        self.support[note] += count;
    }

    pub fn merge(&mut self, other: &NoteMeans) {
        for n in 0..NOTE_COUNT {
            self.sums[n] += other.sums[n];
            self.support[n] += other.support[n];
        }
    }

    /// Mean for `note`, absent when it has no observations.
    pub fn mean(&self, note: usize) -> Option<f64> {
        (self.support[note] > 0).then(|| self.sums[note] / self.support[note] as f64)
    }

    pub fn support(&self, note: usize) -> usize {
        self.support[note]
    }

    pub fn means(&self) -> Vec<Option<f64>> {
        (0..NOTE_COUNT).map(|n| self.mean(n)).collect()
    }
}

/// Each rating counts toward every note present in its sample.
pub fn note_level_mos<S: AsRef<str>>(
    ratings: &[(S, f64)],
    presence: &BTreeMap<String, BTreeSet<u8>>,
) -> Result<NoteMeans, EvalError> {
    let mut out = NoteMeans::default();
    for (sample, score) in ratings {
        let notes = presence.get(sample.as_ref()).ok_or_else(|| EvalError::MissingPresence(sample.as_ref().to_string()))?;
        for &n in notes {
            out.add(n as usize, *score);
        }
    }
    Ok(out)
}

/// Per-column sums of squared differences and the aligned frame count.
pub fn note_level_squared_error(a: &Array2<f64>, b: &Array2<f64>) -> Result<(Vec<f64>, usize), EvalError> {
    let n = align_rows(a, b)?;
    let diff = &a.slice(s![..n, ..]) - &b.slice(s![..n, ..]);
    Ok((diff.mapv(|d| d * d).sum_axis(ndarray::Axis(0)).to_vec(), n))
}

/// Mean squared error of each MIDI-spectrogram dimension over frames.
pub fn note_level_spec_distortion(nat: &MidiSpectrogram, syn: &MidiSpectrogram) -> Result<Vec<f64>, EvalError> {
    let (sums, n) = note_level_squared_error(&nat.values, &syn.values)?;
    if n == 0 {
        return Err(EvalError::Empty("spectrogram"));
    }
    Ok(sums.into_iter().map(|s| s / n as f64).collect())
}

/// Assigns each frame's cross-entropy to every note sounding in that frame.
pub fn note_level_pitch_distortion(frame_ce: &[f64], roll: &PianoRoll) -> Result<NoteMeans, EvalError> {
    let n = aligned_len(frame_ce.len(), roll.valid_frames())?;
    let mut out = NoteMeans::default();
    for (t, ce) in frame_ce.iter().enumerate().take(n) {
        for note in roll.active_notes(t) {
            out.add(note as usize, *ce);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::FrameSpec;
    use crate::spectral::{StftConfig, DEFAULT_FLOOR};
    use proptest::prelude::*;

    fn presence(entries: &[(&str, &[u8])]) -> BTreeMap<String, BTreeSet<u8>> {
        entries.iter().map(|(k, v)| (k.to_string(), v.iter().copied().collect())).collect()
    }

    #[test]
    fn mos_fan_out() {
        let p = presence(&[("s1", &[60, 72]), ("s2", &[60])]);
        let m = note_level_mos(&[("s1", 4.0), ("s2", 2.0)], &p).unwrap();
        assert_eq!(m.mean(60), Some(3.0));
        assert_eq!(m.mean(72), Some(4.0));
        assert_eq!(m.support(60), 2);

        let m = note_level_mos(&[("s1", 5.0)], &presence(&[("s1", &[69])])).unwrap();
        assert_eq!(m.mean(69), Some(5.0));
        assert_eq!(m.means().iter().filter(|v| v.is_some()).count(), 1);

        let m = note_level_mos(&[("a", 3.0), ("a", 4.0), ("a", 5.0)], &presence(&[("a", &[60])])).unwrap();
        assert_eq!(m.mean(60), Some(4.0));

        assert!(matches!(
            note_level_mos(&[("zz", 3.0)], &presence(&[("a", &[60])])),
            Err(EvalError::MissingPresence(_))
        ));
    }

    fn spec(values: Array2<f64>) -> MidiSpectrogram {
        MidiSpectrogram { values, floor: DEFAULT_FLOOR, config: StftConfig::default() }
    }

    #[test]
    fn spec_distortion_examples() {
        let a = spec(Array2::from_shape_fn((10, 128), |(t, m)| (t * m) as f64 * 0.01));
        assert!(note_level_spec_distortion(&a, &a).unwrap().iter().all(|&v| v == 0.0));
        let mut b = a.clone();
        b.values.column_mut(69).mapv_inplace(|v| v + 1.0);
        let d = note_level_spec_distortion(&a, &b).unwrap();
        for (m, v) in d.iter().enumerate() {
            assert!((v - if m == 69 { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }

    fn roll_with(cols: &[(usize, std::ops::Range<usize>)], frames: usize) -> PianoRoll {
        let mut v = Array2::zeros((frames, 128));
        for (p, r) in cols {
            v.slice_mut(s![r.clone(), *p]).fill(0.8);
        }
        PianoRoll::new(v, FrameSpec::default(), frames).unwrap()
    }

    #[test]
    fn pitch_distortion_examples() {
        let r = roll_with(&[(60, 0..10)], 10);
        assert_eq!(note_level_pitch_distortion(&[0.5; 10], &r).unwrap().mean(60), Some(0.5));

        let r = roll_with(&[(60, 0..5), (64, 5..10)], 10);
        let ce: Vec<f64> = (0..10).map(|t| if t < 5 { 0.2 } else { 0.8 }).collect();
        let m = note_level_pitch_distortion(&ce, &r).unwrap();
        assert_eq!((m.mean(60), m.mean(64)), (Some(0.2), Some(0.8)));

        let r = roll_with(&[(60, 2..8), (67, 2..8)], 10);
        let ce: Vec<f64> = (0..10).map(|t| t as f64).collect();
        let m = note_level_pitch_distortion(&ce, &r).unwrap();
        assert_eq!(m.mean(60), Some(4.5));
        assert_eq!(m.mean(67), Some(4.5));
        assert_eq!(m.mean(61), None);

        assert!(note_level_pitch_distortion(&[0.0; 50], &roll_with(&[], 100)).is_err());
    }

    proptest! {
        #[test]
        fn mean_decomposition(seed in proptest::collection::vec(-3.0f64..3.0, 128 * 6), shift in proptest::collection::vec(-3.0f64..3.0, 128 * 6)) {
            let a = spec(Array2::from_shape_vec((6, 128), seed).unwrap());
            let b = spec(Array2::from_shape_vec((6, 128), shift).unwrap());
            let per_note = note_level_spec_distortion(&a, &b).unwrap();
            let mean = per_note.iter().sum::<f64>() / 128.0;
            prop_assert!((mean - crate::eval::feature_mse(&a.values, &b.values).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn single_sample_mos_is_its_mean(scores in proptest::collection::vec(1u8..=5, 1..20)) {
            let p = presence(&[("only", &[40, 41, 90])]);
            let ratings: Vec<(&str, f64)> = scores.iter().map(|&s| ("only", s as f64)).collect();
            let m = note_level_mos(&ratings, &p).unwrap();
            let mean = scores.iter().map(|&s| s as f64).sum::<f64>() / scores.len() as f64;
            for n in [40, 41, 90] {
                prop_assert!((m.mean(n).unwrap() - mean).abs() < 1e-12);
            }
        }
    }
}
