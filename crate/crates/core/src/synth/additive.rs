use std::f64::consts::PI;

use super::{SynthConfig, SynthError};
use crate::midi::PianoRoll;
use crate::spectral::midi_note_frequency;
use crate::Waveform;

/// A note recovered from the roll, in samples.
struct Strike {
    pitch: usize,
    start: usize,
    end: usize,
    velocity: f64,
}

/// Runs of constant non-zero value per pitch; a change of value is a new strike.
fn strikes(roll: &PianoRoll) -> Vec<Strike> {
    let hop = roll.frame_spec().hop;
    let values = roll.values();
    let mut out = Vec::new();
    for pitch in 0..values.ncols() {
        let mut open: Option<(usize, f64)> = None;
        for t in 0..=roll.valid_frames() {
            let v = if t < roll.valid_frames() { values[[t, pitch]] } else { 0.0 };
            match open {
                Some((_, cur)) if cur == v => {}
                _ => {
                    if let Some((start, velocity)) = open.take() {
                        out.push(Strike { pitch, start: start * hop, end: t * hop, velocity });
                    }
                    if v > 0.0 {
                        open = Some((t, v));
                    }
                }
            }
        }
    }
    out
}

/// Sums decaying harmonic tones for every note in the roll.
///
/// Each strike restarts its phase at `2π·frac(pitch·0.618034)`. The output
/// covers the valid frames and is scaled to a 0.9 peak only if it would clip.
pub fn additive_synth(roll: &PianoRoll, cfg: &SynthConfig) -> Result<crate::Waveform, SynthError> {
    cfg.validate()?;
    let spec = roll.frame_spec();
    if spec.sample_rate != cfg.sample_rate {
        return Err(SynthError::InvalidConfig("roll and synthesizer sample rates differ"));
    }
    let sr = cfg.sample_rate as f64;
    let nyquist = sr / 2.0;
    let len = roll.valid_frames() * spec.hop;
    let mut out = vec![0.0; len];
    let attack = cfg.attack * sr;
    // decay rate per sample reaching -60 dB after `release` seconds
    let decay = if cfg.release > 0.0 { 1000f64.ln() / (cfg.release * sr) } else { f64::INFINITY };
    let tail = if cfg.release > 0.0 { (cfg.release * sr).ceil() as usize } else { 0 };

    for s in strikes(roll) {
        let f0 = midi_note_frequency(s.pitch as f64);
        let partials: Vec<(f64, f64)> = (1..=cfg.harmonics)
            .map(|k| (k as f64 * f0, (k as f64).powf(-cfg.rolloff_exponent)))
            .filter(|(f, _)| *f < nyquist)
            .map(|(f, a)| (2.0 * PI * f / sr, a))
            .collect();
        let phase = 2.0 * PI * (s.pitch as f64 * 0.618034).fract();
        let held = s.end - s.start;
        for n in 0..(held + tail).min(len - s.start) {
            let rise = if attack > 0.0 { (n as f64 / attack).min(1.0) } else { 1.0 };
            let fall = if n < held { 1.0 } else { (-((n - held) as f64) * decay).exp() };
            let env = s.velocity * rise * fall;
            let x: f64 = partials.iter().map(|(w, a)| a * (w * n as f64 + phase).sin()).sum();
            out[s.start + n] += env * x;
        }
    }

    let peak = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 1.0 {
        out.iter_mut().for_each(|x| *x *= 0.9 / peak);
    }
    Ok(Waveform::new(out, cfg.sample_rate))
}
