//! Regenerates the bundled test fixtures:
//!
//! ```text
//! cargo run -p m2a-cli --example make_fixture -- crates/cli/tests/fixtures
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use m2a_core::io::{write_wav, SampleFormat};
use m2a_core::midi::{to_piano_roll, write_smf, FrameSpec, NoteEvent, NoteSequence};
use m2a_core::spectral::{build_midi_filterbank, midi_spectrogram, StftConfig, DEFAULT_FLOOR};
use m2a_core::synth::{additive_synth, source_filter_synth, SynthConfig};

/// System, MOS of the published results table.
const TABLE_MOS: [(&str, f64); 20] = [
    ("natural", 3.98),
    ("fluidsynth", 3.56),
    ("pianoteq", 4.10),
    ("abs-mfbf-nsfs", 3.71),
    ("taco-mfbf-nsfs", 2.95),
    ("abs-mfb-nsfs", 3.31),
    ("abs-mfb-nsf", 3.35),
    ("abs-mfb-nsfg", 3.69),
    ("abs-mfb-hfg", 3.80),
    ("taco-mfb-nsfs", 3.16),
    ("taco-mfb-nsf", 3.16),
    ("taco-mfb-nsfg", 3.18),
    ("taco-mfb-hfg", 2.21),
    ("trans-mfb-nsfs", 3.22),
    ("trans-mfb-nsf", 3.10),
    ("trans-mfb-nsfg", 3.08),
    ("trans-mfb-hfg", 1.88),
    ("joint-nsf", 2.23),
    ("joint-nsfg", 3.32),
    ("joint-hfg", 3.58),
];

const RATINGS_PER_SYSTEM: usize = 100;

/// 100 integer scores whose sum is exactly `mos · 100`.
fn scores_for(mos: f64) -> Vec<u8> {
    let total = (mos * RATINGS_PER_SYSTEM as f64).round() as usize;
    let base = total / RATINGS_PER_SYSTEM;
    let high = total % RATINGS_PER_SYSTEM;
    (0..RATINGS_PER_SYSTEM).map(|i| (base + usize::from(i < high)) as u8).collect()
}

fn table_ratings() -> String {
    let mut out = String::from("listener_id,system_id,sample_id,score\n");
    for (system, mos) in TABLE_MOS {
        for (i, score) in scores_for(mos).into_iter().enumerate() {
            writeln!(out, "l{:03},{system},s{},{score}", i, i % 10).unwrap();
        }
    }
    out
}

fn melody(notes: &[(u8, f64, f64)], duration: f64) -> NoteSequence {
    let events = notes.iter().map(|&(p, a, b)| NoteEvent::new(p, a, b, 96).unwrap()).collect();
    NoteSequence::new(events, duration, 480).unwrap()
}

fn write_eval_fixture(dir: &Path) {
    let samples = [
        ("s1", melody(&[(60, 0.0, 0.5), (64, 0.5, 1.0), (67, 1.0, 1.5), (72, 1.5, 2.0)], 2.0)),
        ("s2", melody(&[(57, 0.0, 1.0), (64, 0.0, 1.0), (69, 1.0, 2.0), (76, 1.0, 2.0)], 2.0)),
    ];
    let natural = SynthConfig::default();
    let bright = SynthConfig { harmonics: 4, rolloff_exponent: 0.5, ..SynthConfig::default() };
    let stft = StftConfig::default();
    let fb = build_midi_filterbank(stft.sample_rate, stft.n_fft).unwrap();

    let mut entries = Vec::new();
    let mut ratings = String::from("listener_id,system_id,sample_id,score\n");
    for (k, (id, seq)) in samples.iter().enumerate() {
        std::fs::write(dir.join(format!("{id}.mid")), write_smf(seq, 480)).unwrap();
        let roll = to_piano_roll(seq, FrameSpec::default(), true);
        let nat = additive_synth(&roll, &natural).unwrap();
        let spec = midi_spectrogram(&nat, &stft, &fb, DEFAULT_FLOOR).unwrap();
        let renders = [
            ("natural", nat.clone()),
            ("additive", additive_synth(&roll, &bright).unwrap()),
            ("source-filter", source_filter_synth(&spec, &fb, &stft, k as u64).unwrap()),
        ];
        let mut systems = BTreeMap::new();
        for (name, wave) in renders {
            std::fs::create_dir_all(dir.join(name)).unwrap();
            let rel = PathBuf::from(name).join(format!("{id}.wav"));
            write_wav(dir.join(&rel), &wave, SampleFormat::Pcm16).unwrap();
            if name != "natural" {
                systems.insert(name, rel.to_string_lossy().into_owned());
            }
        }
        entries.push(serde_json::json!({
            "sample_id": id,
            "midi_path": format!("{id}.mid"),
            "natural_wav_path": format!("natural/{id}.wav"),
            "systems": systems,
        }));
        for (l, (a, b)) in [(4, 3), (5, 2), (4, 2)].iter().enumerate() {
            writeln!(ratings, "l{l},additive,{id},{a}").unwrap();
            writeln!(ratings, "l{l},source-filter,{id},{b}").unwrap();
        }
    }
    let manifest = serde_json::json!({ "root": ".", "entries": entries });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap() + "\n").unwrap();
    std::fs::write(dir.join("ratings.csv"), ratings).unwrap();
}

fn main() {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/cli/tests/fixtures".into()));
    let eval_dir = root.join("eval");
    std::fs::create_dir_all(&eval_dir).unwrap();
    std::fs::write(root.join("table1_ratings.csv"), table_ratings()).unwrap();
    write_eval_fixture(&eval_dir);
    println!("fixtures written to {}", root.display());
}
