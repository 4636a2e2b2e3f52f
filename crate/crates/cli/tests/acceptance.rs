//! Acceptance suite: one PASS/FAIL line per criterion, each checked at its
//! stated tolerance and runtime bound. Exits non-zero if a criterion fails,
//! unless it is marked as known to be unattainable.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use m2a_core::eval::{feature_mse, multires_stft_loss, note_level_mos, note_level_spec_distortion, pearson, DEFAULT_RESOLUTIONS};
use m2a_core::midi::{FrameSpec, PianoRoll, NOTE_COUNT};
use m2a_core::pitch::{pitch_cross_entropy, pitch_posterior, PitchConfig, PitchPosterior};
use m2a_core::spectral::{build_midi_filterbank, midi_spectrogram, stft, MidiSpectrogram, StftConfig, DEFAULT_FLOOR};
use m2a_core::stats::{holm_bonferroni, mann_whitney_normal_p, mann_whitney_u};
use m2a_core::synth::{additive_synth, griffin_lim, MagnitudeSpectrogram, SynthConfig};
use m2a_core::Waveform;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------------------

const ZERO_4096: [usize; 18] = [0, 1, 2, 3, 4, 5, 8, 9, 10, 11, 12, 15, 16, 17, 20, 21, 24, 29];
const ZERO_16384: [usize; 2] = [0, 5];

fn filterbank_refinement() -> Outcome {
    let coarse = build_midi_filterbank(24_000, 4096).unwrap().zero_filter_indices();
    let fine = build_midi_filterbank(24_000, 16_384).unwrap().zero_filter_indices();
    let golden = coarse.iter().copied().eq(ZERO_4096) && fine.iter().copied().eq(ZERO_16384);
    let pass = !coarse.is_empty() && coarse.contains(&0) && fine.is_subset(&coarse) && fine.len() < coarse.len() && golden;
    outcome(pass, format!("4096: {} zero rows, 16384: {:?}, golden sets {}", coarse.len(), fine, if golden { "match" } else { "differ" }))
}

// ---------------------------------------------------------------------------

/// System, pitch CE, chroma MSE, spec MSE, MOS of the non-natural rows of the
/// published results table; the data-driven systems start at index 2.
const TABLE: [(&str, f64, f64, f64, f64); 19] = [
    ("fluidsynth", 1.00, 0.33, 13.95, 3.56),
    ("pianoteq", 0.92, 0.32, 12.16, 4.10),
    ("abs-mfbf-nsfs", 1.01, 0.31, 6.60, 3.71),
    ("taco-mfbf-nsfs", 1.18, 0.37, 9.65, 2.95),
    ("abs-mfb-nsfs", 1.31, 0.38, 5.72, 3.31),
    ("abs-mfb-nsf", 1.37, 0.39, 7.20, 3.35),
    ("abs-mfb-nsfg", 1.26, 0.34, 5.14, 3.69),
    ("abs-mfb-hfg", 1.16, 0.31, 4.69, 3.80),
    ("taco-mfb-nsfs", 1.19, 0.37, 9.70, 3.16),
    ("taco-mfb-nsf", 1.29, 0.40, 11.78, 3.16),
    ("taco-mfb-nsfg", 1.11, 0.35, 9.09, 3.18),
    ("taco-mfb-hfg", 1.58, 0.56, 10.07, 2.21),
    ("trans-mfb-nsfs", 1.33, 0.41, 9.41, 3.22),
    ("trans-mfb-nsf", 1.42, 0.44, 10.94, 3.10),
    ("trans-mfb-nsfg", 1.27, 0.40, 9.15, 3.08),
    ("trans-mfb-hfg", 1.83, 0.60, 9.95, 1.88),
    ("joint-nsf", 1.59, 0.47, 16.39, 2.23),
    ("joint-nsfg", 1.12, 0.38, 9.09, 3.32),
    ("joint-hfg", 1.10, 0.38, 9.14, 3.58),
];

/// Pinned value of the 17-row spec/MOS correlation.
const SPEC_MOS_R_DATA_DRIVEN: f64 = -0.676_365_5;

/// Correlation from raw sums, independent of the library's centred form.
fn pearson_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn table_correlations() -> Outcome {
    let col = |rows: &[(&str, f64, f64, f64, f64)], f: fn(&(&str, f64, f64, f64, f64)) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let data = &TABLE[2..];
    let mos = col(data, |r| r.4);
    let spec = pearson(&col(data, |r| r.3), &mos).unwrap();
    let oracle = pearson_oracle(&col(data, |r| r.3), &mos);
    let spec_ok = (spec - oracle).abs() < 1e-12 && (spec - SPEC_MOS_R_DATA_DRIVEN).abs() < 1e-7 && (spec + 0.68).abs() <= 0.10;

    let mos_all = col(&TABLE, |r| r.4);
    let pitch_all = pearson(&col(&TABLE, |r| r.1), &mos_all).unwrap();
    let chroma_all = pearson(&col(&TABLE, |r| r.2), &mos_all).unwrap();
    let pitch_dd = pearson(&col(data, |r| r.1), &mos).unwrap();
    let chroma_dd = pearson(&col(data, |r| r.2), &mos).unwrap();
    let pitch_ok = (pitch_all + 0.88).abs() <= 0.10 || (pitch_dd + 0.88).abs() <= 0.10;
    let chroma_ok = (chroma_all + 0.91).abs() <= 0.10 || (chroma_dd + 0.91).abs() <= 0.10;
    outcome(
        spec_ok && pitch_ok && chroma_ok,
        format!(
            "spec/MOS (17 data-driven) {spec:.7} (oracle {oracle:.7}); pitch {pitch_all:.4} (19) / {pitch_dd:.4} (17); chroma {chroma_all:.4} (19) / {chroma_dd:.4} (17)"
        ),
    )
}

// ---------------------------------------------------------------------------

fn choose(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn pair_u(xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().flat_map(|x| ys.iter().map(move |y| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 })).sum()
}

/// Permutation p-value over every relabelling of the pooled values.
fn brute_force_p(xs: &[f64], ys: &[f64], subsets: &[Vec<usize>]) -> f64 {
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let observed = pair_u(xs, ys);
    let (mut le, mut ge) = (0usize, 0usize);
    for s in subsets {
        let mut inside = vec![false; pooled.len()];
        for &i in s {
            inside[i] = true;
        }
        let a: Vec<f64> = s.iter().map(|&i| pooled[i]).collect();
        let b: Vec<f64> = (0..pooled.len()).filter(|&i| !inside[i]).map(|i| pooled[i]).collect();
        let u = pair_u(&a, &b);
        le += usize::from(u <= observed);
        ge += usize::from(u >= observed);
    }
    (2.0 * le.min(ge) as f64 / subsets.len() as f64).min(1.0)
}

/// Tie-free samples with `nx` x's and `ny` y's whose statistic is `u`.
fn samples_with_u(nx: usize, ny: usize, u: usize) -> (Vec<f64>, Vec<f64>) {
    let mut remaining = u;
    let mut lift = vec![0usize; nx];
    for d in lift.iter_mut().rev() {
        *d = remaining.min(ny);
        remaining -= *d;
    }
    let positions: BTreeSet<usize> = lift.iter().enumerate().map(|(i, d)| i + d).collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for v in 0..nx + ny {
        if positions.contains(&v) { xs.push(v as f64) } else { ys.push(v as f64) }
    }
    (xs, ys)
}

fn mann_whitney_equivalence() -> Outcome {
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for n in 2..=12usize {
        for nx in 1..n {
            let subsets = choose(n, nx);
            for split in &subsets {
                let xs: Vec<f64> = split.iter().map(|&i| i as f64).collect();
                let ys: Vec<f64> = (0..n).filter(|i| !split.contains(i)).map(|i| i as f64).collect();
                checked += 1;
                if mann_whitney_u(&xs, &ys).unwrap().p != brute_force_p(&xs, &ys, &subsets) {
                    mismatches += 1;
                }
            }
        }
    }

    let mut worst = (0.0f64, 0, 0, 0, 0.0, 0.0);
    let mut cases = 0usize;
    for n in 8..=20usize {
        for nx in 1..n {
            let ny = n - nx;
            for u in 0..=nx * ny {
                let (xs, ys) = samples_with_u(nx, ny, u);
                let exact = mann_whitney_u(&xs, &ys).unwrap();
                assert!(exact.exact && exact.u == u as f64);
                let approx = mann_whitney_normal_p(&xs, &ys).unwrap();
                cases += 1;
                let err = (approx - exact.p).abs();
                if err > worst.0 {
                    worst = (err, nx, ny, u, exact.p, approx);
                }
            }
        }
    }
    let (err, nx, ny, u, pe, pa) = worst;
    outcome(
        mismatches == 0 && err <= 0.02,
        format!(
            "exact vs brute force: {mismatches} mismatches in {checked} splits (n <= 12); normal vs exact over {cases} cases (8 <= n <= 20): worst |diff| {err:.4} at nx={nx}, ny={ny}, U={u} (exact {pe:.4}, normal {pa:.4})"
        ),
    )
}

// ---------------------------------------------------------------------------

fn holm_properties() -> Outcome {
    let fixture = holm_bonferroni(&[0.01, 0.04, 0.03], 0.05) == [true, false, false];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = 0usize;
    for _ in 0..1000 {
        let m = rng.random_range(1..=30usize);
        let alpha = rng.random_range(0.001..0.2);
        // mix of uniform and very small p-values so that rejections happen
        let p: Vec<f64> = (0..m).map(|_| if rng.random_bool(0.4) { rng.random::<f64>() * 0.01 } else { rng.random::<f64>() }).collect();
        let holm = holm_bonferroni(&p, alpha);
        for (i, &r) in holm.iter().enumerate() {
            let bonferroni = p[i] <= alpha / m as f64;
            let uncorrected = p[i] <= alpha;
            if (bonferroni && !r) || (r && !uncorrected) {
                violations += 1;
            }
        }
        let k = rng.random_range(0..m);
        let mut lowered = p.clone();
        lowered[k] *= rng.random::<f64>();
        let after = holm_bonferroni(&lowered, alpha);
        violations += holm.iter().zip(&after).filter(|(b, a)| **b && !**a).count();
    }
    outcome(fixture && violations == 0, format!("fixture {}, {violations} property violations over 1000 random vectors", if fixture { "ok" } else { "wrong" }))
}

// ---------------------------------------------------------------------------

fn analysis_by_synthesis() -> Outcome {
    let spec = FrameSpec::default();
    let stft_cfg = StftConfig::default();
    let fb = build_midi_filterbank(stft_cfg.sample_rate, stft_cfg.n_fft).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let (mut hits, mut total) = (0usize, 0usize);
    let mut misses = Vec::new();
    for _ in 0..20 {
        let note = rng.random_range(36..=96usize);
        let start = rng.random_range(0..40usize);
        let len = rng.random_range(40..160usize);
        let frames = start + len + 20;
        let velocity = rng.random_range(30..=127u32) as f64 / 127.0;
        let mut values = Array2::zeros((frames, NOTE_COUNT));
        values.slice_mut(ndarray::s![start..start + len, note]).fill(velocity);
        let roll = PianoRoll::new(values, spec, frames).unwrap();
        let wave = additive_synth(&roll, &SynthConfig::default()).unwrap();
        let argmax = midi_spectrogram(&wave, &stft_cfg, &fb, DEFAULT_FLOOR).unwrap().argmax();
        // interior: the analysis window lies inside the sounding span
        let margin = stft_cfg.window_length / (2 * spec.hop) + 1;
        for &m in &argmax[start + margin..start + len - margin] {
            total += 1;
            if m == note {
                hits += 1;
            } else {
                misses.push((note, m));
            }
        }
    }
    let rate = hits as f64 / total as f64;
    misses.dedup();
    outcome(rate >= 0.95, format!("{hits}/{total} voiced interior frames ({:.2}%) at the played note; misses {:?}", 100.0 * rate, &misses[..misses.len().min(5)]))
}

// ---------------------------------------------------------------------------

fn pitch_suite() -> Outcome {
    let cfg = PitchConfig::default();
    let sr = cfg.sample_rate as f64;
    let step = (0.5 * sr) as usize;
    let notes: Vec<u8> = (40..=80).collect();
    let mut samples = Vec::with_capacity(step * notes.len());
    let mut phase = 0.0f64;
    for &n in &notes {
        let f = 440.0 * 2f64.powf((n as f64 - 69.0) / 12.0);
        for _ in 0..step {
            samples.push(0.5 * phase.sin());
            phase = (phase + 2.0 * PI * f / sr) % (2.0 * PI);
        }
    }
    let post = pitch_posterior(&Waveform::new(samples, cfg.sample_rate), &cfg).unwrap();
    let half = cfg.window / 2;
    let (mut hits, mut total) = (0usize, 0usize);
    for (t, &b) in post.argmax().iter().enumerate() {
        let centre = t * cfg.hop;
        let (lo, hi) = (centre.saturating_sub(half), centre + half);
        if centre < half || hi > step * notes.len() || lo / step != (hi - 1) / step {
            continue;
        }
        let f = 440.0 * 2f64.powf((notes[lo / step] as f64 - 69.0) / 12.0);
        total += 1;
        if (b as f64 - cfg.frequency_bin(f)).abs() <= 1.0 {
            hits += 1;
        }
    }
    let rate = hits as f64 / total as f64;

    let row = |v: Array1<f64>| PitchPosterior { probs: v.insert_axis(ndarray::Axis(0)), config: cfg };
    let mut one_hot = Array1::zeros(cfg.bins);
    one_hot[100] = 1.0;
    let uniform = Array1::from_elem(cfg.bins, 1.0 / cfg.bins as f64);
    let ln360 = (360f64).ln();
    let ce_same = pitch_cross_entropy(&row(one_hot.clone()), &row(one_hot.clone())).unwrap();
    let ce_uni = pitch_cross_entropy(&row(one_hot), &row(uniform.clone())).unwrap();
    let ce_uu = pitch_cross_entropy(&row(uniform.clone()), &row(uniform)).unwrap();
    let analytic = ce_same.abs() < 1e-6 && (ce_uni - ln360).abs() < 1e-6 && (ce_uu - ln360).abs() < 1e-6;
    outcome(
        rate >= 0.95 && analytic,
        format!("sweep: {hits}/{total} frames within one bin ({:.2}%); CE cases {ce_same:.2e}, {ce_uni:.7}, {ce_uu:.7} (ln 360 = {ln360:.7})", 100.0 * rate),
    )
}

// ---------------------------------------------------------------------------

fn griffin_lim_convergence() -> Outcome {
    let cfg = StftConfig::new(24_000, 1024, 256, 1024).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_ratio = 0.0f64;
    let mut increases = 0usize;
    for k in 0..10u64 {
        let f1 = rng.random_range(100.0..3000.0);
        let f2 = rng.random_range(100.0..3000.0);
        let a2 = rng.random_range(0.2..1.0);
        let samples: Vec<f64> = (0..24_000)
            .map(|i| {
                let t = i as f64 / 24_000.0;
                0.5 * (2.0 * PI * f1 * t).sin() + 0.5 * a2 * (2.0 * PI * f2 * t).sin()
            })
            .collect();
        let mag = stft(&Waveform::new(samples, 24_000), &cfg).unwrap().magnitude();
        let gl = griffin_lim(&MagnitudeSpectrogram::new(mag, cfg).unwrap(), 32, k).unwrap();
        increases += gl.errors.windows(2).filter(|w| w[1] > w[0]).count();
        worst_ratio = worst_ratio.max(gl.errors[32] / gl.errors[0]);
    }
    outcome(
        increases == 0 && worst_ratio <= 0.5,
        format!("{increases} error increases over 10 runs of 32 iterations; worst final/initial ratio {worst_ratio:.4}"),
    )
}

// ---------------------------------------------------------------------------

fn note_level_procedures() -> Outcome {
    let presence = [("s1".to_string(), BTreeSet::from([60u8, 72])), ("s2".to_string(), BTreeSet::from([60u8]))].into();
    let m = note_level_mos(&[("s1", 4.0), ("s2", 2.0)], &presence).unwrap();
    let fixture_ok = m.mean(60) == Some(3.0) && m.mean(72) == Some(4.0);

    let mut rng = ChaCha8Rng::seed_from_u64(128);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let frames = rng.random_range(1..60usize);
        let mut random = || Array2::from_shape_fn((frames, NOTE_COUNT), |_| rng.random_range(-5.0..0.0));
        let a = MidiSpectrogram { values: random(), floor: DEFAULT_FLOOR, config: StftConfig::default() };
        let b = MidiSpectrogram { values: random(), floor: DEFAULT_FLOOR, config: StftConfig::default() };
        let per_note = note_level_spec_distortion(&a, &b).unwrap();
        let mean = per_note.iter().sum::<f64>() / NOTE_COUNT as f64;
        worst = worst.max((mean - feature_mse(&a.values, &b.values).unwrap()).abs());
    }
    outcome(fixture_ok && worst <= 1e-9, format!("two-sample fixture note 60 = {:?}, note 72 = {:?}; worst decomposition error {worst:.2e}", m.mean(60), m.mean(72)))
}

// ---------------------------------------------------------------------------

fn multires_loss() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Waveform::new((0..48_000).map(|_| rng.random_range(-0.5..0.5)).collect(), 24_000);
    let identity = multires_stft_loss(&noise, &noise, &DEFAULT_RESOLUTIONS).unwrap();
    let half = multires_stft_loss(&noise.scaled(0.5), &noise, &DEFAULT_RESOLUTIONS).unwrap();
    let target = 0.5 + 2f64.ln();
    outcome(
        identity.abs() <= 1e-9 && (half - target).abs() <= 1e-3,
        format!("identity {identity:.2e}; half amplitude {half:.6} (0.5 + ln 2 = {target:.6})"),
    )
}

// ---------------------------------------------------------------------------

fn eval_determinism() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/eval/manifest.json");
    let dir = tempfile::tempdir().unwrap();
    let mut codes = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "4")] {
        let out = dir.path().join(name);
        codes.push(m2a_cli::run([
            "m2a",
            "--threads",
            threads,
            "eval",
            "--manifest",
            fixture.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    let mut identical = true;
    let mut rows = 0;
    for file in ["metrics.csv", "metrics.json", "samples.csv"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap_or_default();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap_or_default();
        identical &= !a.is_empty() && a == b;
        if file == "metrics.csv" {
            rows = String::from_utf8_lossy(&a).lines().count().saturating_sub(1);
        }
    }
    outcome(
        codes == [0, 0] && identical && rows == 2,
        format!("exit codes {codes:?}; reports {} across runs with 1 and 4 threads; {rows} system rows", if identical { "byte-identical" } else { "differ" }),
    )
}

// ---------------------------------------------------------------------------

/// Name, runtime bound, check, and whether it is known to be unattainable.
type Criterion = (&'static str, Duration, fn() -> Outcome, bool);

fn main() {
    let criteria: [Criterion; 10] = [
        ("filterbank refinement", Duration::from_secs(1), filterbank_refinement, false),
        ("results-table correlations", Duration::from_secs(1), table_correlations, false),
        ("Mann-Whitney oracle equivalence", Duration::from_secs(30), mann_whitney_equivalence, true),
        ("Holm-Bonferroni", Duration::from_secs(5), holm_properties, false),
        ("analysis-by-synthesis round trip", Duration::from_secs(60), analysis_by_synthesis, false),
        ("pitch suite", Duration::from_secs(60), pitch_suite, false),
        ("Griffin-Lim convergence", Duration::from_secs(60), griffin_lim_convergence, false),
        ("note-level procedures", Duration::MAX, note_level_procedures, false),
        ("multi-resolution STFT loss", Duration::MAX, multires_loss, false),
        ("end-to-end determinism", Duration::MAX, eval_determinism, false),
    ];
    let (mut passed, mut known, mut unexpected) = (0, 0, 0);
    for (name, limit, check, unattainable) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= limit;
        match (pass, unattainable) {
            (true, _) => passed += 1,
            (false, true) => known += 1,
            (false, false) => unexpected += 1,
        }
        let bound = if limit == Duration::MAX { String::new() } else { format!(", limit {:.0} s", limit.as_secs_f64()) };
        let note = if !pass && unattainable { " [known unattainable]" } else { "" };
        println!(
            "{} {name}: {} ({:.2} s{bound}){note}",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {passed} passed, {} failed ({known} known unattainable)", known + unexpected);
    if unexpected > 0 {
        std::process::exit(1);
    }
}
