use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::Args;
use m2a_core::eval::{compare, note_level_mos, FeatureSetup, NoteLevelBuilder, SampleComparison, SystemMetrics};
use m2a_core::midi::{to_piano_roll, PianoRoll};
use m2a_core::stats::{aggregate_mos, read_ratings, RatingRecord};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CmdResult, Context, Failure};
use crate::manifest::{Manifest, ManifestEntry};
use crate::output::{csv_bytes, ensure_dir, file_stem, load_midi, load_wav, write_bytes};

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory receiving metrics.csv, metrics.json and samples.csv.
    #[arg(long)]
    out: PathBuf,
    /// Listening-test ratings used to fill the MOS column.
    #[arg(long)]
    ratings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NoteLevelArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory receiving one notelevel_<system>.csv per system.
    #[arg(long)]
    out: PathBuf,
    /// Listening-test ratings used to fill the MOS column.
    #[arg(long)]
    ratings: Option<PathBuf>,
}

struct SampleOutcome {
    sample_id: String,
    roll: Option<CmdResult<PianoRoll>>,
    systems: Vec<(String, CmdResult<SampleComparison>)>,
}

impl SampleOutcome {
    fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(Err(f)) = &self.roll {
            out.push(format!("sample {}: {}", self.sample_id, f));
        }
        for (system, r) in &self.systems {
            if let Err(f) = r {
                out.push(format!("sample {} system {}: {}", self.sample_id, system, f));
            }
        }
        out
    }
}

fn analyse(entry: &ManifestEntry, cfg: &RunConfig, setup: &FeatureSetup, with_roll: bool) -> SampleOutcome {
    let roll = with_roll.then(|| load_midi(&entry.midi_path).map(|seq| to_piano_roll(&seq, cfg.frame_spec(), cfg.roll.sustain)));
    let natural = load_wav(&entry.natural_wav_path, cfg.sample_rate);
    let systems = entry
        .systems
        .iter()
        .map(|(system, path)| {
            let result = natural.clone().and_then(|nat| {
                let syn = load_wav(path, cfg.sample_rate)?;
                compare(&nat, &syn, setup).input(format!("comparing {}", path.display()))
            });
            (system.clone(), result)
        })
        .collect();
    SampleOutcome { sample_id: entry.sample_id.clone(), roll, systems }
}

/// Analyses every sample in parallel; results keep manifest order.
fn analyse_all(manifest: &Manifest, cfg: &RunConfig, with_roll: bool) -> CmdResult<(Vec<SampleOutcome>, Vec<String>)> {
    let setup = FeatureSetup::new(cfg.spectrogram_stft(), cfg.chroma_stft(), cfg.pitch_config(), cfg.spectrogram.floor)
        .internal("feature setup")?;
    let outcomes: Vec<SampleOutcome> = manifest.entries.par_iter().map(|e| analyse(e, cfg, &setup, with_roll)).collect();
    let failures: Vec<String> = outcomes.iter().flat_map(SampleOutcome::failures).collect();
    for f in &failures {
        log::error!("{f}");
    }
    Ok((outcomes, failures))
}

fn load_ratings(path: &Path) -> CmdResult<Vec<RatingRecord>> {
    let file = std::fs::File::open(path).input(format!("cannot read {}", path.display()))?;
    read_ratings(std::io::BufReader::new(file)).input(format!("invalid ratings {}", path.display()))
}

fn partial_failure(failures: &[String], total: usize) -> CmdResult {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Input(format!("{} of {total} items failed; outputs cover the rest", failures.len())))
    }
}

#[derive(Serialize)]
struct SampleRow<'a> {
    sample_id: &'a str,
    system: &'a str,
    pitch: f64,
    chroma: f64,
    spec: f64,
}

pub fn eval(args: &EvalArgs, cfg: &RunConfig) -> CmdResult {
    let manifest = Manifest::load(&args.manifest)?;
    let mos = match &args.ratings {
        Some(path) => aggregate_mos(&load_ratings(path)?),
        None => BTreeMap::new(),
    };
    let (outcomes, failures) = analyse_all(&manifest, cfg, false)?;

    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    for system in manifest.systems() {
        let samples: Vec<SampleComparison> = outcomes
            .iter()
            .flat_map(|o| o.systems.iter().filter(|(s, _)| *s == system))
            .filter_map(|(_, r)| r.as_ref().ok().cloned())
            .collect();
        if samples.is_empty() {
            continue;
        }
        let mean = mos.get(&system).map(|m| m.mean);
        metrics.push(SystemMetrics::from_samples(&system, &samples, mean).internal("aggregating metrics")?);
    }
    for o in &outcomes {
        for (system, r) in &o.systems {
            if let Ok(c) = r {
                rows.push(SampleRow { sample_id: &o.sample_id, system, pitch: c.pitch_ce, chroma: c.chroma_mse, spec: c.spec_mse });
            }
        }
    }

    ensure_dir(&args.out)?;
    let mut table = Vec::new();
    SystemMetrics::write_csv(&metrics, &mut table).internal("cannot encode metrics")?;
    write_bytes(&args.out.join("metrics.csv"), table)?;
    write_bytes(&args.out.join("metrics.json"), SystemMetrics::to_json(&metrics) + "\n")?;
    write_bytes(&args.out.join("samples.csv"), csv_bytes(&rows)?)?;
    let total = outcomes.iter().map(|o| o.systems.len()).sum();
    partial_failure(&failures, total)
}

pub fn notelevel(args: &NoteLevelArgs, cfg: &RunConfig) -> CmdResult {
    let manifest = Manifest::load(&args.manifest)?;
    let ratings = match &args.ratings {
        Some(path) => load_ratings(path)?,
        None => Vec::new(),
    };
    let sample_ids: BTreeSet<&str> = manifest.entries.iter().map(|e| e.sample_id.as_str()).collect();
    if let Some(r) = ratings.iter().find(|r| !sample_ids.contains(r.sample_id.as_str())) {
        return Err(Failure::Input(format!("rating for sample {:?}, which is not in the manifest", r.sample_id)));
    }
    let (outcomes, mut failures) = analyse_all(&manifest, cfg, true)?;

    let presence: BTreeMap<String, BTreeSet<u8>> = outcomes
        .iter()
        .filter_map(|o| match &o.roll {
            Some(Ok(roll)) => Some((o.sample_id.clone(), roll.present_notes())),
            _ => None,
        })
        .collect();

    ensure_dir(&args.out)?;
    for system in manifest.systems() {
        let mut builder = NoteLevelBuilder::new();
        for o in &outcomes {
            let Some(Ok(roll)) = &o.roll else { continue };
            for (_, r) in o.systems.iter().filter(|(s, _)| *s == system) {
                if let Ok(c) = r {
                    if let Err(e) = builder.add_sample(c, roll) {
                        let msg = format!("sample {} system {system}: {e}", o.sample_id);
                        log::error!("{msg}");
                        failures.push(msg);
                    }
                }
            }
        }
        let scored: Vec<(&str, f64)> = ratings
            .iter()
            .filter(|r| r.system_id == system && presence.contains_key(&r.sample_id))
            .map(|r| (r.sample_id.as_str(), f64::from(r.score)))
            .collect();
        let mos = if scored.is_empty() { None } else { Some(note_level_mos(&scored, &presence).internal("note-level MOS")?) };
        let mut csv = Vec::new();
        builder.finish(mos.as_ref()).write_csv(&mut csv).internal("cannot encode note-level report")?;
        write_bytes(&args.out.join(format!("notelevel_{}.csv", file_stem(&system))), csv)?;
    }
    let total = outcomes.iter().map(|o| o.systems.len() + 1).sum();
    partial_failure(&failures, total)
}
