use std::path::PathBuf;

use clap::{Args, ValueEnum};
use m2a_core::io::{write_wav, SampleFormat};
use m2a_core::midi::{chunk_frames, segment_by_pauses, to_piano_roll, PianoRoll};
use m2a_core::pitch::pitch_posterior;
use m2a_core::spectral::{build_midi_filterbank, chroma, midi_spectrogram, rainbowgram, MidiSpectrogram};
use m2a_core::synth::{additive_synth, griffin_lim, invert_filterbank, source_filter_synth};
use m2a_core::Waveform;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CmdResult, Context, Failure};
use crate::output::{csv_bytes, ensure_dir, load_feature, load_midi, load_roll, load_wav, write_bytes, write_matrix};

#[derive(Debug, Args)]
pub struct RollArgs {
    #[arg(long)]
    midi: PathBuf,
    /// Piano-roll matrix (frames × 128).
    #[arg(long)]
    out: PathBuf,
    /// Also write the note list as JSON.
    #[arg(long)]
    notes: Option<PathBuf>,
    /// Also write fixed-length chunks into this directory.
    #[arg(long)]
    chunks: Option<PathBuf>,
    /// Ignore the sustain pedal.
    #[arg(long)]
    no_sustain: bool,
}

pub fn roll(args: &RollArgs, cfg: &RunConfig) -> CmdResult {
    let seq = load_midi(&args.midi)?;
    let roll = to_piano_roll(&seq, cfg.frame_spec(), cfg.roll.sustain && !args.no_sustain);
    write_matrix(&args.out, roll.values())?;
    if let Some(path) = &args.notes {
        write_bytes(path, seq.to_json())?;
    }
    if let Some(dir) = &args.chunks {
        ensure_dir(dir)?;
        let mut lengths = Vec::new();
        for (i, chunk) in chunk_frames(&roll).iter().enumerate() {
            write_matrix(&dir.join(format!("chunk_{i:04}.bin")), chunk.values())?;
            lengths.push(ChunkRow { chunk: i, valid_frames: chunk.valid_frames() });
        }
        write_bytes(&dir.join("chunks.csv"), csv_bytes(&lengths)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ChunkRow {
    chunk: usize,
    valid_frames: usize,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    midi: PathBuf,
    /// CSV of segments: index, start, end, note count.
    #[arg(long)]
    out: PathBuf,
    /// Shortest silence, in seconds, at which a cut may be placed.
    #[arg(long)]
    min_pause: Option<f64>,
    #[arg(long)]
    min_len: Option<f64>,
    #[arg(long)]
    max_len: Option<f64>,
}

#[derive(Serialize)]
struct SegmentRow {
    index: usize,
    start: f64,
    end: f64,
    notes: usize,
}

pub fn segment(args: &SegmentArgs, cfg: &RunConfig) -> CmdResult {
    let seq = load_midi(&args.midi)?;
    let s = &cfg.segment;
    let bounds = (args.min_len.unwrap_or(s.min_len), args.max_len.unwrap_or(s.max_len));
    let segments = segment_by_pauses(&seq, args.min_pause.unwrap_or(s.min_pause), bounds).input("invalid segmentation")?;
    let rows: Vec<SegmentRow> = segments
        .iter()
        .enumerate()
        .map(|(index, seg)| SegmentRow { index, start: seg.start, end: seg.end, notes: seg.note_indices.len() })
        .collect();
    write_bytes(&args.out, csv_bytes(&rows)?)
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    wav: PathBuf,
    /// Directory receiving midi_spec.bin, chroma.bin, pitch.bin and pitch.csv.
    #[arg(long)]
    out: PathBuf,
}

pub fn featurize(args: &FeaturizeArgs, cfg: &RunConfig) -> CmdResult {
    let wave = load_wav(&args.wav, cfg.sample_rate)?;
    let stft = cfg.spectrogram_stft();
    let fb = build_midi_filterbank(cfg.sample_rate, stft.n_fft).internal("filterbank")?;
    let ((spec, chroma), posterior) = rayon::join(
        || rayon::join(|| midi_spectrogram(&wave, &stft, &fb, cfg.spectrogram.floor), || chroma(&wave, &cfg.chroma_stft())),
        || pitch_posterior(&wave, &cfg.pitch_config()),
    );
    let spec = spec.internal("MIDI spectrogram")?;
    let chroma = chroma.internal("chroma")?;
    let posterior = posterior.internal("pitch posterior")?;
    ensure_dir(&args.out)?;
    write_matrix(&args.out.join("midi_spec.bin"), &spec.values)?;
    write_matrix(&args.out.join("chroma.bin"), &chroma)?;
    write_matrix(&args.out.join("pitch.bin"), &posterior.probs)?;
    write_bytes(&args.out.join("pitch.csv"), csv_bytes(&posterior.estimates())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Additive,
    SourceFilter,
    GriffinLim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Pcm16,
    Float32,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Piano-roll matrix written by `roll`.
    #[arg(long, conflicts_with = "midi", required_unless_present = "midi")]
    roll: Option<PathBuf>,
    /// MIDI file, converted with the configured frame settings.
    #[arg(long)]
    midi: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Additive)]
    method: Method,
    /// MIDI spectrogram to vocode instead of one analysed from the additive rendering.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Griffin-Lim iterations.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Pcm16)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

fn input_roll(args: &SynthArgs, cfg: &RunConfig) -> CmdResult<PianoRoll> {
    match (&args.roll, &args.midi) {
        (Some(path), _) => load_roll(path, cfg.frame_spec()),
        (None, Some(path)) => Ok(to_piano_roll(&load_midi(path)?, cfg.frame_spec(), cfg.roll.sustain)),
        (None, None) => Err(Failure::Input("synth needs --roll or --midi".into())),
    }
}

/// Renders a roll. The vocoder methods take a MIDI spectrogram: the one given
/// with `--spec`, or else the analysis of the additive rendering.
pub fn render(args: &SynthArgs, cfg: &RunConfig) -> CmdResult<Waveform> {
    let synth_cfg = cfg.synth_config();
    let stft = cfg.spectrogram_stft();
    let needs_roll = args.method == Method::Additive || args.spec.is_none();
    let roll = if needs_roll { Some(input_roll(args, cfg)?) } else { None };
    let additive = || additive_synth(roll.as_ref().expect("roll loaded"), &synth_cfg).internal("additive synthesis");
    if args.method == Method::Additive {
        return additive();
    }

    let fb = build_midi_filterbank(cfg.sample_rate, stft.n_fft).internal("filterbank")?;
    let spec = match &args.spec {
        Some(path) => {
            let values = load_feature(path)?;
            if values.ncols() != fb.weights().nrows() {
                return Err(Failure::Input(format!("{} has {} columns, expected 128", path.display(), values.ncols())));
            }
            MidiSpectrogram { values, floor: cfg.spectrogram.floor, config: stft }
        }
        None => midi_spectrogram(&additive()?, &stft, &fb, cfg.spectrogram.floor).internal("MIDI spectrogram")?,
    };
    match args.method {
        Method::SourceFilter => source_filter_synth(&spec, &fb, &stft, cfg.seed).internal("source-filter synthesis"),
        Method::GriffinLim => {
            let mag = invert_filterbank(&spec, &fb).internal("filterbank inversion")?;
            let iterations = args.iterations.unwrap_or(cfg.synth.griffin_lim_iterations);
            Ok(griffin_lim(&mag, iterations, cfg.seed).internal("Griffin-Lim")?.waveform)
        }
        Method::Additive => unreachable!(),
    }
}

pub fn synth(args: &SynthArgs, cfg: &RunConfig) -> CmdResult {
    let wave = render(args, cfg)?;
    let format = match args.format {
        Format::Pcm16 => SampleFormat::Pcm16,
        Format::Float32 => SampleFormat::Float32,
    };
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_wav(&args.out, &wave, format).internal(format!("cannot write {}", args.out.display()))
}

#[derive(Debug, Args)]
pub struct RainbowArgs {
    #[arg(long)]
    wav: PathBuf,
    /// Directory receiving amplitude_db.bin, inst_freq.bin and rainbow.ppm.
    #[arg(long)]
    out: PathBuf,
    /// Skip the rendered image.
    #[arg(long)]
    no_image: bool,
}

pub fn rainbow(args: &RainbowArgs, cfg: &RunConfig) -> CmdResult {
    let wave = load_wav(&args.wav, cfg.sample_rate)?;
    let rg = rainbowgram(&wave, &cfg.rainbow_stft()).internal("rainbow-gram")?;
    ensure_dir(&args.out)?;
    write_matrix(&args.out.join("amplitude_db.bin"), &rg.amplitude_db)?;
    write_matrix(&args.out.join("inst_freq.bin"), &rg.inst_freq_hz)?;
    if !args.no_image {
        write_bytes(&args.out.join("rainbow.ppm"), rg.to_image().to_ppm())?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ZeroFiltersArgs {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ZeroFilterReport {
    sample_rate: u32,
    n_fft: usize,
    count: usize,
    indices: Vec<usize>,
}

pub fn zero_filters(args: &ZeroFiltersArgs, cfg: &RunConfig) -> CmdResult {
    let fb = build_midi_filterbank(cfg.sample_rate, cfg.spectrogram.n_fft).input("invalid filterbank settings")?;
    let indices: Vec<usize> = fb.zero_filter_indices().into_iter().collect();
    let report = ZeroFilterReport { sample_rate: cfg.sample_rate, n_fft: cfg.spectrogram.n_fft, count: indices.len(), indices };
    let json = serde_json::to_string(&report).internal("cannot encode report")? + "\n";
    match &args.out {
        Some(path) => write_bytes(path, json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}
