//! Command-line front-end: piano rolls, features, baseline synthesis,
//! objective evaluation and listening-test statistics.

mod commands;
pub mod config;
pub mod error;
mod evaluate;
pub mod manifest;
mod output;
mod stats_cmd;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CmdResult, Context};

/// Environment variable overriding the worker pool size.
pub const THREADS_ENV: &str = "M2A_NUM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "m2a", version, about = "MIDI-to-audio features, baseline synthesis and evaluation")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores); overrides M2A_NUM_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample rate in Hz.
    #[arg(long = "sr", global = true)]
    sample_rate: Option<u32>,
    /// FFT size of the MIDI spectrogram.
    #[arg(long = "nfft", global = true)]
    n_fft: Option<usize>,
    /// Frame hop in samples.
    #[arg(long, global = true)]
    hop: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a MIDI file to a piano roll.
    Roll(commands::RollArgs),
    /// Split a MIDI performance at long pauses.
    Segment(commands::SegmentArgs),
    /// Extract MIDI spectrogram, chroma and pitch posterior from a WAV file.
    Featurize(commands::FeaturizeArgs),
    /// Render a piano roll to audio.
    Synth(commands::SynthArgs),
    /// Compute a rainbow-gram.
    Rainbow(commands::RainbowArgs),
    /// System-level objective metrics over a manifest.
    Eval(evaluate::EvalArgs),
    /// Per-note MOS and distortions over a manifest.
    Notelevel(evaluate::NoteLevelArgs),
    /// MOS table and pairwise significance from listening-test ratings.
    Stats(stats_cmd::StatsArgs),
    /// List filterbank rows that are identically zero.
    ZeroFilters(commands::ZeroFiltersArgs),
}

impl Cli {
    fn run_config(&self) -> CmdResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.sample_rate {
            cfg.sample_rate = v;
        }
        if let Some(v) = self.n_fft {
            cfg.spectrogram.n_fft = v;
        }
        if let Some(v) = self.hop {
            cfg.hop = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        match (self.threads, std::env::var(THREADS_ENV)) {
            (Some(n), _) => cfg.threads = n,
            (None, Ok(s)) => cfg.threads = s.trim().parse().input(format!("{THREADS_ENV}={s:?}"))?,
            (None, Err(_)) => {}
        }
        Ok(cfg)
    }
}

fn pool(threads: usize) -> CmdResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().internal("cannot start worker pool")
}

fn dispatch(cli: Cli) -> CmdResult {
    let cfg = cli.run_config()?;
    if let Command::ZeroFilters(args) = &cli.command {
        // a report on filterbank geometry, not tied to the supported FFT sizes
        return commands::zero_filters(args, &cfg);
    }
    cfg.validate()?;
    let pool = pool(cfg.threads)?;
    pool.install(|| match &cli.command {
        Command::Roll(a) => commands::roll(a, &cfg),
        Command::Segment(a) => commands::segment(a, &cfg),
        Command::Featurize(a) => commands::featurize(a, &cfg),
        Command::Synth(a) => commands::synth(a, &cfg),
        Command::Rainbow(a) => commands::rainbow(a, &cfg),
        Command::Eval(a) => evaluate::eval(a, &cfg),
        Command::Notelevel(a) => evaluate::notelevel(a, &cfg),
        Command::Stats(a) => stats_cmd::stats(a, &cfg),
        Command::ZeroFilters(_) => unreachable!(),
    })
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code: 0 on success, 1 on input errors, 2 on internal failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("m2a: {f}");
            f.exit_code()
        }
    }
}
