use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use m2a_core::stats::{aggregate_mos, read_ratings, significance_matrix};
use serde::Serialize;

use crate::config::{RunConfig, Unit};
use crate::error::{CmdResult, Context, Failure};
use crate::output::{csv_bytes, ensure_dir, write_bytes};

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// CSV with header listener_id,system_id,sample_id,score.
    #[arg(long)]
    ratings: PathBuf,
    /// Family-wise significance level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Observation unit of the pairwise tests.
    #[arg(long, value_enum)]
    unit: Option<Unit>,
    /// Directory receiving mos.csv, pvalues.csv, rejected.csv and significance.ppm;
    /// without it the MOS table goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pixel size of one cell in the significance grid.
    #[arg(long, default_value_t = 16)]
    cell: usize,
}

#[derive(Serialize)]
struct MosRow<'a> {
    system: &'a str,
    mos: f64,
    count: usize,
}

pub fn stats(args: &StatsArgs, cfg: &RunConfig) -> CmdResult {
    let alpha = args.alpha.unwrap_or(cfg.stats.alpha);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Failure::Input(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let unit = args.unit.unwrap_or(cfg.stats.unit);
    let file = std::fs::File::open(&args.ratings).input(format!("cannot read {}", args.ratings.display()))?;
    let records = read_ratings(std::io::BufReader::new(file)).input(format!("invalid ratings {}", args.ratings.display()))?;

    let mos = aggregate_mos(&records);
    let rows: Vec<MosRow> = mos.iter().map(|(s, m)| MosRow { system: s, mos: m.mean, count: m.count }).collect();
    let table = csv_bytes(&rows)?;

    let Some(out) = &args.out else {
        std::io::stdout().lock().write_all(&table).internal("cannot write to standard output")?;
        return Ok(());
    };
    let matrix = significance_matrix(&records, alpha, unit.into()).input("significance test")?;
    ensure_dir(out)?;
    write_bytes(&out.join("mos.csv"), table)?;
    let mut p = Vec::new();
    matrix.write_p_csv(&mut p).internal("cannot encode p-values")?;
    write_bytes(&out.join("pvalues.csv"), p)?;
    let mut r = Vec::new();
    matrix.write_rejected_csv(&mut r).internal("cannot encode decisions")?;
    write_bytes(&out.join("rejected.csv"), r)?;
    write_bytes(&out.join("significance.ppm"), matrix.to_image(args.cell).to_ppm())
}
