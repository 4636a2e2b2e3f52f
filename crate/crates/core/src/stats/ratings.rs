use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::StatsError;

const HEADER: [&str; 4] = ["listener_id", "system_id", "sample_id", "score"];

/// One listener's 1–5 score for one sample rendered by one system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub listener_id: String,
    pub system_id: String,
    pub sample_id: String,
    pub score: u8,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    listener_id: String,
    system_id: String,
    sample_id: String,
    score: i64,
}

/// Reads ratings CSV with header `listener_id,system_id,sample_id,score`.
pub fn read_ratings<R: Read>(input: R) -> Result<Vec<RatingRecord>, StatsError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(StatsError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<RawRecord>() {
        let raw = row?;
        if !(1..=5).contains(&raw.score) {
            return Err(StatsError::InvalidScore { line: out.len() as u64 + 2, score: raw.score });
        }
        out.push(RatingRecord {
            listener_id: raw.listener_id,
            system_id: raw.system_id,
            sample_id: raw.sample_id,
            score: raw.score as u8,
        });
    }
    Ok(out)
}

pub fn write_ratings<W: Write>(records: &[RatingRecord], out: W) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(HEADER)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MosSummary {
    pub mean: f64,
    pub count: usize,
}

/// Mean score and rating count of every system in `records`.
pub fn aggregate_mos(records: &[RatingRecord]) -> BTreeMap<String, MosSummary> {
    let mut totals: BTreeMap<String, (u64, usize)> = BTreeMap::new();
    for r in records {
        let e = totals.entry(r.system_id.clone()).or_default();
        e.0 += u64::from(r.score);
        e.1 += 1;
    }
    totals
        .into_iter()
        .map(|(k, (sum, count))| (k, MosSummary { mean: sum as f64 / count as f64, count }))
        .collect()
}

/// Like [`aggregate_mos`], restricted to `systems` in the given order.
pub fn aggregate_mos_for<S: AsRef<str>>(
    records: &[RatingRecord],
    systems: &[S],
) -> Result<Vec<(String, MosSummary)>, StatsError> {
    let all = aggregate_mos(records);
    systems
        .iter()
        .map(|s| {
            let s = s.as_ref();
            all.get(s).map(|m| (s.to_string(), *m)).ok_or_else(|| StatsError::MissingSystem(s.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(system: &str, sample: &str, score: u8) -> RatingRecord {
        RatingRecord { listener_id: "l".into(), system_id: system.into(), sample_id: sample.into(), score }
    }

    #[test]
    fn aggregation() {
        let rs = vec![rec("a", "s", 4), rec("a", "s", 4), rec("a", "t", 4), rec("b", "s", 1), rec("b", "s", 5)];
        let m = aggregate_mos(&rs);
        assert_eq!(m["a"], MosSummary { mean: 4.0, count: 3 });
        assert_eq!(m["b"].mean, 3.0);
        assert!(matches!(aggregate_mos_for(&rs, &["b", "c"]), Err(StatsError::MissingSystem(s)) if s == "c"));
        let ordered = aggregate_mos_for(&rs, &["b", "a"]).unwrap();
        assert_eq!(ordered[0].0, "b");
    }

    #[test]
    fn fixture_mean_is_exact() {
        // 100 ratings summing to 358
        let scores = (0..100).map(|i| if i < 58 { 4 } else { 3 });
        let rs: Vec<_> = scores.enumerate().map(|(i, s)| rec("joint-hfg", &format!("s{}", i % 7), s)).collect();
        assert_eq!(aggregate_mos(&rs)["joint-hfg"].mean, 3.58);
    }

    #[test]
    fn csv_roundtrip_and_validation() {
        let rs = vec![rec("a", "s1", 5), rec("b", "s2", 1)];
        let mut buf = Vec::new();
        write_ratings(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("listener_id,system_id,sample_id,score\n"));
        assert_eq!(read_ratings(buf.as_slice()).unwrap(), rs);

        let bad = "listener_id,system_id,sample_id,score\nl,a,s,3\nl,a,s,6\n";
        assert!(matches!(read_ratings(bad.as_bytes()), Err(StatsError::InvalidScore { line: 3, score: 6 })));
        assert!(matches!(read_ratings("a,b,c\n".as_bytes()), Err(StatsError::BadHeader(_))));
        assert!(matches!(read_ratings("listener_id,system_id,sample_id,score\nl,a,s,x\n".as_bytes()), Err(StatsError::Csv(_))));
    }
}
