use std::collections::BTreeMap;
use std::io::Write;

use ndarray::Array2;

use super::{holm_bonferroni, mann_whitney_u, RatingRecord, StatsError};
use crate::io::RgbImage;

/// What one observation is in a pairwise test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObservationUnit {
    /// Every rating is an observation.
    #[default]
    Rating,
    /// The mean score of each sample is an observation.
    SampleMean,
}

/// Pairwise test outcomes; both matrices are symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceMatrix {
    pub systems: Vec<String>,
    pub u: Array2<f64>,
    /// Uncorrected two-sided p-values, 1 on the diagonal.
    pub raw_p: Array2<f64>,
    pub rejected: Array2<bool>,
    pub alpha: f64,
}

fn observations(records: &[RatingRecord], unit: ObservationUnit) -> BTreeMap<&str, Vec<f64>> {
    let mut by_sample: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for r in records {
        by_sample.entry(&r.system_id).or_default().entry(&r.sample_id).or_default().push(f64::from(r.score));
    }
    by_sample
        .into_iter()
        .map(|(system, samples)| {
            let obs = match unit {
                ObservationUnit::Rating => samples.into_values().flatten().collect(),
                ObservationUnit::SampleMean => {
                    samples.into_values().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect()
                }
            };
            (system, obs)
        })
        .collect()
}

/// Tests every pair of systems, in lexicographic system order.
pub fn significance_matrix(
    records: &[RatingRecord],
    alpha: f64,
    unit: ObservationUnit,
) -> Result<SignificanceMatrix, StatsError> {
    let systems: Vec<String> = observations(records, unit).into_keys().map(str::to_string).collect();
    significance_matrix_ordered(records, alpha, unit, &systems)
}

/// Tests every pair of `systems`, with Holm-Bonferroni applied over all pairs jointly.
pub fn significance_matrix_ordered<S: AsRef<str>>(
    records: &[RatingRecord],
    alpha: f64,
    unit: ObservationUnit,
    systems: &[S],
) -> Result<SignificanceMatrix, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    let obs = observations(records, unit);
    let lists = systems
        .iter()
        .map(|s| obs.get(s.as_ref()).ok_or_else(|| StatsError::MissingSystem(s.as_ref().to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let m = lists.len();
    if m < 2 {
        return Err(StatsError::FewerThanTwoSystems(m));
    }

    let mut u = Array2::zeros((m, m));
    let mut raw_p = Array2::ones((m, m));
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let t = mann_whitney_u(lists[i], lists[j])?;
            u[[i, j]] = t.u;
            u[[j, i]] = (lists[i].len() * lists[j].len()) as f64 - t.u;
            raw_p[[i, j]] = t.p;
            raw_p[[j, i]] = t.p;
            pairs.push((i, j));
        }
    }
    let pvals: Vec<f64> = pairs.iter().map(|&(i, j)| raw_p[[i, j]]).collect();
    let mut rejected = Array2::from_elem((m, m), false);
    for (&(i, j), r) in pairs.iter().zip(holm_bonferroni(&pvals, alpha)) {
        rejected[[i, j]] = r;
        rejected[[j, i]] = r;
    }
    Ok(SignificanceMatrix {
        systems: systems.iter().map(|s| s.as_ref().to_string()).collect(),
        u,
        raw_p,
        rejected,
        alpha,
    })
}

impl SignificanceMatrix {
    fn write_grid<W: Write, T>(&self, values: &Array2<T>, cell: impl Fn(&T) -> String, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(std::iter::once("system").chain(self.systems.iter().map(String::as_str)))?;
        for (name, row) in self.systems.iter().zip(values.rows()) {
            w.write_record(std::iter::once(name.clone()).chain(row.iter().map(&cell)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Raw p-values as a labelled square CSV.
    pub fn write_p_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        self.write_grid(&self.raw_p, |p| p.to_string(), out)
    }

    /// Corrected decisions as a labelled square CSV of 0/1.
    pub fn write_rejected_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        self.write_grid(&self.rejected, |&r| u8::from(r).to_string(), out)
    }

    /// Square grid with one `cell`-pixel block per pair: grey where the
    /// difference is significant, white otherwise, black on the diagonal.
    pub fn to_image(&self, cell: usize) -> RgbImage {
        let m = self.systems.len();
        let cell = cell.max(2);
        let mut img = RgbImage::new(m * cell + 1, m * cell + 1, [0, 0, 0]);
        for ((i, j), &r) in self.rejected.indexed_iter() {
            let colour = if i == j {
                [0, 0, 0]
            } else if r {
                [128, 128, 128]
            } else {
                [255, 255, 255]
            };
            img.fill_rect(j * cell + 1, i * cell + 1, cell - 1, cell - 1, colour);
        }
        img
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(system: &str, sample: &str, score: u8) -> RatingRecord {
        RatingRecord { listener_id: "l".into(), system_id: system.into(), sample_id: sample.into(), score }
    }

    fn system(name: &str, scores: &[u8]) -> Vec<RatingRecord> {
        scores.iter().enumerate().map(|(i, &s)| rec(name, &format!("s{}", i % 5), s)).collect()
    }

    fn check_symmetry(m: &SignificanceMatrix) {
        let n = m.systems.len();
        for i in 0..n {
            assert!(!m.rejected[[i, i]]);
            for j in 0..n {
                assert_eq!(m.raw_p[[i, j]], m.raw_p[[j, i]]);
                assert_eq!(m.rejected[[i, j]], m.rejected[[j, i]]);
            }
        }
    }

    #[test]
    fn identical_systems_not_rejected() {
        let scores = [1, 2, 3, 3, 4, 5, 5, 2];
        let rs = [system("a", &scores), system("b", &scores)].concat();
        let m = significance_matrix(&rs, 0.05, ObservationUnit::Rating).unwrap();
        assert!(m.rejected.iter().all(|&r| !r));
        check_symmetry(&m);
    }

    #[test]
    fn separated_systems_rejected() {
        let rs = [system("a", &[1; 20]), system("b", &[5; 20])].concat();
        let m = significance_matrix(&rs, 0.05, ObservationUnit::Rating).unwrap();
        assert!(m.rejected[[0, 1]]);
        assert_eq!(m.u[[0, 1]], 0.0);
        assert_eq!(m.u[[1, 0]], 400.0);

        let rs = [system("a", &[1; 12]), system("b", &[3; 12]), system("c", &[5; 12])].concat();
        let m = significance_matrix(&rs, 0.05, ObservationUnit::Rating).unwrap();
        assert_eq!(m.rejected.iter().filter(|&&r| r).count(), 6);
        check_symmetry(&m);
    }

    #[test]
    fn errors() {
        let rs = system("a", &[1, 2]);
        assert!(matches!(significance_matrix(&rs, 0.05, ObservationUnit::Rating), Err(StatsError::FewerThanTwoSystems(1))));
        assert!(matches!(significance_matrix_ordered(&rs, 0.05, ObservationUnit::Rating, &["a", "z"]), Err(StatsError::MissingSystem(_))));
        assert!(matches!(significance_matrix(&rs, 1.5, ObservationUnit::Rating), Err(StatsError::InvalidAlpha(_))));
    }

    #[test]
    fn sample_means_as_observations() {
        let rs = vec![rec("a", "x", 1), rec("a", "x", 3), rec("a", "y", 5), rec("b", "x", 4), rec("b", "y", 4)];
        let obs = observations(&rs, ObservationUnit::SampleMean);
        assert_eq!(obs["a"], [2.0, 5.0]);
        assert_eq!(obs["b"], [4.0, 4.0]);
        assert_eq!(observations(&rs, ObservationUnit::Rating)["a"], [1.0, 3.0, 5.0]);
    }

    #[test]
    fn csv_and_image() {
        let rs = [system("a", &[1; 20]), system("b", &[5; 20])].concat();
        let m = significance_matrix(&rs, 0.05, ObservationUnit::Rating).unwrap();
        let mut buf = Vec::new();
        m.write_rejected_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "system,a,b\na,0,1\nb,1,0\n");
        let mut buf = Vec::new();
        m.write_p_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("system,a,b\na,1,"));
        let img = m.to_image(10);
        assert_eq!((img.width(), img.height()), (21, 21));
        assert_eq!(img.get(15, 5), [128, 128, 128]);
        assert_eq!(img.get(5, 5), [0, 0, 0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn permutation_equivariant(
            scores in proptest::collection::vec(proptest::collection::vec(1u8..=5, 3..15), 3..6),
            perm_seed in any::<u64>(),
        ) {
            let names: Vec<String> = (0..scores.len()).map(|i| format!("sys{i}")).collect();
            let rs: Vec<RatingRecord> = names.iter().zip(&scores).flat_map(|(n, s)| system(n, s)).collect();
            let base = significance_matrix_ordered(&rs, 0.05, ObservationUnit::Rating, &names).unwrap();
            let mut perm: Vec<usize> = (0..names.len()).collect();
            let mut state = perm_seed;
            for i in (1..perm.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (state >> 33) as usize % (i + 1));
            }
            let permuted: Vec<&str> = perm.iter().map(|&k| names[k].as_str()).collect();
            let other = significance_matrix_ordered(&rs, 0.05, ObservationUnit::Rating, &permuted).unwrap();
            for a in 0..perm.len() {
                for b in 0..perm.len() {
                    prop_assert_eq!(other.raw_p[[a, b]], base.raw_p[[perm[a], perm[b]]]);
                    prop_assert_eq!(other.rejected[[a, b]], base.rejected[[perm[a], perm[b]]]);
                }
            }
        }
    }
}
