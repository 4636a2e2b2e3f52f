//! Listening-test ratings, MOS aggregation and pairwise significance testing.

mod mann_whitney;
mod matrix;
mod ratings;

use thiserror::Error;

pub use mann_whitney::{mann_whitney_normal_p, mann_whitney_u, MannWhitney, EXACT_MAX_N};
pub use matrix::{significance_matrix, significance_matrix_ordered, ObservationUnit, SignificanceMatrix};
pub use ratings::{aggregate_mos, aggregate_mos_for, read_ratings, write_ratings, MosSummary, RatingRecord};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("score {score} on line {line} is outside 1..=5")]
    InvalidScore { line: u64, score: i64 },
    #[error("ratings header must be listener_id,system_id,sample_id,score, found {0}")]
    BadHeader(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("need ratings for at least two systems, found {0}")]
    FewerThanTwoSystems(usize),
    #[error("no ratings for system {0:?}")]
    MissingSystem(String),
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
}

/// Holm's step-down procedure; decisions are returned in input order.
pub fn holm_bonferroni(pvals: &[f64], alpha: f64) -> Vec<bool> {
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut rejected = vec![false; m];
    for (i, &k) in order.iter().enumerate() {
        if pvals[k] <= alpha / (m - i) as f64 {
            rejected[k] = true;
        } else {
            break;
        }
    }
    rejected
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn holm_examples() {
        assert_eq!(holm_bonferroni(&[0.01, 0.04, 0.03], 0.05), [true, false, false]);
        assert_eq!(holm_bonferroni(&[1.0; 4], 0.05), [false; 4]);
        assert_eq!(holm_bonferroni(&[0.04], 0.05), [true]);
        assert_eq!(holm_bonferroni(&[0.02, 0.01, 0.2], 0.05), [true, true, false]);
        assert!(holm_bonferroni(&[], 0.05).is_empty());
    }

    proptest! {
        #[test]
        fn holm_between_bonferroni_and_uncorrected(p in proptest::collection::vec(0.0f64..=1.0, 1..40), alpha in 0.001f64..0.5) {
            let m = p.len() as f64;
            let holm = holm_bonferroni(&p, alpha);
            for (i, &r) in holm.iter().enumerate() {
                if p[i] <= alpha / m {
                    prop_assert!(r);
                }
                if r {
                    prop_assert!(p[i] <= alpha);
                }
            }
        }

        #[test]
        fn holm_monotone(p in proptest::collection::vec(0.0f64..=1.0, 1..40), which in any::<prop::sample::Index>(), factor in 0.0f64..1.0) {
            let before = holm_bonferroni(&p, 0.05);
            let mut lowered = p.clone();
            let k = which.index(p.len());
            lowered[k] *= factor;
            let after = holm_bonferroni(&lowered, 0.05);
            for (b, a) in before.iter().zip(&after) {
                prop_assert!(!b || *a);
            }
        }
    }
}
