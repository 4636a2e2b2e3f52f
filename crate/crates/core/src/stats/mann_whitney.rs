use std::f64::consts::SQRT_2;

use statrs::function::erf::erfc;

use super::StatsError;

/// Largest pooled sample size tested by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// `Σ [x > y] + 0.5 · Σ [x = y]` over all pairs.
    pub u: f64,
    /// Two-sided p-value in (0, 1].
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of `values`, and the sizes of their tie groups.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut groups = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        groups.push(j - i + 1);
        i = j + 1;
    }
    (ranks, groups)
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Number of orderings of `nx` x's and `ny` y's giving each tie-free U.
fn u_distribution(nx: usize, ny: usize) -> Vec<u64> {
    let mut f = vec![vec![Vec::<u64>::new(); ny + 1]; nx + 1];
    for i in 0..=nx {
        for j in 0..=ny {
            let mut counts = vec![0u64; i * j + 1];
            if i == 0 || j == 0 {
                counts[0] = 1;
            } else {
                // the largest value is an x (beating all j y's) or a y
                for (u, c) in f[i - 1][j].iter().enumerate() {
                    counts[u + j] += c;
                }
                for (u, c) in f[i][j - 1].iter().enumerate() {
                    counts[u] += c;
                }
            }
            f[i][j] = counts;
        }
    }
    std::mem::take(&mut f[nx][ny])
}

/// Over every choice of which pooled midranks belong to x, counts the splits
/// with 2U at most and at least `twice_u`, and the total.
fn tail_counts_by_splits(twice_ranks: &[i64], nx: usize, twice_u: i64) -> (u64, u64, u64) {
    let n = twice_ranks.len();
    let offset = (nx * (nx + 1)) as i64;
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    let mut mask: u64 = (1u64 << nx) - 1;
    while mask < 1u64 << n {
        let mut sum = 0i64;
        let mut m = mask;
        while m != 0 {
            sum += twice_ranks[m.trailing_zeros() as usize];
            m &= m - 1;
        }
        let u2 = sum - offset;
        le += u64::from(u2 <= twice_u);
        ge += u64::from(u2 >= twice_u);
        total += 1;
        // Gosper's hack: next mask with the same number of set bits
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    (le, ge, total)
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

fn normal_p(u: f64, nx: usize, ny: usize, tie_groups: &[usize]) -> f64 {
    let (fx, fy) = (nx as f64, ny as f64);
    let n = fx + fy;
    let ties: f64 = tie_groups.iter().map(|&t| (t * t * t - t) as f64).sum();
    let variance = fx * fy / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if !(variance > 0.0) {
        return 1.0;
    }
    let z = ((u - fx * fy / 2.0).abs() - 0.5).max(0.0) / variance.sqrt();
    clamp_p(erfc(z / SQRT_2))
}

fn prepare(xs: &[f64], ys: &[f64]) -> Result<(f64, Vec<f64>, Vec<usize>), StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let (ranks, groups) = midranks(&pooled);
    let nx = xs.len() as f64;
    let u = ranks[..xs.len()].iter().sum::<f64>() - nx * (nx + 1.0) / 2.0;
    Ok((u, ranks, groups))
}

/// Two-sided Mann-Whitney U test.
///
/// With at most 20 pooled observations the null distribution is enumerated
/// exactly: by recurrence when there are no ties, otherwise over every split
/// of the pooled midranks. Larger samples use the normal approximation with
/// tie-corrected variance and a 0.5 continuity correction.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64]) -> Result<MannWhitney, StatsError> {
    let (u, ranks, groups) = prepare(xs, ys)?;
    let (nx, ny) = (xs.len(), ys.len());
    if nx + ny > EXACT_MAX_N {
        return Ok(MannWhitney { u, p: normal_p(u, nx, ny, &groups), exact: false });
    }
    let twice_u = (2.0 * u).round() as i64;
    let (le, ge, total) = if groups.iter().all(|&g| g == 1) {
        let dist = u_distribution(nx, ny);
        let k = (twice_u / 2) as usize;
        (dist[..=k].iter().sum(), dist[k..].iter().sum(), binomial(nx + ny, nx))
    } else {
        let twice_ranks: Vec<i64> = ranks.iter().map(|r| (2.0 * r).round() as i64).collect();
        tail_counts_by_splits(&twice_ranks, nx, twice_u)
    };
    let p = (2.0 * le.min(ge) as f64 / total as f64).min(1.0);
    Ok(MannWhitney { u, p: clamp_p(p), exact: true })
}

/// Normal-approximation p-value at any sample size.
pub fn mann_whitney_normal_p(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    let (u, _, groups) = prepare(xs, ys)?;
    Ok(normal_p(u, xs.len(), ys.len(), &groups))
}
