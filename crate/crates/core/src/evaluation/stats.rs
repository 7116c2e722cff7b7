//! Rank statistics and simple summaries.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};

/// Ranks starting at 1; tied values share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Spearman rank correlation. A constant series has no association and
/// yields 0.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} vs {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(invalid("spearman needs at least two points"));
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

pub fn iqr(values: &[f64]) -> Option<f64> {
    Some(quantile(values, 0.75)? - quantile(values, 0.25)?)
}

/// Sample mean and standard error of the mean.
pub fn mean_sem(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((mean, (var / n as f64).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WilcoxonMethod {
    /// Exact null distribution below 20 non-zero differences, normal
    /// approximation otherwise.
    Auto,
    Normal,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Non-zero differences used.
    pub n: usize,
    /// Rank sum of positive differences `x - y`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Normal score with tie-corrected variance and continuity correction.
    pub z: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Minimum number of non-zero differences accepted.
pub const WILCOXON_MIN_N: usize = 6;
const EXACT_BELOW: usize = 20;

pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with(pairs, WilcoxonMethod::Auto)
}

/// Two-sided signed-rank test on `x - y`. Zero differences are dropped and
/// tied magnitudes share average ranks.
pub fn wilcoxon_signed_rank_with(
    pairs: &[(f64, f64)],
    method: WilcoxonMethod,
) -> Result<WilcoxonResult> {
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(invalid("paired values must be finite"));
    }
    let n = diffs.len();
    if n == 0 {
        return Err(Error::NoDifferences);
    }
    if n < WILCOXON_MIN_N {
        return Err(invalid(format!(
            "signed-rank test needs at least {WILCOXON_MIN_N} non-zero differences, got {n}"
        )));
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes(&magnitudes).map(|t| t.powi(3) - t).sum::<f64>() / 48.0;
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let diff = w_plus - mean;
    let z = if diff.abs() <= 0.5 || variance <= 0.0 {
        0.0
    } else {
        (diff - 0.5 * diff.signum()) / variance.sqrt()
    };

    let exact = match method {
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
        WilcoxonMethod::Auto => n < EXACT_BELOW,
    };
    let p_value = if exact {
        exact_two_sided(&ranks, w_plus)
    } else {
        erfc(z.abs() / std::f64::consts::SQRT_2)
    }
    .min(1.0);
    Ok(WilcoxonResult {
        n,
        w_plus,
        w_minus,
        z,
        p_value,
        exact,
    })
}

fn tie_sizes(values: &[f64]) -> impl Iterator<Item = f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        if j - i > 1 {
            sizes.push((j - i) as f64);
        }
        i = j;
    }
    sizes.into_iter()
}

/// Exact two-sided p under random signs, by dynamic programming over the
/// doubled (integer) ranks.
fn exact_two_sided(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total: f64 = counts.iter().sum();
    // `max` is twice the rank total, so doubled sums are centred on `max / 2`.
    let observed = (2.0 * w_plus - max as f64 / 2.0).abs();
    let extreme: f64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as f64 - max as f64 / 2.0).abs() >= observed - 1e-9)
        .map(|(_, c)| c)
        .sum();
    extreme / total
}
