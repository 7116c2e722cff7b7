//! Agreement between two partitions of the same items.

use crate::error::{invalid, Error, Result};

/// Cluster label per item.
pub type Labeling = Vec<usize>;

/// Fraction of item pairs on which the two labelings agree (both together or
/// both apart).
pub fn rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "labelings of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(invalid("rand index needs at least two items"));
    }
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as u64;
    Ok(agree as f64 / pairs as f64)
}

/// Expected agreement of a uniformly random labeling with `k` equally sized
/// ground-truth classes, in the large-sample limit: `1/k² + ((k-1)/k)²`.
pub fn rand_chance_level(k: usize) -> f64 {
    let k = k as f64;
    1.0 / (k * k) + ((k - 1.0) / k).powi(2)
}
