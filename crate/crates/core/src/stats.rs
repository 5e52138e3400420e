//! Descriptive statistics shared by measurement summaries and usability scoring.

use crate::num::Real;

/// Arithmetic mean, `None` for an empty slice.
pub fn mean<F: Real>(xs: &[F]) -> Option<F> {
    if xs.is_empty() {
        return None;
    }
    let sum = xs.iter().fold(F::zero(), |acc, &x| acc + x);
    Some(sum / F::from_usize_lossy(xs.len()))
}

/// Sample standard deviation with the `n - 1` denominator. Needs two samples.
pub fn sample_std_dev<F: Real>(xs: &[F]) -> Option<F> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss = xs.iter().fold(F::zero(), |acc, &x| acc + (x - m) * (x - m));
    Some((ss / F::from_usize_lossy(xs.len() - 1)).sqrt())
}

/// Nearest-rank percentile over an ascending-sorted slice.
///
/// The 1-based rank is `ceil(percent * n / 100)`, clamped to `1..=n`, computed
/// in integer arithmetic so there is no rounding at rank boundaries.
pub fn nearest_rank<T: Copy>(sorted: &[T], percent: u32) -> Option<T> {
    let n = sorted.len();
    if n == 0 || percent > 100 {
        return None;
    }
    let rank = (percent as usize * n).div_ceil(100).max(1);
    Some(sorted[rank - 1])
}

/// Sorts floats ascending; NaN is not expected in latency data and sorts last.
pub fn sorted<F: Real>(xs: &[F]) -> Vec<F> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
    v
}
