//! Small numerical helpers shared across modules.

use std::f64::consts::PI;

/// `1 / sqrt(2π)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sum that does not depend on the order of `values`: the multiset is sorted
/// before compensated summation.
pub fn order_insensitive_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    neumaier_sum(sorted)
}

pub fn order_insensitive_mean(values: &[f64]) -> f64 {
    order_insensitive_sum(values) / values.len() as f64
}

pub fn mean(values: &[f64]) -> f64 {
    neumaier_sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance (`n - 1` denominator).
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    neumaier_sum(values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64
}

/// Quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be sorted ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn normal_pdf(t: f64, mean: f64, variance: f64) -> f64 {
    let z = t - mean;
    (-0.5 * z * z / variance).exp() / (2.0 * PI * variance).sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}
