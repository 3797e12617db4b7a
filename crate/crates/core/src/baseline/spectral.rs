//! Normalized spectral clustering with a Gaussian similarity.
//!
//! `W_kl = exp(-‖x_k - x_l‖² / (2σ²))` with a zero diagonal, embedding rows
//! taken from the eigenvectors of the `k` smallest eigenvalues of the
//! symmetric normalized Laplacian `I - D^{-1/2} W D^{-1/2}`, normalized to
//! unit length, then clustered by k-means.

use faer::{Mat, Side};

use super::kmeans::{kmeans_fit, labels_by_first_member, DEFAULT_RESTARTS};
use super::BaselineError;
use crate::model::{ClusterAssignment, ClusterMethod};
use crate::numeric::euclidean;

/// Bandwidth of the Gaussian similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralSigma {
    Fixed(f64),
    /// Median of the nonzero pairwise distances.
    MedianDistance,
    /// Scan a ladder of bandwidths built from the pairwise-distance range and
    /// keep the one whose embedding k-means fit has the smallest
    /// within-cluster sum of squares.
    DistortionSearch,
}

impl SpectralSigma {
    pub fn name(&self) -> String {
        match self {
            SpectralSigma::Fixed(s) => format!("{s}"),
            SpectralSigma::MedianDistance => "median".into(),
            SpectralSigma::DistortionSearch => "search".into(),
        }
    }
}

impl std::str::FromStr for SpectralSigma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "median" => Ok(SpectralSigma::MedianDistance),
            "search" | "auto" => Ok(SpectralSigma::DistortionSearch),
            other => match other.parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => Ok(SpectralSigma::Fixed(v)),
                _ => Err(format!("invalid spectral sigma '{other}' (expected median, search or a positive number)")),
            },
        }
    }
}

/// Symmetric matrix of pairwise Euclidean distances.
pub fn pairwise_distances(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = euclidean(&points[i], &points[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

pub fn similarity_matrix(dist: &[Vec<f64>], sigma: f64) -> Vec<Vec<f64>> {
    let scale = 1.0 / (2.0 * sigma * sigma);
    dist.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &d)| if i == j { 0.0 } else { (-d * d * scale).exp() })
                .collect()
        })
        .collect()
}

fn median_nonzero_distance(dist: &[Vec<f64>]) -> Option<f64> {
    let mut v: Vec<f64> = dist
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row[i + 1..].iter().copied())
        .filter(|&d| d > 0.0)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Row-normalized spectral embedding in `k` dimensions.
pub fn spectral_embedding(
    dist: &[Vec<f64>],
    sigma: f64,
    k: usize,
) -> Result<Vec<Vec<f64>>, BaselineError> {
    let n = dist.len();
    let w = similarity_matrix(dist, sigma);
    let degrees: Vec<f64> = w.iter().map(|row| row.iter().sum()).collect();
    if let Some(point) = degrees.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(BaselineError::IsolatedPoint { point, sigma });
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let a = Mat::<f64>::from_fn(n, n, |i, j| inv_sqrt[i] * w[i][j] * inv_sqrt[j]);
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| BaselineError::Numeric(format!("eigendecomposition failed: {e:?}")))?;
    let vectors = eig.U();
    // Eigenvalues come in nondecreasing order: the largest of the normalized
    // affinity are the smallest of the Laplacian.
    let cols: Vec<usize> = (n - k..n).rev().collect();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<f64> = cols.iter().map(|&c| vectors[(i, c)]).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Candidate bandwidths spanning the pairwise-distance range: geometric
/// steps below half the mean distance, fine linear steps around the mean,
/// geometric steps above twice the mean.
pub fn sigma_ladder(dist: &[Vec<f64>]) -> Vec<f64> {
    let pairs: Vec<f64> = dist
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row[i + 1..].iter().copied())
        .collect();
    let positive: Vec<f64> = pairs.iter().copied().filter(|&d| d > 0.0).collect();
    if positive.is_empty() {
        return Vec::new();
    }
    let kmin = positive.iter().copied().fold(f64::INFINITY, f64::min);
    let kmax = positive.iter().copied().fold(0.0, f64::max);
    let kmean = pairs.iter().sum::<f64>() / pairs.len() as f64;
    let mid_lo = (kmean / 2.0).max(kmin);
    let mid_hi = (2.0 * kmean).min(kmax);

    let mut out = Vec::new();
    let lo_exp = (mid_lo.log2() - 0.5, kmin.log2());
    let step = (lo_exp.0 - lo_exp.1).min(0.5);
    if step > 0.0 {
        let mut e = lo_exp.1;
        while e <= lo_exp.0 + 1e-12 {
            out.push(e.exp2());
            e += step;
        }
    }
    let mut s = mid_lo;
    while s <= 0.9 * kmean + 1e-12 {
        out.push(s);
        s += 0.05 * kmean;
    }
    let mut s = kmean;
    while s <= mid_hi + 1e-12 {
        out.push(s);
        s += 0.08 * kmean;
    }
    let hi_exp = (mid_hi.log2() + 0.5, kmax.log2());
    let step = (hi_exp.1 - hi_exp.0).min(0.5);
    if step > 0.0 {
        let mut e = hi_exp.0;
        while e <= hi_exp.1 + 1e-12 {
            out.push(e.exp2());
            e += step;
        }
    }
    out.retain(|s| s.is_finite() && *s > 0.0);
    out
}

/// Degree spread above which a bandwidth is skipped during the search.
const MAX_INV_SQRT_DEGREE_SPREAD: f64 = 1e4;

fn usable_for_search(dist: &[Vec<f64>], sigma: f64) -> bool {
    let w = similarity_matrix(dist, sigma);
    let inv: Vec<f64> = w
        .iter()
        .map(|row| 1.0 / row.iter().sum::<f64>().sqrt())
        .collect();
    if inv.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let max = inv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = inv.iter().copied().fold(f64::INFINITY, f64::min);
    max - min < MAX_INV_SQRT_DEGREE_SPREAD
}

/// Result of spectral clustering with the bandwidth actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFit {
    pub assignment: ClusterAssignment,
    pub sigma: f64,
    pub distortion: f64,
}

pub fn spectral_fit(
    points: &[Vec<f64>],
    k: usize,
    sigma: SpectralSigma,
    seed: u64,
) -> Result<SpectralFit, BaselineError> {
    let n = points.len();
    if k == 0 {
        return Err(BaselineError::InvalidArgument(
            "k must be at least 1".into(),
        ));
    }
    if n < k {
        return Err(BaselineError::TooFewPoints { n, k });
    }
    let dist = pairwise_distances(points);
    let run = |s: f64| -> Result<(Vec<usize>, f64), BaselineError> {
        let emb = spectral_embedding(&dist, s, k)?;
        let fit = kmeans_fit(&emb, k, DEFAULT_RESTARTS, seed)?;
        Ok((fit.assignment, fit.wcss))
    };
    let (assignment, used, distortion) = match sigma {
        SpectralSigma::Fixed(s) => {
            let (a, d) = run(s)?;
            (a, s, d)
        }
        SpectralSigma::MedianDistance => {
            let s = median_nonzero_distance(&dist).ok_or(BaselineError::IsolatedPoint {
                point: 0,
                sigma: 0.0,
            })?;
            let (a, d) = run(s)?;
            (a, s, d)
        }
        SpectralSigma::DistortionSearch => {
            let mut best: Option<(Vec<usize>, f64, f64)> = None;
            for s in sigma_ladder(&dist) {
                if !usable_for_search(&dist, s) {
                    continue;
                }
                let Ok((a, d)) = run(s) else { continue };
                if best.as_ref().is_none_or(|b| d < b.2) {
                    best = Some((a, s, d));
                }
            }
            best.ok_or_else(|| {
                BaselineError::Numeric("no usable bandwidth in the spectral search".into())
            })?
        }
    };
    let labels = labels_by_first_member(&assignment, k);
    Ok(SpectralFit {
        assignment: ClusterAssignment::new(labels, k, None, ClusterMethod::Spectral)?,
        sigma: used,
        distortion,
    })
}

pub fn spectral_cluster(
    points: &[Vec<f64>],
    k: usize,
    sigma: SpectralSigma,
    seed: u64,
) -> Result<ClusterAssignment, BaselineError> {
    spectral_fit(points, k, sigma, seed).map(|f| f.assignment)
}
