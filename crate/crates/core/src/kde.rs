//! Gaussian kernel density estimation of mixture components.
//!
//! The oracle estimator builds component `i` from the observations whose
//! true label is `i`; the two-step estimator does the same with labels
//! predicted by a clusterer, ignoring observations in the reject cluster 0.
//! Both share one code path, so a perfect assignment reproduces the oracle
//! bit for bit.

use thiserror::Error;

use crate::model::{ClusterAssignment, DensityGrid, LabeledSample, ModelError};
use crate::numeric::{neumaier_sum, quantile_sorted, sample_variance, INV_SQRT_2PI};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdeError {
    #[error("degenerate sample: bandwidth selection needs at least 2 distinct values")]
    DegenerateSample,
    #[error("invalid bandwidth policy: {0}")]
    InvalidPolicy(String),
    #[error("sample has no labels; the oracle estimator needs the true components")]
    MissingLabels,
    #[error("assignment has {got} labels for a sample of size {expected}")]
    AssignmentLength { got: usize, expected: usize },
    #[error("assignment is for {got} components, sample has {expected}")]
    ComponentMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Candidate bandwidths for least-squares cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub enum LscvCandidates {
    /// Absolute bandwidths.
    Absolute(Vec<f64>),
    /// Multiples of the sample's Silverman bandwidth.
    SilvermanMultiples(Vec<f64>),
}

impl LscvCandidates {
    /// 60 log-spaced multiples of the Silverman bandwidth in `[0.05, 2]`.
    pub fn default_relative() -> Self {
        let count = 60;
        let (lo, hi) = (0.05f64.ln(), 2.0f64.ln());
        let factors = (0..count)
            .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
            .collect();
        LscvCandidates::SilvermanMultiples(factors)
    }

    fn values(&self) -> &[f64] {
        match self {
            LscvCandidates::Absolute(v) | LscvCandidates::SilvermanMultiples(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum BandwidthPolicy {
    Fixed(f64),
    #[default]
    Silverman,
    Lscv(LscvCandidates),
}

impl BandwidthPolicy {
    pub fn fixed(h: f64) -> Result<Self, KdeError> {
        let p = BandwidthPolicy::Fixed(h);
        p.validate()?;
        Ok(p)
    }

    pub fn lscv(candidates: LscvCandidates) -> Result<Self, KdeError> {
        let p = BandwidthPolicy::Lscv(candidates);
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), KdeError> {
        match self {
            BandwidthPolicy::Fixed(h) if !(h.is_finite() && *h > 0.0) => Err(
                KdeError::InvalidPolicy(format!("fixed bandwidth must be positive, got {h}")),
            ),
            BandwidthPolicy::Lscv(c) => {
                let v = c.values();
                if v.is_empty() {
                    return Err(KdeError::InvalidPolicy("empty lscv candidate list".into()));
                }
                if v.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                    return Err(KdeError::InvalidPolicy(
                        "lscv candidates must be positive".into(),
                    ));
                }
                if v.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(KdeError::InvalidPolicy(
                        "lscv candidates must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Standard normal density.
#[inline]
pub fn gaussian_kernel(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// `(1 / (N h)) Σ K((t - y_k) / h)`; zero for an empty point set.
pub fn kde_evaluate(points: &[f64], h: f64, t: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let s = neumaier_sum(points.iter().map(|&y| gaussian_kernel((t - y) / h)));
    s / (points.len() as f64 * h)
}

fn has_two_distinct(points: &[f64]) -> bool {
    points.iter().any(|&p| p != points[0])
}

/// `1.06 · min(σ̂, IQR / 1.34) · N^{-1/5}`. Falls back to `σ̂` alone when the
/// interquartile range is zero.
pub fn silverman_bandwidth(points: &[f64]) -> Result<f64, KdeError> {
    if points.len() < 2 || !has_two_distinct(points) {
        return Err(KdeError::DegenerateSample);
    }
    let sd = sample_variance(points).sqrt();
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(1.06 * spread * (points.len() as f64).powf(-0.2))
}

/// Least-squares cross-validation score of a Gaussian KDE:
/// `∫ f̂² - (2/n) Σ f̂_{-k}(y_k)`, both terms in closed form.
pub fn lscv_score(points: &[f64], h: f64) -> f64 {
    let n = points.len() as f64;
    let mut conv = 0.0;
    let mut loo = 0.0;
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            let u = (a - b) / h;
            let u2 = u * u;
            conv += (-0.25 * u2).exp();
            loo += (-0.5 * u2).exp();
        }
    }
    // Off-diagonal pairs counted twice; diagonal contributes n terms of
    // exp(0) to the convolution sum only.
    let inv_sqrt_4pi = INV_SQRT_2PI / std::f64::consts::SQRT_2;
    let integral_sq = inv_sqrt_4pi * (n + 2.0 * conv) / (n * n * h);
    let loo_term = 2.0 * INV_SQRT_2PI * 2.0 * loo / (n * (n - 1.0) * h);
    integral_sq - loo_term
}

pub fn select_bandwidth(points: &[f64], policy: &BandwidthPolicy) -> Result<f64, KdeError> {
    policy.validate()?;
    match policy {
        BandwidthPolicy::Fixed(h) => Ok(*h),
        BandwidthPolicy::Silverman => silverman_bandwidth(points),
        BandwidthPolicy::Lscv(candidates) => {
            let reference = silverman_bandwidth(points)?;
            let scale = match candidates {
                LscvCandidates::Absolute(_) => 1.0,
                LscvCandidates::SilvermanMultiples(_) => reference,
            };
            let mut best = (f64::INFINITY, 0.0);
            for &c in candidates.values() {
                let h = c * scale;
                let score = lscv_score(points, h);
                if score < best.0 {
                    best = (score, h);
                }
            }
            Ok(best.1)
        }
    }
}

/// One estimated mixture component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentEstimate {
    /// `N_i / n`.
    pub weight: f64,
    pub density: DensityGrid,
    pub support_count: usize,
    /// `None` for an empty component.
    pub bandwidth: Option<f64>,
}

/// Bandwidth for one component. A component too small for data-driven
/// selection borrows the bandwidth selected on the pooled responses.
pub fn component_bandwidth(
    points: &[f64],
    pooled: &[f64],
    policy: &BandwidthPolicy,
) -> Result<Option<f64>, KdeError> {
    if points.is_empty() {
        return Ok(None);
    }
    match select_bandwidth(points, policy) {
        Ok(h) => Ok(Some(h)),
        Err(KdeError::DegenerateSample) => select_bandwidth(pooled, policy).map(Some),
        Err(e) => Err(e),
    }
}

/// Responses grouped by label `1..=m`, in sample order; label 0 is dropped.
pub fn group_by_label(y: &[f64], labels: &[usize], m: usize) -> Vec<Vec<f64>> {
    let mut groups = vec![Vec::new(); m];
    for (&v, &l) in y.iter().zip(labels) {
        if l > 0 {
            groups[l - 1].push(v);
        }
    }
    groups
}

/// Bandwidths for every component of a labelling (used to size grids).
pub fn bandwidths_for_labels(
    y: &[f64],
    labels: &[usize],
    m: usize,
    policy: &BandwidthPolicy,
) -> Result<Vec<Option<f64>>, KdeError> {
    group_by_label(y, labels, m)
        .iter()
        .map(|g| component_bandwidth(g, y, policy))
        .collect()
}

/// Tabulates the KDE of `points` with bandwidth `h` on `grid`.
pub fn tabulate_kde(points: &[f64], h: f64, grid: &DensityGrid) -> DensityGrid {
    grid.tabulate(|t| kde_evaluate(points, h, t))
}

fn estimate_components(
    y: &[f64],
    labels: &[usize],
    m: usize,
    policy: &BandwidthPolicy,
    grid: &DensityGrid,
) -> Result<Vec<ComponentEstimate>, KdeError> {
    let n = y.len() as f64;
    group_by_label(y, labels, m)
        .into_iter()
        .map(|points| {
            let bandwidth = component_bandwidth(&points, y, policy)?;
            let density = match bandwidth {
                Some(h) => tabulate_kde(&points, h, grid),
                None => grid.zeroed(),
            };
            Ok(ComponentEstimate {
                weight: points.len() as f64 / n,
                density,
                support_count: points.len(),
                bandwidth,
            })
        })
        .collect()
}

/// Component estimates from the true labels.
pub fn oracle_estimate(
    sample: &LabeledSample,
    policy: &BandwidthPolicy,
    grid: &DensityGrid,
) -> Result<Vec<ComponentEstimate>, KdeError> {
    let labels = sample.labels().ok_or(KdeError::MissingLabels)?;
    estimate_components(sample.y(), labels, sample.m(), policy, grid)
}

/// Component estimates from predicted labels; reject-cluster observations
/// are excluded.
pub fn two_step_estimate(
    sample: &LabeledSample,
    assignment: &ClusterAssignment,
    policy: &BandwidthPolicy,
    grid: &DensityGrid,
) -> Result<Vec<ComponentEstimate>, KdeError> {
    if assignment.len() != sample.len() {
        return Err(KdeError::AssignmentLength {
            got: assignment.len(),
            expected: sample.len(),
        });
    }
    if assignment.m() != sample.m() {
        return Err(KdeError::ComponentMismatch {
            got: assignment.m(),
            expected: sample.m(),
        });
    }
    estimate_components(sample.y(), assignment.predicted(), sample.m(), policy, grid)
}

/// `[min(y) - 5 h_max, max(y) + 5 h_max]` with `points` abscissae.
pub fn padded_grid(y: &[f64], h_max: f64, points: usize) -> Result<DensityGrid, ModelError> {
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    crate::model::make_grid(lo - 5.0 * h_max, hi + 5.0 * h_max, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_grid, ClusterMethod};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_draws(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn kernel_values() {
        assert!((gaussian_kernel(0.0) - 0.398_942_280_4).abs() < 1e-10);
        assert_eq!(gaussian_kernel(1.0), gaussian_kernel(-1.0));
        assert!(gaussian_kernel(40.0) >= 0.0);
    }

    #[test]
    fn kernel_integrates_to_one() {
        let step = 1e-3;
        let values: Vec<f64> = (0..=16_000)
            .map(|j| gaussian_kernel(-8.0 + j as f64 * step))
            .collect();
        let mass = crate::model::trapezoid(&values, step);
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }

    #[test]
    fn kde_point_values() {
        assert!((kde_evaluate(&[0.0], 1.0, 0.0) - 0.398_942_280_4).abs() < 1e-10);
        // (K(1) + K(-1)) / 2 = K(1) = exp(-1/2)/sqrt(2π)
        assert!((kde_evaluate(&[-1.0, 1.0], 1.0, 0.0) - 0.241_970_724_519_143_37).abs() < 1e-12);
        assert_eq!(kde_evaluate(&[], 0.3, 1.0), 0.0);
    }

    #[test]
    fn bandwidth_policies() {
        let pts = normal_draws(300, 11);
        assert_eq!(
            select_bandwidth(&pts, &BandwidthPolicy::Fixed(0.25)).unwrap(),
            0.25
        );

        // Independent recomputation of the rule of thumb.
        let n = pts.len() as f64;
        let m = pts.iter().sum::<f64>() / n;
        let sd = (pts.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let mut s = pts.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| {
            let h = (n - 1.0) * p;
            let i = h.floor() as usize;
            s[i] + (h - i as f64) * (s[i + 1] - s[i])
        };
        let expected = 1.06 * sd.min((q(0.75) - q(0.25)) / 1.34) * n.powf(-0.2);
        let got = select_bandwidth(&pts, &BandwidthPolicy::Silverman).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn degenerate_samples_rejected() {
        for pts in [vec![1.0], vec![2.0, 2.0, 2.0]] {
            assert_eq!(silverman_bandwidth(&pts), Err(KdeError::DegenerateSample));
            let lscv = BandwidthPolicy::Lscv(LscvCandidates::default_relative());
            assert_eq!(
                select_bandwidth(&pts, &lscv),
                Err(KdeError::DegenerateSample)
            );
        }
    }

    #[test]
    fn invalid_policies_rejected() {
        assert!(BandwidthPolicy::fixed(0.0).is_err());
        assert!(BandwidthPolicy::fixed(-1.0).is_err());
        assert!(BandwidthPolicy::lscv(LscvCandidates::Absolute(vec![])).is_err());
        assert!(BandwidthPolicy::lscv(LscvCandidates::Absolute(vec![0.2, 0.1])).is_err());
        assert!(BandwidthPolicy::lscv(LscvCandidates::Absolute(vec![0.0, 0.1])).is_err());
        assert!(BandwidthPolicy::lscv(LscvCandidates::Absolute(vec![0.1, 0.2])).is_ok());
    }

    #[test]
    fn lscv_score_matches_numerical_integration() {
        let pts = [-1.2, -0.3, 0.1, 0.9, 2.0];
        let h = 0.4;
        let grid = make_grid(-8.0, 9.0, 20_001).unwrap();
        let sq = grid.tabulate(|t| kde_evaluate(&pts, h, t).powi(2)).mass();
        let loo: f64 = (0..pts.len())
            .map(|k| {
                let rest: Vec<f64> = pts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, v)| *v)
                    .collect();
                kde_evaluate(&rest, h, pts[k])
            })
            .sum();
        let expected = sq - 2.0 * loo / pts.len() as f64;
        assert!((lscv_score(&pts, h) - expected).abs() < 1e-9);
    }

    #[test]
    fn lscv_adapts_to_bimodality() {
        let policy = BandwidthPolicy::Lscv(LscvCandidates::default_relative());
        let mut narrower = 0;
        for seed in 0..100 {
            let pts: Vec<f64> = normal_draws(200, 1000 + seed)
                .iter()
                .enumerate()
                .map(|(i, z)| if i % 2 == 0 { z - 3.0 } else { z + 3.0 })
                .collect();
            let lscv = select_bandwidth(&pts, &policy).unwrap();
            let silverman = silverman_bandwidth(&pts).unwrap();
            if lscv <= silverman {
                narrower += 1;
            }
        }
        assert!(narrower >= 90, "lscv narrower in {narrower}/100 trials");
    }

    fn sample(y: Vec<f64>, labels: Vec<usize>) -> LabeledSample {
        let x = y.iter().map(|v| vec![*v]).collect();
        LabeledSample::new(y, x, Some(labels), 2).unwrap()
    }

    #[test]
    fn oracle_balanced_split() {
        let s = sample(vec![0.0, 0.0, 10.0, 10.0], vec![1, 1, 2, 2]);
        let grid = make_grid(-5.0, 15.0, 401).unwrap();
        let est = oracle_estimate(&s, &BandwidthPolicy::Fixed(1.0), &grid).unwrap();
        assert_eq!(est[0].weight, 0.5);
        assert_eq!(est[1].weight, 0.5);
        let argmax = |g: &DensityGrid| {
            let v = g.values();
            let j = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
            g.abscissa(j)
        };
        assert_eq!(argmax(&est[0].density), 0.0);
        assert_eq!(argmax(&est[1].density), 10.0);
    }

    #[test]
    fn oracle_empty_component() {
        let s = sample(vec![0.0, 0.3, 1.0, 2.0], vec![1, 1, 1, 1]);
        let grid = make_grid(-5.0, 7.0, 256).unwrap();
        let est = oracle_estimate(&s, &BandwidthPolicy::Silverman, &grid).unwrap();
        assert_eq!(est[0].weight, 1.0);
        assert_eq!(est[1].weight, 0.0);
        assert_eq!(est[1].support_count, 0);
        assert_eq!(est[1].bandwidth, None);
        assert!(est[1].density.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oracle_components_integrate_to_one() {
        let z = normal_draws(200, 5);
        let labels: Vec<usize> = (0..200).map(|i| 1 + i % 2).collect();
        let y: Vec<f64> = z
            .iter()
            .zip(&labels)
            .map(|(v, &l)| if l == 1 { v - 2.0 } else { 3.0 * v + 4.0 })
            .collect();
        let s = sample(y.clone(), labels.clone());
        let policy = BandwidthPolicy::Silverman;
        let hs = bandwidths_for_labels(&y, &labels, 2, &policy).unwrap();
        let h_max = hs.iter().flatten().copied().fold(0.0, f64::max);
        let grid = padded_grid(&y, h_max, 1024).unwrap();
        for c in oracle_estimate(&s, &policy, &grid).unwrap() {
            assert!(
                (c.density.mass() - 1.0).abs() < 1e-3,
                "{}",
                c.density.mass()
            );
        }
    }

    #[test]
    fn two_step_with_truth_equals_oracle() {
        let z = normal_draws(150, 8);
        let labels: Vec<usize> = z.iter().map(|v| if *v > 0.2 { 2 } else { 1 }).collect();
        let s = sample(z.clone(), labels.clone());
        let grid = make_grid(-6.0, 6.0, 1024).unwrap();
        let policy = BandwidthPolicy::Silverman;
        let oracle = oracle_estimate(&s, &policy, &grid).unwrap();
        let truth = ClusterAssignment::from_truth(&labels, 2).unwrap();
        let two_step = two_step_estimate(&s.hide_labels(), &truth, &policy, &grid).unwrap();
        assert_eq!(oracle, two_step);
    }

    #[test]
    fn two_step_minimal_clusters() {
        let s = sample(vec![-1.0, 0.5, 2.0, 3.0, 7.0], vec![1, 1, 2, 2, 2]);
        let a =
            ClusterAssignment::new(vec![0, 1, 0, 2, 0], 2, None, ClusterMethod::Interval).unwrap();
        let grid = make_grid(-5.0, 10.0, 601).unwrap();
        let h = 0.5;
        let est = two_step_estimate(&s, &a, &BandwidthPolicy::Fixed(h), &grid).unwrap();
        assert_eq!(est[0].weight, 0.2);
        assert_eq!(est[1].weight, 0.2);
        for (c, center) in est.iter().zip([0.5, 3.0]) {
            for (j, v) in c.density.values().iter().enumerate() {
                let t = grid.abscissa(j);
                assert_eq!(*v, gaussian_kernel((t - center) / h) / h);
            }
        }
    }

    #[test]
    fn singleton_component_borrows_pooled_bandwidth() {
        let s = sample(vec![-1.0, 0.5, 2.0, 3.0, 7.0], vec![1, 1, 2, 2, 2]);
        let a = ClusterAssignment::new(vec![1, 2, 2, 2, 2], 2, None, ClusterMethod::RadiusGraph)
            .unwrap();
        let grid = make_grid(-10.0, 15.0, 512).unwrap();
        let est = two_step_estimate(&s, &a, &BandwidthPolicy::Silverman, &grid).unwrap();
        assert_eq!(est[0].bandwidth, Some(silverman_bandwidth(s.y()).unwrap()));
    }

    #[test]
    fn weights_sum_excludes_rejects() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = normal_draws(40, 4);
        let s = sample(y, (0..40).map(|i| 1 + i % 2).collect());
        let grid = make_grid(-6.0, 6.0, 64).unwrap();
        for _ in 0..50 {
            let pred: Vec<usize> = (0..40).map(|_| rng.random_range(0..=2)).collect();
            let zeros = pred.iter().filter(|&&l| l == 0).count();
            let a = ClusterAssignment::new(pred, 2, None, ClusterMethod::Interval).unwrap();
            let est = two_step_estimate(&s, &a, &BandwidthPolicy::Fixed(0.3), &grid).unwrap();
            let total: f64 = est.iter().map(|c| c.weight).sum();
            assert!((total - (1.0 - zeros as f64 / 40.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_assignment_rejected() {
        let s = sample(vec![0.0, 1.0], vec![1, 2]);
        let a = ClusterAssignment::new(vec![1], 2, None, ClusterMethod::KMeans).unwrap();
        let grid = make_grid(-1.0, 1.0, 8).unwrap();
        assert!(matches!(
            two_step_estimate(&s, &a, &BandwidthPolicy::Fixed(1.0), &grid),
            Err(KdeError::AssignmentLength { .. })
        ));
        assert_eq!(
            oracle_estimate(&s.hide_labels(), &BandwidthPolicy::Fixed(1.0), &grid),
            Err(KdeError::MissingLabels)
        );
    }
}
