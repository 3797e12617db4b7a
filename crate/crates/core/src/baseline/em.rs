//! EM for a univariate Gaussian mixture with unequal variances.

use super::kmeans::kmeans_plus_plus;
use super::BaselineError;
use crate::model::DensityGrid;
use crate::numeric::{mean, neumaier_sum, normal_pdf, sample_variance};
use crate::rng::stream;

pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-8;
/// Variances are floored at this fraction of the sample variance.
pub const VARIANCE_FLOOR_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureFit {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    /// Log-likelihood after each M-step.
    pub loglik_history: Vec<f64>,
}

impl GaussianMixtureFit {
    pub fn components(&self) -> usize {
        self.weights.len()
    }
}

fn log_likelihood(y: &[f64], weights: &[f64], means: &[f64], variances: &[f64]) -> f64 {
    neumaier_sum(y.iter().map(|&v| {
        let logs: Vec<f64> = (0..weights.len())
            .map(|c| weights[c].ln() + normal_pdf(v, means[c], variances[c]).ln())
            .collect();
        log_sum_exp(&logs)
    }))
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn log_normal_pdf(t: f64, mean: f64, variance: f64) -> f64 {
    let z = t - mean;
    -0.5 * (z * z / variance + (2.0 * std::f64::consts::PI * variance).ln())
}

/// Fits `m` components by EM, starting from k-means++ centers on `y`, equal
/// weights and the pooled sample variance. Stops when the relative
/// log-likelihood gain falls below `tol` or after `max_iter` iterations.
pub fn em_gaussian_1d(
    y: &[f64],
    m: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<GaussianMixtureFit, BaselineError> {
    let n = y.len();
    if m == 0 {
        return Err(BaselineError::InvalidArgument(
            "m must be at least 1".into(),
        ));
    }
    if n < 2 * m {
        return Err(BaselineError::TooFewPoints { n, k: 2 * m });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(BaselineError::NonFinite);
    }
    let pooled = sample_variance(y);
    let floor = if pooled > 0.0 {
        VARIANCE_FLOOR_FRACTION * pooled
    } else {
        f64::MIN_POSITIVE
    };

    let points: Vec<Vec<f64>> = y.iter().map(|&v| vec![v]).collect();
    let mut rng = stream(seed);
    let mut means: Vec<f64> = kmeans_plus_plus(&points, m, &mut rng)
        .into_iter()
        .map(|c| c[0])
        .collect();
    let mut weights = vec![1.0 / m as f64; m];
    let mut variances = vec![pooled.max(floor); m];

    let mut resp = vec![vec![0.0; m]; n];
    let mut history = Vec::new();
    let mut loglik = f64::NEG_INFINITY;
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        // E-step.
        let mut logs = vec![0.0; m];
        for (k, &v) in y.iter().enumerate() {
            for c in 0..m {
                logs[c] = weights[c].ln() + log_normal_pdf(v, means[c], variances[c]);
            }
            let norm = log_sum_exp(&logs);
            for c in 0..m {
                resp[k][c] = (logs[c] - norm).exp();
            }
        }
        // M-step.
        for c in 0..m {
            let nk = neumaier_sum(resp.iter().map(|r| r[c]));
            if nk <= 0.0 {
                // Component lost all mass; leave its parameters in place.
                weights[c] = f64::MIN_POSITIVE;
                continue;
            }
            let mu = neumaier_sum(resp.iter().zip(y).map(|(r, &v)| r[c] * v)) / nk;
            let var =
                neumaier_sum(resp.iter().zip(y).map(|(r, &v)| r[c] * (v - mu) * (v - mu))) / nk;
            weights[c] = nk / n as f64;
            means[c] = mu;
            variances[c] = var.max(floor);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);

        let next = log_likelihood(y, &weights, &means, &variances);
        if !next.is_finite() {
            return Err(BaselineError::Numeric(
                "EM log-likelihood is not finite".into(),
            ));
        }
        history.push(next);
        let gain = next - loglik;
        loglik = next;
        if gain.abs() < tol * next.abs().max(1.0) {
            break;
        }
    }
    Ok(GaussianMixtureFit {
        weights,
        means,
        variances,
        loglik,
        iterations,
        loglik_history: history,
    })
}

/// Normal density of component `component` (1-based) on `grid`.
pub fn gaussian_density_grid(
    fit: &GaussianMixtureFit,
    component: usize,
    grid: &DensityGrid,
) -> Result<DensityGrid, BaselineError> {
    if component == 0 || component > fit.components() {
        return Err(BaselineError::InvalidArgument(format!(
            "component {component} out of range 1..={}",
            fit.components()
        )));
    }
    let (mu, var) = (fit.means[component - 1], fit.variances[component - 1]);
    Ok(grid.tabulate(|t| normal_pdf(t, mu, var)))
}

/// Sample mean and MLE variance; the closed-form one-component fit.
pub fn single_gaussian_mle(y: &[f64]) -> (f64, f64) {
    let mu = mean(y);
    let var = neumaier_sum(y.iter().map(|v| (v - mu) * (v - mu))) / y.len() as f64;
    (mu, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_grid;
    use rand_distr::{Distribution, StandardNormal};

    fn two_normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed);
        (0..n)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if i % 2 == 0 {
                    z - 5.0
                } else {
                    z + 5.0
                }
            })
            .collect()
    }

    #[test]
    fn recovers_separated_components() {
        for seed in 0..20 {
            let y = two_normals(1000, 100 + seed);
            let fit = em_gaussian_1d(&y, 2, seed, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
            let (lo, hi) = if fit.means[0] < fit.means[1] {
                (0, 1)
            } else {
                (1, 0)
            };
            assert!((fit.means[lo] + 5.0).abs() < 0.2, "{:?}", fit.means);
            assert!((fit.means[hi] - 5.0).abs() < 0.2, "{:?}", fit.means);
            assert!((fit.weights[lo] - 0.5).abs() < 0.05);
            assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_component_is_closed_form() {
        let y = two_normals(200, 3);
        let fit = em_gaussian_1d(&y, 1, 0, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let (mu, var) = single_gaussian_mle(&y);
        assert!((fit.means[0] - mu).abs() < 1e-12);
        assert!((fit.variances[0] - var).abs() < 1e-10);
        assert_eq!(fit.weights, vec![1.0]);
        // The first M-step already reaches the optimum.
        assert_eq!(fit.loglik_history[0], fit.loglik);
    }

    #[test]
    fn loglik_nondecreasing() {
        for seed in 0..20 {
            let mut rng = stream(seed);
            let y: Vec<f64> = (0..300)
                .map(|i| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if i % 4 == 0 {
                        z + 0.5
                    } else {
                        z - 0.5
                    }
                })
                .collect();
            let fit = em_gaussian_1d(&y, 2, seed, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
            for w in fit.loglik_history.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{:?}", fit.loglik_history);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            em_gaussian_1d(&[1.0, 2.0, 3.0], 2, 0, 10, 1e-8),
            Err(BaselineError::TooFewPoints { .. })
        ));
        assert!(matches!(
            em_gaussian_1d(&[1.0, f64::NAN, 3.0, 4.0], 2, 0, 10, 1e-8),
            Err(BaselineError::NonFinite)
        ));
    }

    #[test]
    fn collapsed_variance_is_floored() {
        let y = [0.0, 0.0, 0.0, 0.0, 10.0, 11.0, 12.0, 13.0];
        let fit = em_gaussian_1d(&y, 2, 1, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let floor = VARIANCE_FLOOR_FRACTION * sample_variance(&y);
        assert!(fit.variances.iter().all(|&v| v >= floor));
    }

    #[test]
    fn density_grid_values() {
        let fit = GaussianMixtureFit {
            weights: vec![1.0],
            means: vec![0.0],
            variances: vec![1.0],
            loglik: 0.0,
            iterations: 0,
            loglik_history: vec![],
        };
        let grid = make_grid(-8.0, 8.0, 1601).unwrap();
        let g = gaussian_density_grid(&fit, 1, &grid).unwrap();
        assert!((g.values()[800] - 0.398_942_280_4).abs() < 1e-10);
        assert!((g.mass() - 1.0).abs() < 1e-6);
        for d in 1..800 {
            assert!((g.values()[800 + d] - g.values()[800 - d]).abs() < 1e-12);
        }
        assert!(gaussian_density_grid(&fit, 2, &grid).is_err());
    }
}
