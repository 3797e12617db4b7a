//! Seeded simulation scenarios: a univariate Gaussian mixture for the
//! response and one of five two-component covariate families.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::model::{DensityGrid, LabeledSample, ModelError};
use crate::numeric::normal_pdf;
use crate::rng::stream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("component {component} out of range 1..={m}")]
    ComponentOutOfRange { component: usize, m: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// Univariate Gaussian mixture `Σ α_i N(μ_i, σ_i²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture1d {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl GaussianMixture1d {
    /// `3/4 N(-Δ, 1) + 1/4 N(Δ, 1)`.
    pub fn separated(delta: f64) -> Self {
        Self {
            weights: vec![0.75, 0.25],
            means: vec![-delta, delta],
            variances: vec![1.0, 1.0],
        }
    }

    /// `1/2 N(-1, 1) + 1/2 N(1, 1)`.
    pub fn balanced() -> Self {
        Self {
            weights: vec![0.5, 0.5],
            means: vec![-1.0, 1.0],
            variances: vec![1.0, 1.0],
        }
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let m = self.weights.len();
        if m < 1 || self.means.len() != m || self.variances.len() != m {
            return Err(invalid(
                "mixture weights, means and variances must have equal nonzero length",
            ));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("mixture weights must be positive"));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("mixture weights must sum to 1"));
        }
        if self.means.iter().any(|v| !v.is_finite()) {
            return Err(invalid("mixture means must be finite"));
        }
        if self.variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("mixture variances must be positive"));
        }
        Ok(())
    }
}

/// Conditional covariate distributions `g_1`, `g_2`.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateModel {
    /// `g_1 = U(0, 1)`, `g_2 = U(1 + gap, 3 + gap)`.
    Uniform { gap: f64 },
    /// Laplace laws with scale `sigma` centred at `mu1` and `mu1 + ell`.
    Laplace { ell: f64, sigma: f64, mu1: f64 },
    /// `g_1 = U[0, 1]`, `g_2 = U[1 - lambda, 2 - lambda]`.
    ToyUniform { lambda: f64 },
    /// `g_1 = N((a, 0), I_2)`, `g_2 = U([-1, 1]²)`.
    CircleSquare { a: f64 },
    /// Uniform on the annuli of radii `r1 ± eps` and `r2 ± eps`.
    Concentric { r1: f64, r2: f64, eps: f64 },
}

impl CovariateModel {
    pub fn laplace(ell: f64) -> Self {
        CovariateModel::Laplace {
            ell,
            sigma: 1.0,
            mu1: 1.0,
        }
    }

    pub fn concentric(r2: f64) -> Self {
        CovariateModel::Concentric {
            r1: 0.3,
            r2,
            eps: 0.15,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CovariateModel::CircleSquare { .. } | CovariateModel::Concentric { .. } => 2,
            _ => 1,
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            CovariateModel::Uniform { gap } => pos(gap, "uniform gap"),
            CovariateModel::Laplace { ell, sigma, mu1 } => {
                pos(ell, "laplace ell")?;
                pos(sigma, "laplace sigma")?;
                if mu1.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("laplace mu1 must be finite"))
                }
            }
            CovariateModel::ToyUniform { lambda } => pos(lambda, "toy lambda"),
            CovariateModel::CircleSquare { a } => pos(a, "circle-square a"),
            CovariateModel::Concentric { r1, r2, eps } => {
                pos(r1, "concentric r1")?;
                pos(r2, "concentric r2")?;
                pos(eps, "concentric eps")?;
                if r1 - eps < 0.0 {
                    return Err(invalid("concentric r1 must be at least eps"));
                }
                if r2 <= r1 + 2.0 * eps {
                    return Err(invalid("concentric radii must satisfy r2 > r1 + 2 eps"));
                }
                Ok(())
            }
        }
    }

    fn sample<R: Rng>(&self, label: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            CovariateModel::Uniform { gap } => {
                let u: f64 = rng.random();
                if label == 1 {
                    vec![u]
                } else {
                    vec![1.0 + gap + 2.0 * u]
                }
            }
            CovariateModel::Laplace { ell, sigma, mu1 } => {
                let mu = if label == 1 { mu1 } else { mu1 + ell };
                // Symmetric exponential; 1 - u lies in (0, 1].
                let u: f64 = rng.random();
                let magnitude = -(1.0 - u).ln();
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                vec![mu + sign * sigma * magnitude]
            }
            CovariateModel::ToyUniform { lambda } => {
                let u: f64 = rng.random();
                if label == 1 {
                    vec![u]
                } else {
                    vec![1.0 - lambda + u]
                }
            }
            CovariateModel::CircleSquare { a } => {
                if label == 1 {
                    let z1: f64 = StandardNormal.sample(rng);
                    let z2: f64 = StandardNormal.sample(rng);
                    vec![a + z1, z2]
                } else {
                    let u: f64 = rng.random();
                    let v: f64 = rng.random();
                    vec![2.0 * u - 1.0, 2.0 * v - 1.0]
                }
            }
            CovariateModel::Concentric { r1, r2, eps } => {
                let r = if label == 1 { r1 } else { r2 };
                let (lo, hi) = (r - eps, r + eps);
                // Radius density ∝ ρ on [lo, hi] gives area-uniform points.
                let u: f64 = rng.random();
                let rho = (lo * lo + u * (hi * hi - lo * lo)).sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                vec![rho * theta.cos(), rho * theta.sin()]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub y_model: GaussianMixture1d,
    pub x_model: CovariateModel,
    pub n: usize,
}

impl ScenarioSpec {
    pub fn new(
        y_model: GaussianMixture1d,
        x_model: CovariateModel,
        n: usize,
    ) -> Result<Self, ScenarioError> {
        let spec = Self {
            y_model,
            x_model,
            n,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn m(&self) -> usize {
        2
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.y_model.validate()?;
        self.x_model.validate()?;
        if self.y_model.components() != 2 {
            return Err(invalid("covariate families have exactly 2 components"));
        }
        if self.n == 0 {
            return Err(invalid("sample size must be positive"));
        }
        Ok(())
    }
}

/// Draws `(Y_k, X_k, I_k)` for `k = 1..n`. Identical `(spec, seed)` give
/// identical samples.
pub fn sample_scenario(spec: &ScenarioSpec, seed: u64) -> Result<LabeledSample, ScenarioError> {
    spec.validate()?;
    let mut rng = stream(seed);
    let weights = &spec.y_model.weights;
    let mut y = Vec::with_capacity(spec.n);
    let mut x = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut label = weights.len();
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                label = i + 1;
                break;
            }
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        y.push(spec.y_model.means[label - 1] + spec.y_model.variances[label - 1].sqrt() * z);
        x.push(spec.x_model.sample(label, &mut rng));
        labels.push(label);
    }
    Ok(LabeledSample::new(y, x, Some(labels), spec.m())?)
}

/// The true response density `f_i` tabulated on `grid`.
pub fn true_component_density(
    spec: &ScenarioSpec,
    component: usize,
    grid: &DensityGrid,
) -> Result<DensityGrid, ScenarioError> {
    let m = spec.y_model.components();
    if component == 0 || component > m {
        return Err(ScenarioError::ComponentOutOfRange { component, m });
    }
    let mean = spec.y_model.means[component - 1];
    let var = spec.y_model.variances[component - 1];
    Ok(grid.tabulate(|t| normal_pdf(t, mean, var)))
}

/// Level thresholds for the two-component Laplace mixture: for any level
/// strictly between `t_star` and `min(t_upper_1, t_upper_2)` the
/// super-level set has exactly two connected components, provided `valid`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceThresholds {
    pub t_star: f64,
    pub t_upper_1: f64,
    pub t_upper_2: f64,
    pub valid: bool,
}

pub fn laplace_thresholds(alpha1: f64, sigma: f64, ell: f64) -> LaplaceThresholds {
    let alpha2 = 1.0 - alpha1;
    let far = (-ell / sigma).exp();
    let t_star = (alpha1 * alpha2).sqrt() / sigma * (-ell / (2.0 * sigma)).exp();
    let upper = |a: f64| (a + (1.0 - a) * far) / (2.0 * sigma);
    let log_odds = (alpha1 / alpha2).ln();
    let bound = ell / sigma;
    LaplaceThresholds {
        t_star,
        t_upper_1: upper(alpha1),
        t_upper_2: upper(alpha2),
        valid: log_odds > -bound && log_odds < bound,
    }
}

/// Density of the Laplace covariate mixture `α g_1 + (1 - α) g_2`.
pub fn laplace_mixture_density(x: f64, alpha1: f64, sigma: f64, mu1: f64, ell: f64) -> f64 {
    let g = |mu: f64| (-(x - mu).abs() / sigma).exp() / (2.0 * sigma);
    alpha1 * g(mu1) + (1.0 - alpha1) * g(mu1 + ell)
}
