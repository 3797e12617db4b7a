//! Experiment configuration: a flat `key = value` text format with `#`
//! comments. Command-line overrides go through the same [`ExperimentConfig::set`].

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use super::format::{fmt_f64, fmt_list};
use crate::baseline::kmeans::DEFAULT_RESTARTS;
use crate::baseline::SpectralSigma;
use crate::kde::{BandwidthPolicy, LscvCandidates};
use crate::model::{make_grid, DensityGrid};
use crate::scenarios::{CovariateModel, GaussianMixture1d, ScenarioSpec};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_GRID_POINTS: usize = 1024;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// A clustering procedure applied to the covariates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClustererSpec {
    RadiusGraph,
    KMeans,
    Spectral(SpectralSigma),
    Interval,
}

impl ClustererSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClustererSpec::RadiusGraph => "radius_graph",
            ClustererSpec::KMeans => "kmeans",
            ClustererSpec::Spectral(_) => "spectral",
            ClustererSpec::Interval => "interval",
        }
    }

    /// Name including parameters, as accepted by [`FromStr`].
    pub fn canonical(&self) -> String {
        match self {
            ClustererSpec::Spectral(s) => format!("spectral:{}", s.name()),
            other => other.name().to_string(),
        }
    }
}

impl FromStr for ClustererSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s, None),
        };
        match (head, arg) {
            ("radius_graph" | "hierarchical", None) => Ok(ClustererSpec::RadiusGraph),
            ("kmeans", None) => Ok(ClustererSpec::KMeans),
            ("interval", None) => Ok(ClustererSpec::Interval),
            ("spectral", None) => Ok(ClustererSpec::Spectral(SpectralSigma::MedianDistance)),
            ("spectral", Some(a)) => a.parse().map(ClustererSpec::Spectral).map_err(config_err),
            _ => Err(config_err(format!(
                "unknown clusterer '{s}' (expected radius_graph, kmeans, spectral[:median|search|SIGMA] or interval)"
            ))),
        }
    }
}

/// Evaluation grid: fixed, or padded around the responses per replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Auto,
    Fixed { lo: f64, hi: f64, points: usize },
}

impl GridSpec {
    pub fn fixed_grid(&self) -> Option<Result<DensityGrid>> {
        match *self {
            GridSpec::Auto => None,
            GridSpec::Fixed { lo, hi, points } => {
                Some(make_grid(lo, hi, points).map_err(Error::from))
            }
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "auto" {
            return Ok(GridSpec::Auto);
        }
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || config_err(format!("invalid grid '{s}' (expected auto or LO:HI:G)"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi && points >= 2) {
            return Err(config_err(format!(
                "grid needs finite LO < HI and G >= 2, got '{s}'"
            )));
        }
        Ok(GridSpec::Fixed { lo, hi, points })
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            GridSpec::Auto => f.write_str("auto"),
            GridSpec::Fixed { lo, hi, points } => {
                write!(f, "{}:{}:{}", fmt_f64(lo), fmt_f64(hi), points)
            }
        }
    }
}

pub fn parse_bandwidth(s: &str) -> Result<BandwidthPolicy> {
    let s = s.trim();
    match s {
        "silverman" => Ok(BandwidthPolicy::Silverman),
        "lscv" => Ok(BandwidthPolicy::Lscv(LscvCandidates::default_relative())),
        _ => {
            let h = s
                .strip_prefix("fixed:")
                .and_then(|h| h.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    config_err(format!(
                        "invalid bandwidth '{s}' (expected silverman, lscv or fixed:H)"
                    ))
                })?;
            BandwidthPolicy::fixed(h).map_err(|e| config_err(e.to_string()))
        }
    }
}

pub fn bandwidth_name(policy: &BandwidthPolicy) -> String {
    match policy {
        BandwidthPolicy::Silverman => "silverman".into(),
        BandwidthPolicy::Lscv(_) => "lscv".into(),
        BandwidthPolicy::Fixed(h) => format!("fixed:{}", fmt_f64(*h)),
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| config_err(format!("{key}: expected a number, got '{}'", s.trim())))
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|v| parse_f64(key, v)).collect()
}

pub fn parse_x_model(s: &str) -> Result<CovariateModel> {
    let s = s.trim();
    let (kind, args) = s
        .split_once(':')
        .ok_or_else(|| config_err(format!("x_model '{s}' needs parameters, e.g. uniform:0.1")))?;
    let args = parse_list("x_model", args)?;
    let model = match (kind.trim(), args.as_slice()) {
        ("uniform", &[gap]) => CovariateModel::Uniform { gap },
        ("laplace", &[ell]) => CovariateModel::laplace(ell),
        ("laplace", &[ell, sigma, mu1]) => CovariateModel::Laplace { ell, sigma, mu1 },
        ("toy_uniform", &[lambda]) => CovariateModel::ToyUniform { lambda },
        ("circle_square", &[a]) => CovariateModel::CircleSquare { a },
        ("concentric", &[r2]) => CovariateModel::concentric(r2),
        ("concentric", &[r1, r2, eps]) => CovariateModel::Concentric { r1, r2, eps },
        _ => {
            return Err(config_err(format!(
                "unknown x_model '{s}' (expected uniform:GAP, laplace:ELL[,SIGMA,MU1], toy_uniform:LAMBDA, \
                 circle_square:A or concentric:[R1,]R2[,EPS])"
            )))
        }
    };
    Ok(model)
}

pub fn x_model_string(model: &CovariateModel) -> String {
    match *model {
        CovariateModel::Uniform { gap } => format!("uniform:{}", fmt_f64(gap)),
        CovariateModel::Laplace { ell, sigma, mu1 } => {
            format!(
                "laplace:{},{},{}",
                fmt_f64(ell),
                fmt_f64(sigma),
                fmt_f64(mu1)
            )
        }
        CovariateModel::ToyUniform { lambda } => format!("toy_uniform:{}", fmt_f64(lambda)),
        CovariateModel::CircleSquare { a } => format!("circle_square:{}", fmt_f64(a)),
        CovariateModel::Concentric { r1, r2, eps } => {
            format!(
                "concentric:{},{},{}",
                fmt_f64(r1),
                fmt_f64(r2),
                fmt_f64(eps)
            )
        }
    }
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(config_err(format!(
            "{key}: expected true or false, got '{other}'"
        ))),
    }
}

fn parse_count(key: &str, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| {
        config_err(format!(
            "{key}: expected a non-negative integer, got '{}'",
            s.trim()
        ))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub clusterers: Vec<ClustererSpec>,
    pub bandwidth: BandwidthPolicy,
    pub replications: usize,
    pub master_seed: u64,
    pub grid: GridSpec,
    pub include_em: bool,
    pub output: Option<PathBuf>,
    pub kmeans_restarts: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSpec {
                y_model: GaussianMixture1d::separated(1.0),
                x_model: CovariateModel::Uniform { gap: 0.1 },
                n: 300,
            },
            clusterers: vec![ClustererSpec::RadiusGraph],
            bandwidth: BandwidthPolicy::Silverman,
            replications: 100,
            master_seed: 0,
            grid: GridSpec::Auto,
            include_em: false,
            output: None,
            kmeans_restarts: DEFAULT_RESTARTS,
        }
    }
}

impl ExperimentConfig {
    /// Sets one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "y_weights" => self.scenario.y_model.weights = parse_list(key, value)?,
            "y_means" => self.scenario.y_model.means = parse_list(key, value)?,
            "y_variances" => self.scenario.y_model.variances = parse_list(key, value)?,
            "delta" => {
                // Shorthand for the separated mixture with weights (3/4, 1/4).
                self.scenario.y_model = GaussianMixture1d::separated(parse_f64(key, value)?);
            }
            "x_model" => self.scenario.x_model = parse_x_model(value)?,
            "n" => self.scenario.n = parse_count(key, value)?,
            "clusterers" => {
                self.clusterers = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "bandwidth" => self.bandwidth = parse_bandwidth(value)?,
            "replications" => self.replications = parse_count(key, value)?,
            "master_seed" | "seed" => {
                self.master_seed = value.parse().map_err(|_| {
                    config_err(format!(
                        "{key}: expected an unsigned 64-bit integer, got '{value}'"
                    ))
                })?
            }
            "grid" => self.grid = value.parse()?,
            "include_em" => self.include_em = parse_bool(key, value)?,
            "output" => {
                self.output = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "kmeans_restarts" => self.kmeans_restarts = parse_count(key, value)?,
            other => return Err(config_err(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses the text format on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected 'key = value'", i + 1)))?;
            cfg.set(key, value)
                .map_err(|e| config_err(format!("line {}: {}", i + 1, strip_prefix(&e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        if self.replications == 0 {
            return Err(config_err("replications must be at least 1"));
        }
        if self.clusterers.is_empty() {
            return Err(config_err("at least one clusterer is required"));
        }
        if self.kmeans_restarts == 0 {
            return Err(config_err("kmeans_restarts must be at least 1"));
        }
        self.bandwidth
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        if self.clusterers.contains(&ClustererSpec::Interval) && self.scenario.x_model.dim() != 1 {
            return Err(config_err(
                "the interval clusterer needs one-dimensional covariates",
            ));
        }
        Ok(())
    }

    /// Canonical text form; [`ExperimentConfig::parse`] reads it back to an
    /// equal value.
    pub fn echo(&self) -> String {
        let y = &self.scenario.y_model;
        let mut s = String::new();
        let _ = writeln!(s, "# covclust {VERSION}");
        let _ = writeln!(s, "y_weights = {}", fmt_list(&y.weights));
        let _ = writeln!(s, "y_means = {}", fmt_list(&y.means));
        let _ = writeln!(s, "y_variances = {}", fmt_list(&y.variances));
        let _ = writeln!(s, "x_model = {}", x_model_string(&self.scenario.x_model));
        let _ = writeln!(s, "n = {}", self.scenario.n);
        let names: Vec<String> = self
            .clusterers
            .iter()
            .map(ClustererSpec::canonical)
            .collect();
        let _ = writeln!(s, "clusterers = {}", names.join(", "));
        let _ = writeln!(s, "bandwidth = {}", bandwidth_name(&self.bandwidth));
        let _ = writeln!(s, "replications = {}", self.replications);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "grid = {}", self.grid);
        let _ = writeln!(s, "include_em = {}", self.include_em);
        let _ = writeln!(s, "kmeans_restarts = {}", self.kmeans_restarts);
        if let Some(out) = &self.output {
            let _ = writeln!(s, "output = {}", out.display());
        }
        s
    }
}

fn strip_prefix(e: &Error) -> String {
    let s = e.to_string();
    s.strip_prefix("configuration: ")
        .map(str::to_string)
        .unwrap_or(s)
}
