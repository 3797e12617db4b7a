//! Seeded Monte Carlo replication loop.

use rayon::prelude::*;

use super::config::{ClustererSpec, ExperimentConfig, DEFAULT_GRID_POINTS, VERSION};
use crate::baseline::em::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::baseline::{em_gaussian_1d, gaussian_density_grid, kmeans_cluster, spectral_cluster};
use crate::kde::{
    bandwidths_for_labels, oracle_estimate, padded_grid, two_step_estimate, BandwidthPolicy,
};
use crate::metrics::{
    l1_distance, mean_and_standard_error, misclassification_error, ratio_statistics,
    RatioStatistics, ReplicationRecord,
};
use crate::model::{enumerate_permutations, ClusterAssignment, DensityGrid};
use crate::numeric::order_insensitive_mean;
use crate::radius::{interval_cluster, radius_graph_cluster};
use crate::rng::derive_seed;
use crate::scenarios::{sample_scenario, true_component_density};
use crate::{Error, Result};

/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

/// Runs one clusterer on the covariates.
pub fn cluster_covariates(
    spec: &ClustererSpec,
    x: &[Vec<f64>],
    m: usize,
    seed: u64,
    kmeans_restarts: usize,
) -> Result<ClusterAssignment> {
    Ok(match *spec {
        ClustererSpec::RadiusGraph => radius_graph_cluster(x, m)?,
        ClustererSpec::KMeans => kmeans_cluster(x, m, kmeans_restarts, seed)?,
        ClustererSpec::Spectral(sigma) => spectral_cluster(x, m, sigma, seed)?,
        ClustererSpec::Interval => {
            if m != 2 || x.first().is_some_and(|p| p.len() != 1) {
                return Err(Error::Config(
                    "the interval clusterer needs M = 2 and one-dimensional covariates".into(),
                ));
            }
            let xs: Vec<f64> = x.iter().map(|p| p[0]).collect();
            interval_cluster(&xs)?
        }
    })
}

/// A replication that raised an error, kept with its seed for replay.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedReplication {
    pub replication: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClustererRecords {
    pub clusterer: ClustererSpec,
    pub records: Vec<ReplicationRecord>,
}

/// Monte Carlo summary for one clusterer and one component.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub clusterer: String,
    pub component: usize,
    pub replications: usize,
    pub failed: usize,
    pub mean_l1_two_step: f64,
    pub mean_l1_oracle: f64,
    pub mean_l1_em: Option<f64>,
    pub ratios: RatioStatistics,
    /// Permutation-minimized misclassification rate.
    pub mean_cluster_error: f64,
    pub se_cluster_error: f64,
    pub mean_rejected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub version: String,
    pub config_echo: String,
    pub m: usize,
    pub per_clusterer: Vec<ClustererRecords>,
    pub failures: Vec<FailedReplication>,
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentReport {
    pub fn records(&self, clusterer: &str) -> Option<&[ReplicationRecord]> {
        self.per_clusterer
            .iter()
            .find(|c| c.clusterer.name() == clusterer)
            .map(|c| c.records.as_slice())
    }

    pub fn aggregate(&self, clusterer: &str, component: usize) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.clusterer == clusterer && a.component == component)
    }
}

/// Aggregates for one clusterer, recomputable from its records alone.
pub fn aggregate_records(
    clusterer: &str,
    records: &[ReplicationRecord],
    m: usize,
    failed: usize,
) -> Result<Vec<AggregateRow>> {
    let errors: Vec<f64> = records.iter().map(|r| r.cluster_error).collect();
    let (mean_err, se_err) = mean_and_standard_error(&errors);
    let rejected: Vec<f64> = records.iter().map(|r| r.rejected as f64).collect();
    let mean_rejected = order_insensitive_mean(&rejected);
    (1..=m)
        .map(|i| {
            let col = |f: &dyn Fn(&ReplicationRecord) -> f64| -> f64 {
                order_insensitive_mean(&records.iter().map(f).collect::<Vec<_>>())
            };
            let with_em = records.iter().all(|r| r.l1_em.is_some());
            Ok(AggregateRow {
                clusterer: clusterer.to_string(),
                component: i,
                replications: records.len(),
                failed,
                mean_l1_two_step: col(&|r| r.l1_two_step[i - 1]),
                mean_l1_oracle: col(&|r| r.l1_oracle[i - 1]),
                mean_l1_em: with_em.then(|| col(&|r| r.l1_em.as_ref().unwrap()[i - 1])),
                ratios: ratio_statistics(records, i)?,
                mean_cluster_error: mean_err,
                se_cluster_error: se_err,
                mean_rejected,
            })
        })
        .collect()
}

/// Per-component L1 errors of the EM fit after matching its components to
/// the true ones by the permutation with the smallest total L1 error.
fn em_errors(
    y: &[f64],
    m: usize,
    seed: u64,
    truth: &[DensityGrid],
    grid: &DensityGrid,
) -> Result<Vec<f64>> {
    let fit = em_gaussian_1d(y, m, seed, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
    let dens: Vec<DensityGrid> = (1..=m)
        .map(|c| gaussian_density_grid(&fit, c, grid))
        .collect::<std::result::Result<_, _>>()?;
    // cost[c][i] = L1 between EM component c and true component i.
    let cost: Vec<Vec<f64>> = dens
        .iter()
        .map(|d| {
            truth
                .iter()
                .map(|t| l1_distance(d, t))
                .collect::<std::result::Result<_, _>>()
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for perm in enumerate_permutations(m)? {
        // perm maps true component i to EM component perm(i).
        let per: Vec<f64> = (1..=m).map(|i| cost[perm.apply(i) - 1][i - 1]).collect();
        let total: f64 = per.iter().sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, per));
        }
    }
    Ok(best.expect("at least one permutation").1)
}

fn max_bandwidth(y: &[f64], labels: &[usize], m: usize, policy: &BandwidthPolicy) -> Result<f64> {
    Ok(bandwidths_for_labels(y, labels, m, policy)?
        .into_iter()
        .flatten()
        .fold(0.0, f64::max))
}

fn run_replication(cfg: &ExperimentConfig, r: usize) -> Result<Vec<ReplicationRecord>> {
    let seed = derive_seed(cfg.master_seed, r as u64);
    let sample = sample_scenario(&cfg.scenario, seed)?;
    let m = sample.m();
    let truth = sample
        .labels()
        .expect("generated samples carry labels")
        .to_vec();
    let hidden = sample.hide_labels();

    let mut aligned = Vec::with_capacity(cfg.clusterers.len());
    for (j, spec) in cfg.clusterers.iter().enumerate() {
        let a = cluster_covariates(
            spec,
            hidden.x(),
            m,
            derive_seed(seed, j as u64 + 1),
            cfg.kmeans_restarts,
        )?;
        let (err, perm) = misclassification_error(&a, &truth, m)?;
        // Align predicted labels with the true indexing before estimation.
        aligned.push((a.relabel(&perm), err));
    }

    let y = sample.y();
    let grid = match cfg.grid.fixed_grid() {
        Some(g) => g?,
        None => {
            let mut h = max_bandwidth(y, &truth, m, &cfg.bandwidth)?;
            for (a, _) in &aligned {
                h = h.max(max_bandwidth(y, a.predicted(), m, &cfg.bandwidth)?);
            }
            padded_grid(y, h, DEFAULT_GRID_POINTS)?
        }
    };
    let true_dens: Vec<DensityGrid> = (1..=m)
        .map(|i| true_component_density(&cfg.scenario, i, &grid))
        .collect::<std::result::Result<_, _>>()?;
    let l1_all = |est: &[crate::kde::ComponentEstimate]| -> Result<Vec<f64>> {
        est.iter()
            .zip(&true_dens)
            .map(|(e, t)| l1_distance(&e.density, t).map_err(Error::from))
            .collect()
    };
    let l1_oracle = l1_all(&oracle_estimate(&sample, &cfg.bandwidth, &grid)?)?;
    let l1_em = if cfg.include_em {
        Some(em_errors(y, m, derive_seed(seed, 0), &true_dens, &grid)?)
    } else {
        None
    };

    aligned
        .iter()
        .map(|(a, err)| {
            let est = two_step_estimate(&hidden, a, &cfg.bandwidth, &grid)?;
            Ok(ReplicationRecord {
                replication: r,
                seed,
                l1_two_step: l1_all(&est)?,
                l1_oracle: l1_oracle.clone(),
                l1_em: l1_em.clone(),
                cluster_error: *err,
                rejected: a.counts()[0],
            })
        })
        .collect()
}

/// Runs every replication of `cfg`. Replications fan out over the current
/// rayon pool; results are collected in replication order, so the report
/// does not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let outcomes: Vec<Result<Vec<ReplicationRecord>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, r))
        .collect();

    let mut per_clusterer: Vec<ClustererRecords> = cfg
        .clusterers
        .iter()
        .map(|&clusterer| ClustererRecords {
            clusterer,
            records: Vec::new(),
        })
        .collect();
    let mut failures = Vec::new();
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(records) => {
                for (slot, rec) in per_clusterer.iter_mut().zip(records) {
                    slot.records.push(rec);
                }
            }
            Err(e) => failures.push(FailedReplication {
                replication: r,
                seed: derive_seed(cfg.master_seed, r as u64),
                message: e.to_string(),
            }),
        }
    }
    if failures.len() as f64 > MAX_FAILURE_FRACTION * cfg.replications as f64 {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total: cfg.replications,
            first_seed: failures[0].seed,
        });
    }

    let m = cfg.scenario.m();
    let mut aggregates = Vec::new();
    for c in &per_clusterer {
        aggregates.extend(aggregate_records(
            c.clusterer.name(),
            &c.records,
            m,
            failures.len(),
        )?);
    }
    Ok(ExperimentReport {
        version: VERSION.to_string(),
        config_echo: cfg.echo(),
        m,
        per_clusterer,
        failures,
        aggregates,
    })
}
