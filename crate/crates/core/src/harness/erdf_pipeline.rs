//! Consumption-curve pipeline: features, clustering on the two variation
//! covariates, and per-cluster densities of the six derived variables.

use std::fs;
use std::path::Path;

use super::config::GridSpec;
use super::estimate::{grid_for, input_err, labels_csv, read_numeric_csv, sidecar_path};
use super::format::fmt_f64;
use super::report::csv_writer;
use crate::baseline::kmeans::DEFAULT_RESTARTS;
use crate::baseline::kmeans_cluster;
use crate::erdf::{erdf_features, ErdfFeatures, VariationConvention, CURVE_LEN};
use crate::kde::{two_step_estimate, BandwidthPolicy, ComponentEstimate};
use crate::metrics::misclassification_error;
use crate::model::{ClusterAssignment, DensityGrid, LabeledSample};
use crate::radius::radius_graph_cluster;
use crate::{Error, Result};

pub const DERIVED_VARIABLES: usize = 6;
const M: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ErdfOutput {
    pub features: ErdfFeatures,
    /// Labels from the radius-graph clustering; densities use these.
    pub radius_labels: ClusterAssignment,
    /// k-means labels, relabeled to agree with the radius-graph labels.
    pub kmeans_labels: ClusterAssignment,
    /// Per derived variable: the grid and the two component estimates.
    pub densities: Vec<(DensityGrid, Vec<ComponentEstimate>)>,
}

pub fn curves_csv(curves: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    let header: Vec<String> = (1..=CURVE_LEN).map(|j| format!("z{j}")).collect();
    w.write_record(&header)?;
    for z in curves {
        w.write_record(z.iter().map(|&v| fmt_f64(v)))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Reads a headed CSV of consumption curves, one row of nine values each.
pub fn read_curves(path: &Path) -> Result<Vec<Vec<f64>>> {
    let (header, rows) = read_numeric_csv(path)?;
    if header.len() != CURVE_LEN {
        return Err(input_err(
            path,
            1,
            format!("expected {CURVE_LEN} columns, found {}", header.len()),
        ));
    }
    for (k, z) in rows.iter().enumerate() {
        if let Some((j, &v)) = z.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(input_err(
                path,
                k + 2,
                format!("column {}: consumption must be positive, got {v}", j + 1),
            ));
        }
    }
    Ok(rows)
}

fn column(y: &[[f64; 6]], j: usize) -> Vec<f64> {
    y.iter().map(|r| r[j]).collect()
}

/// Runs the pipeline on in-memory curves.
pub fn erdf_analysis(
    curves: &[Vec<f64>],
    convention: VariationConvention,
    bandwidth: &BandwidthPolicy,
    seed: u64,
) -> Result<ErdfOutput> {
    let features = erdf_features(curves, convention)?;
    let x: Vec<Vec<f64>> = features.x.iter().map(|p| p.to_vec()).collect();
    let radius_labels = radius_graph_cluster(&x, M)?;
    let kmeans_raw = kmeans_cluster(&x, M, DEFAULT_RESTARTS, seed)?;
    let (_, perm) = misclassification_error(&kmeans_raw, radius_labels.predicted(), M)?;
    let kmeans_labels = kmeans_raw.relabel(&perm);

    let mut densities = Vec::with_capacity(DERIVED_VARIABLES);
    for j in 0..DERIVED_VARIABLES {
        let y = column(&features.y, j);
        let sample = LabeledSample::new(y, x.clone(), None, M)?;
        let grid = grid_for(
            sample.y(),
            radius_labels.predicted(),
            M,
            bandwidth,
            &GridSpec::Auto,
        )?;
        let est = two_step_estimate(&sample, &radius_labels, bandwidth, &grid)?;
        densities.push((grid, est));
    }
    Ok(ErdfOutput {
        features,
        radius_labels,
        kmeans_labels,
        densities,
    })
}

fn densities_csv(out: &ErdfOutput) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    let mut header = vec!["grid_index".to_string()];
    for j in 1..=DERIVED_VARIABLES {
        for i in 1..=M {
            header.push(format!("fhat{i}_y{j}"));
        }
    }
    w.write_record(&header)?;
    let g = out.densities[0].0.len();
    for k in 0..g {
        let mut row = vec![k.to_string()];
        for (_, est) in &out.densities {
            row.extend(est.iter().map(|c| fmt_f64(c.density.values()[k])));
        }
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn grids_csv(out: &ErdfOutput) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    w.write_record([
        "variable",
        "lo",
        "hi",
        "points",
        "bandwidth_1",
        "bandwidth_2",
    ])?;
    for (j, (grid, est)) in out.densities.iter().enumerate() {
        let bw = |i: usize| est[i].bandwidth.map(fmt_f64).unwrap_or_default();
        w.write_record([
            format!("y{}", j + 1),
            fmt_f64(grid.lo()),
            fmt_f64(grid.hi()),
            grid.len().to_string(),
            bw(0),
            bw(1),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn features_csv(f: &ErdfFeatures) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    w.write_record(["row_index", "x1", "x2", "y1", "y2", "y3", "y4", "y5", "y6"])?;
    for (k, (x, y)) in f.x.iter().zip(&f.y).enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(x.iter().chain(y).map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Reads curves from `input` and writes the density table to `output`, with
/// `.grids.csv`, `.labels.csv` and `.features.csv` sidecars. Grid `k` of
/// variable `j` is `lo_j + k (hi_j - lo_j) / (points - 1)`.
pub fn erdf_pipeline(
    input: &Path,
    output: &Path,
    convention: VariationConvention,
    bandwidth: &BandwidthPolicy,
    seed: u64,
) -> Result<ErdfOutput> {
    let curves = read_curves(input)?;
    let out = erdf_analysis(&curves, convention, bandwidth, seed)?;
    if let Some(dir) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(output, densities_csv(&out)?)?;
    fs::write(sidecar_path(output, "grids"), grids_csv(&out)?)?;
    fs::write(
        sidecar_path(output, "labels"),
        labels_csv(&[
            ("radius_graph", out.radius_labels.predicted()),
            ("kmeans", out.kmeans_labels.predicted()),
        ])?,
    )?;
    fs::write(
        sidecar_path(output, "features"),
        features_csv(&out.features)?,
    )?;
    Ok(out)
}
