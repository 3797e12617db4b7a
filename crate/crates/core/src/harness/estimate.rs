//! Two-step estimation on user data read from CSV.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::{ClustererSpec, GridSpec, DEFAULT_GRID_POINTS};
use super::experiment::cluster_covariates;
use super::format::{fmt_f64, fmt_opt};
use super::report::csv_writer;
use crate::baseline::kmeans::DEFAULT_RESTARTS;
use crate::kde::{
    bandwidths_for_labels, padded_grid, two_step_estimate, BandwidthPolicy, ComponentEstimate,
};
use crate::model::{ClusterAssignment, DensityGrid, LabeledSample};
use crate::{Error, Result};

pub(crate) fn input_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Input {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a headed numeric CSV. Returns the header and the rows; every row
/// must have the header's width and parse as finite numbers.
pub(crate) fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input_err(path, 0, e.to_string()))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| input_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(input_err(path, 1, "missing header row"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            input_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(input_err(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, v)| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(input_err(
                    path,
                    line,
                    format!("column '{}': not a finite number: '{v}'", header[j]),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// `dir/name.csv` with suffix `labels` becomes `dir/name.labels.csv`.
pub fn sidecar_path(output: &Path, suffix: &str) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    output.with_file_name(format!("{stem}.{suffix}.csv"))
}

/// Grid for a labelling: fixed, or padded by five of the largest component
/// bandwidths around the responses.
pub(crate) fn grid_for(
    y: &[f64],
    labels: &[usize],
    m: usize,
    policy: &BandwidthPolicy,
    grid: &GridSpec,
) -> Result<DensityGrid> {
    match grid.fixed_grid() {
        Some(g) => g,
        None => {
            let h = bandwidths_for_labels(y, labels, m, policy)?
                .into_iter()
                .flatten()
                .fold(0.0, f64::max);
            Ok(padded_grid(y, h, DEFAULT_GRID_POINTS)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutput {
    pub assignment: ClusterAssignment,
    pub components: Vec<ComponentEstimate>,
    pub grid: DensityGrid,
}

pub fn density_csv(grid: &DensityGrid, components: &[ComponentEstimate]) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=components.len()).map(|i| format!("fhat_{i}")));
    w.write_record(&header)?;
    for (j, t) in grid.abscissae().into_iter().enumerate() {
        let mut row = vec![fmt_f64(t)];
        row.extend(components.iter().map(|c| fmt_f64(c.density.values()[j])));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn labels_csv(columns: &[(&str, &[usize])]) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    let mut header = vec!["row_index"];
    header.extend(columns.iter().map(|(name, _)| *name));
    w.write_record(&header)?;
    let n = columns.first().map_or(0, |(_, l)| l.len());
    for k in 0..n {
        let mut row = vec![k.to_string()];
        row.extend(columns.iter().map(|(_, l)| l[k].to_string()));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn weights_csv(components: &[ComponentEstimate]) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    w.write_record(["component", "weight", "support_count", "bandwidth"])?;
    for (i, c) in components.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            fmt_f64(c.weight),
            c.support_count.to_string(),
            fmt_opt(c.bandwidth),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Reads `y, x1, ..., xd`, clusters the covariates into `m` groups, and
/// writes the component densities to `output` with `.labels.csv` and
/// `.weights.csv` sidecars. Row indices in the label sidecar are 0-based
/// data rows.
pub fn estimate_from_csv(
    input: &Path,
    m: usize,
    clusterer: &ClustererSpec,
    bandwidth: &BandwidthPolicy,
    grid: &GridSpec,
    output: &Path,
    seed: u64,
) -> Result<EstimateOutput> {
    let (header, rows) = read_numeric_csv(input)?;
    if header.len() < 2 || header[0] != "y" || !header[1..].iter().all(|h| h.starts_with('x')) {
        return Err(input_err(
            input,
            1,
            format!("header must be y, x1, ..., xd; found {}", header.join(",")),
        ));
    }
    if m == 0 {
        return Err(Error::Config("M must be at least 1".into()));
    }
    if rows.len() < m {
        return Err(input_err(
            input,
            rows.len() + 1,
            format!("{} data rows but M = {m}", rows.len()),
        ));
    }
    let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r[1..].to_vec()).collect();
    let sample = LabeledSample::new(y, x, None, m)?;

    let assignment = cluster_covariates(clusterer, sample.x(), m, seed, DEFAULT_RESTARTS)?;
    let grid = grid_for(sample.y(), assignment.predicted(), m, bandwidth, grid)?;
    let components = two_step_estimate(&sample, &assignment, bandwidth, &grid)?;

    if let Some(dir) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(output, density_csv(&grid, &components)?)?;
    fs::write(
        sidecar_path(output, "labels"),
        labels_csv(&[("predicted_label", assignment.predicted())])?,
    )?;
    fs::write(sidecar_path(output, "weights"), weights_csv(&components)?)?;
    Ok(EstimateOutput {
        assignment,
        components,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar_path(Path::new("out/d.csv"), "labels"),
            PathBuf::from("out/d.labels.csv")
        );
        assert_eq!(
            sidecar_path(Path::new("d"), "weights"),
            PathBuf::from("d.weights.csv")
        );
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.csv");
        fs::write(&input, "y,x1\n0,0\n1,abc\n").unwrap();
        let err = read_numeric_csv(&input).unwrap_err();
        assert!(matches!(err, Error::Input { line: 3, .. }), "{err}");
        fs::write(&input, "y,x1\n0,0\n1\n").unwrap();
        let err = read_numeric_csv(&input).unwrap_err();
        assert!(matches!(err, Error::Input { line: 3, .. }), "{err}");
    }
}
