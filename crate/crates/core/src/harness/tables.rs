//! The three simulation tables as factorial grids of experiment cells.

use super::config::{ClustererSpec, ExperimentConfig, GridSpec};
use super::experiment::{run_experiment, ExperimentReport};
use super::format::{fmt_f64, fmt_opt};
use super::report::csv_writer;
use crate::baseline::kmeans::DEFAULT_RESTARTS;
use crate::baseline::SpectralSigma;
use crate::kde::BandwidthPolicy;
use crate::rng::derive_seed;
use crate::scenarios::{CovariateModel, GaussianMixture1d, ScenarioSpec};
use crate::{Error, Result};

pub const DEFAULT_TABLE_REPLICATIONS: usize = 100;

pub const TABLE1_DELTAS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
pub const TABLE1_GAPS: [f64; 3] = [0.03, 0.05, 0.1];
pub const TABLE1_ELLS: [f64; 3] = [4.5, 5.5, 6.5];
pub const TABLE1_N: usize = 300;
pub const TABLE2_SHIFTS: [f64; 3] = [3.0, 4.0, 5.0];
pub const TABLE3_RADII: [f64; 2] = [0.75, 0.80];
pub const TABLE23_SIZES: [usize; 2] = [250, 500];

/// Clusterers compared in the two-dimensional tables. The spectral bandwidth
/// is chosen by the distortion search.
pub const COMPARISON_CLUSTERERS: [ClustererSpec; 3] = [
    ClustererSpec::RadiusGraph,
    ClustererSpec::Spectral(SpectralSigma::DistortionSearch),
    ClustererSpec::KMeans,
];

#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub table: u8,
    pub cell: usize,
    pub x_kind: &'static str,
    pub x_param: f64,
    pub delta: Option<f64>,
    pub config: ExperimentConfig,
}

#[allow(clippy::too_many_arguments)]
fn cell_config(
    table: u8,
    cell: usize,
    y_model: GaussianMixture1d,
    x_model: CovariateModel,
    n: usize,
    clusterers: Vec<ClustererSpec>,
    include_em: bool,
    replications: usize,
    master_seed: u64,
) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        scenario: ScenarioSpec::new(y_model, x_model, n)?,
        clusterers,
        bandwidth: BandwidthPolicy::Silverman,
        replications,
        master_seed: derive_seed(master_seed, table as u64 * 1000 + cell as u64),
        grid: GridSpec::Auto,
        include_em,
        output: None,
        kmeans_restarts: DEFAULT_RESTARTS,
    })
}

/// All cells of a table in row-major order.
pub fn table_cells(table: u8, replications: usize, master_seed: u64) -> Result<Vec<TableCell>> {
    let mut cells = Vec::new();
    let mut push =
        |x_kind, x_param, delta, y, x, n, clusterers: Vec<ClustererSpec>, em| -> Result<()> {
            let cell = cells.len();
            let config = cell_config(
                table,
                cell,
                y,
                x,
                n,
                clusterers,
                em,
                replications,
                master_seed,
            )?;
            cells.push(TableCell {
                table,
                cell,
                x_kind,
                x_param,
                delta,
                config,
            });
            Ok(())
        };
    match table {
        1 => {
            for delta in TABLE1_DELTAS {
                let y = GaussianMixture1d::separated(delta);
                for gap in TABLE1_GAPS {
                    let x = CovariateModel::Uniform { gap };
                    push(
                        "uniform",
                        gap,
                        Some(delta),
                        y.clone(),
                        x,
                        TABLE1_N,
                        vec![ClustererSpec::RadiusGraph],
                        true,
                    )?;
                }
                for ell in TABLE1_ELLS {
                    let x = CovariateModel::laplace(ell);
                    push(
                        "laplace",
                        ell,
                        Some(delta),
                        y.clone(),
                        x,
                        TABLE1_N,
                        vec![ClustererSpec::RadiusGraph],
                        true,
                    )?;
                }
            }
        }
        2 => {
            for a in TABLE2_SHIFTS {
                for n in TABLE23_SIZES {
                    let x = CovariateModel::CircleSquare { a };
                    push(
                        "circle_square",
                        a,
                        None,
                        GaussianMixture1d::balanced(),
                        x,
                        n,
                        COMPARISON_CLUSTERERS.to_vec(),
                        false,
                    )?;
                }
            }
        }
        3 => {
            for r2 in TABLE3_RADII {
                for n in TABLE23_SIZES {
                    let x = CovariateModel::concentric(r2);
                    push(
                        "concentric",
                        r2,
                        None,
                        GaussianMixture1d::balanced(),
                        x,
                        n,
                        COMPARISON_CLUSTERERS.to_vec(),
                        false,
                    )?;
                }
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown table id {other} (expected 1, 2 or 3)"
            )))
        }
    }
    Ok(cells)
}

/// One emitted line: a cell and a clusterer, with the first component's ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub table: u8,
    pub cell: usize,
    pub x_kind: &'static str,
    pub x_param: f64,
    pub delta: Option<f64>,
    pub n: usize,
    pub clusterer: String,
    pub replications: usize,
    pub failed: usize,
    pub r_two_step_vs_em: Option<f64>,
    pub r_oracle_vs_em: Option<f64>,
    pub r_two_step_vs_oracle: f64,
    pub err_n: f64,
}

pub fn cell_rows(cell: &TableCell, report: &ExperimentReport) -> Vec<TableRow> {
    report
        .aggregates
        .iter()
        .filter(|a| a.component == 1)
        .map(|a| TableRow {
            table: cell.table,
            cell: cell.cell,
            x_kind: cell.x_kind,
            x_param: cell.x_param,
            delta: cell.delta,
            n: cell.config.scenario.n,
            clusterer: a.clusterer.clone(),
            replications: a.replications,
            failed: a.failed,
            r_two_step_vs_em: a.ratios.two_step_vs_em,
            r_oracle_vs_em: a.ratios.oracle_vs_em,
            r_two_step_vs_oracle: a.ratios.two_step_vs_oracle,
            err_n: a.mean_cluster_error,
        })
        .collect()
}

pub fn run_cell(cell: &TableCell) -> Result<Vec<TableRow>> {
    Ok(cell_rows(cell, &run_experiment(&cell.config)?))
}

/// Runs every cell of a table. `progress` is called after each cell.
pub fn reproduce_table(
    table: u8,
    replications: usize,
    master_seed: u64,
    mut progress: impl FnMut(&TableCell),
) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for cell in table_cells(table, replications, master_seed)? {
        rows.extend(run_cell(&cell)?);
        progress(&cell);
    }
    Ok(rows)
}

pub fn table_csv(rows: &[TableRow]) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    w.write_record([
        "table",
        "cell",
        "x_model",
        "x_param",
        "delta",
        "n",
        "clusterer",
        "replications",
        "failed",
        "r_two_step_vs_em",
        "r_oracle_vs_em",
        "r_two_step_vs_oracle",
        "err_n",
    ])?;
    for r in rows {
        w.write_record([
            r.table.to_string(),
            r.cell.to_string(),
            r.x_kind.to_string(),
            fmt_f64(r.x_param),
            fmt_opt(r.delta),
            r.n.to_string(),
            r.clusterer.clone(),
            r.replications.to_string(),
            r.failed.to_string(),
            fmt_opt(r.r_two_step_vs_em),
            fmt_opt(r.r_oracle_vs_em),
            fmt_f64(r.r_two_step_vs_oracle),
            fmt_f64(r.err_n),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_have_expected_sizes() {
        assert_eq!(table_cells(1, 1, 0).unwrap().len(), 24);
        assert_eq!(table_cells(2, 1, 0).unwrap().len(), 6);
        assert_eq!(table_cells(3, 1, 0).unwrap().len(), 4);
        assert!(table_cells(4, 1, 0).is_err());
    }

    #[test]
    fn cell_seeds_are_distinct() {
        let mut seeds: Vec<u64> = (1..=3)
            .flat_map(|t| table_cells(t, 1, 42).unwrap())
            .map(|c| c.config.master_seed)
            .collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 34);
    }
}
