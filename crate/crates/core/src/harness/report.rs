//! CSV emission and ingestion of experiment reports.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::experiment::{AggregateRow, ExperimentReport, FailedReplication};
use super::format::{fmt_f64, fmt_opt};
use crate::metrics::ReplicationRecord;
use crate::{Error, Result};

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const REPLICATIONS_FILE: &str = "replications.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const CONFIG_FILE: &str = "config.txt";

/// CSV writer with LF line endings.
pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn into_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    w.write_record([
        "clusterer",
        "component",
        "replications",
        "failed",
        "mean_l1_two_step",
        "mean_l1_oracle",
        "mean_l1_em",
        "r_two_step_vs_em",
        "r_oracle_vs_em",
        "r_two_step_vs_oracle",
        "cluster_error_min_perm",
        "cluster_error_se",
        "mean_rejected",
    ])?;
    for a in rows {
        w.write_record([
            a.clusterer.clone(),
            a.component.to_string(),
            a.replications.to_string(),
            a.failed.to_string(),
            fmt_f64(a.mean_l1_two_step),
            fmt_f64(a.mean_l1_oracle),
            fmt_opt(a.mean_l1_em),
            fmt_opt(a.ratios.two_step_vs_em),
            fmt_opt(a.ratios.oracle_vs_em),
            fmt_f64(a.ratios.two_step_vs_oracle),
            fmt_f64(a.mean_cluster_error),
            fmt_f64(a.se_cluster_error),
            fmt_f64(a.mean_rejected),
        ])?;
    }
    into_bytes(w)
}

pub fn replications_csv(report: &ExperimentReport) -> Result<Vec<u8>> {
    let m = report.m;
    let mut w = csv_writer(Vec::new());
    let mut header = vec![
        "clusterer".to_string(),
        "replication".into(),
        "seed".into(),
        "cluster_error".into(),
        "rejected".into(),
    ];
    for prefix in ["l1_two_step", "l1_oracle", "l1_em"] {
        header.extend((1..=m).map(|i| format!("{prefix}_{i}")));
    }
    w.write_record(&header)?;
    for c in &report.per_clusterer {
        for r in &c.records {
            let mut row = vec![
                c.clusterer.name().to_string(),
                r.replication.to_string(),
                r.seed.to_string(),
                fmt_f64(r.cluster_error),
                r.rejected.to_string(),
            ];
            row.extend(r.l1_two_step.iter().map(|&v| fmt_f64(v)));
            row.extend(r.l1_oracle.iter().map(|&v| fmt_f64(v)));
            match &r.l1_em {
                Some(em) => row.extend(em.iter().map(|&v| fmt_f64(v))),
                None => row.extend(std::iter::repeat_n(String::new(), m)),
            }
            w.write_record(&row)?;
        }
    }
    into_bytes(w)
}

pub fn failures_csv(failures: &[FailedReplication]) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    w.write_record(["replication", "seed", "message"])?;
    for f in failures {
        w.write_record([
            f.replication.to_string(),
            f.seed.to_string(),
            f.message.clone(),
        ])?;
    }
    into_bytes(w)
}

/// Writes the four report files into `dir`, creating it if needed.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(AGGREGATE_FILE), aggregate_csv(&report.aggregates)?)?;
    fs::write(dir.join(REPLICATIONS_FILE), replications_csv(report)?)?;
    fs::write(dir.join(FAILURES_FILE), failures_csv(&report.failures)?)?;
    fs::write(dir.join(CONFIG_FILE), &report.config_echo)?;
    Ok(())
}

fn input_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Input {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads `replications.csv` back as `(clusterer, record)` pairs in file order.
pub fn read_replications(path: &Path) -> Result<Vec<(String, ReplicationRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().from_path(path)?;
    let header = rdr.headers()?.clone();
    let m = header
        .iter()
        .filter(|h| h.starts_with("l1_two_step_"))
        .count();
    if m == 0 || header.len() != 5 + 3 * m {
        return Err(input_err(path, 1, "unexpected replications header"));
    }
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let num = |j: usize| -> Result<f64> {
            row[j].parse::<f64>().map_err(|_| {
                input_err(
                    path,
                    line,
                    format!("column {}: not a number: '{}'", j + 1, &row[j]),
                )
            })
        };
        let int = |j: usize| -> Result<u64> {
            row[j].parse::<u64>().map_err(|_| {
                input_err(
                    path,
                    line,
                    format!("column {}: not an integer: '{}'", j + 1, &row[j]),
                )
            })
        };
        let block = |start: usize| -> Result<Vec<f64>> { (start..start + m).map(num).collect() };
        let l1_em = if row[5 + 2 * m].is_empty() {
            None
        } else {
            Some(block(5 + 2 * m)?)
        };
        out.push((
            row[0].to_string(),
            ReplicationRecord {
                replication: int(1)? as usize,
                seed: int(2)?,
                cluster_error: num(3)?,
                rejected: int(4)? as usize,
                l1_two_step: block(5)?,
                l1_oracle: block(5 + m)?,
                l1_em,
            },
        ));
    }
    Ok(out)
}
