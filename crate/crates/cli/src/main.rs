//! Command-line front end: simulations, table reproduction, estimation on
//! user data, the consumption-curve pipeline and the self-check suite.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use covclust::erdf::VariationConvention;
use covclust::harness::config::{ClustererSpec, ExperimentConfig};
use covclust::harness::erdf_pipeline;
use covclust::harness::estimate_from_csv;
use covclust::harness::report::{aggregate_csv, write_report};
use covclust::harness::run_experiment;
use covclust::harness::selfcheck::run_selfcheck;
use covclust::harness::tables::{reproduce_table, table_csv, DEFAULT_TABLE_REPLICATIONS};
use covclust::{Error, ErrorKind};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

const DEFAULT_SELFCHECK_CASES: usize = 500;

const ERR_NOTE: &str =
    "note: cluster errors (err_n, cluster_error_min_perm) are minimized over label permutations";

#[derive(Parser, Debug)]
#[command(
    name = "covclust",
    version,
    about = "Two-step mixture component estimation: cluster covariates, then KDE per cluster"
)]
struct Cli {
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replications (self-check: random cases per check).
    #[arg(long)]
    reps: Option<usize>,
    /// Output file, or directory for `simulate`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key = value` configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// silverman, lscv or fixed:H.
    #[arg(long)]
    bandwidth: Option<String>,
    /// LO:HI:G or auto.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment configuration.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Extra `key=value` overrides, applied after the config file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Reproduce a simulation table as CSV.
    Table {
        /// Table number: 1, 2 or 3.
        #[arg(long)]
        id: u8,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate component densities from a `y, x1, ..., xd` CSV.
    Estimate {
        input: PathBuf,
        /// Number of components.
        #[arg(long)]
        m: usize,
        /// radius_graph, kmeans, spectral[:median|search|SIGMA] or interval.
        #[arg(long, default_value = "radius_graph")]
        clusterer: String,
        #[command(flatten)]
        common: Common,
    },
    /// Consumption-curve pipeline on a nine-column curve CSV.
    Erdf {
        input: PathBuf,
        /// Sign convention of the fourth-to-fifth variation: literal or forward.
        #[arg(long = "v54-convention", default_value = "literal")]
        v54_convention: String,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized checks of the estimators against brute-force oracles.
    Selfcheck {
        #[command(flatten)]
        common: Common,
    },
}

/// Builds the configuration: defaults, then the file, then the flags.
fn load_config(common: &Common, sets: &[String]) -> covclust::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text).map_err(|e| {
                Error::Config(format!(
                    "{}: {}",
                    path.display(),
                    e.to_string().trim_start_matches("configuration: ")
                ))
            })?
        }
        None => ExperimentConfig::default(),
    };
    for kv in sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(reps) = common.reps {
        cfg.set("replications", &reps.to_string())?;
    }
    if let Some(bw) = &common.bandwidth {
        cfg.set("bandwidth", bw)?;
    }
    if let Some(grid) = &common.grid {
        cfg.set("grid", grid)?;
    }
    if let Some(out) = &common.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> covclust::Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, bytes)?;
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn simulate(common: &Common, sets: &[String]) -> covclust::Result<()> {
    let cfg = load_config(common, sets)?;
    let report = run_experiment(&cfg)?;
    match &cfg.output {
        Some(dir) => {
            write_report(&report, dir)?;
            eprintln!("wrote report to {}", dir.display());
        }
        None => write_output(None, &aggregate_csv(&report.aggregates)?)?,
    }
    if !report.failures.is_empty() {
        eprintln!(
            "{} replication(s) failed and were dropped",
            report.failures.len()
        );
    }
    eprintln!("{ERR_NOTE}");
    Ok(())
}

fn table(id: u8, common: &Common) -> covclust::Result<()> {
    if common.bandwidth.is_some() || common.grid.is_some() {
        return Err(Error::Config(
            "table cells fix their bandwidth and grid; --bandwidth and --grid do not apply".into(),
        ));
    }
    let file = match &common.config {
        Some(_) => Some(load_config(common, &[])?),
        None => None,
    };
    let reps = common
        .reps
        .or(file.as_ref().map(|c| c.replications))
        .unwrap_or(DEFAULT_TABLE_REPLICATIONS);
    if reps == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let seed = common
        .seed
        .or(file.as_ref().map(|c| c.master_seed))
        .unwrap_or(0);
    let rows = reproduce_table(id, reps, seed, |cell| {
        eprintln!(
            "table {id}: cell {} ({} {}) done",
            cell.cell, cell.x_kind, cell.x_param
        );
    })?;
    write_output(common.out.as_deref(), &table_csv(&rows)?)?;
    eprintln!("{ERR_NOTE}");
    Ok(())
}

fn require_out(common: &Common) -> covclust::Result<&Path> {
    common.out.as_deref().ok_or_else(|| {
        Error::Config("--out is required (sidecar files are written next to it)".into())
    })
}

fn estimate(input: &Path, m: usize, clusterer: &str, common: &Common) -> covclust::Result<()> {
    let cfg = load_config(common, &[])?;
    let clusterer: ClustererSpec = clusterer.parse()?;
    let out = require_out(common)?;
    let res = estimate_from_csv(
        input,
        m,
        &clusterer,
        &cfg.bandwidth,
        &cfg.grid,
        out,
        cfg.master_seed,
    )?;
    for (i, c) in res.components.iter().enumerate() {
        eprintln!(
            "component {}: weight {} ({} points)",
            i + 1,
            c.weight,
            c.support_count
        );
    }
    Ok(())
}

fn erdf(input: &Path, convention: &str, common: &Common) -> covclust::Result<()> {
    let cfg = load_config(common, &[])?;
    let convention: VariationConvention = convention.parse().map_err(Error::Config)?;
    let out = require_out(common)?;
    let res = erdf_pipeline(input, out, convention, &cfg.bandwidth, cfg.master_seed)?;
    let counts = res.radius_labels.counts();
    eprintln!("cluster sizes: {} and {}", counts[1], counts[2]);
    Ok(())
}

fn selfcheck(common: &Common) -> covclust::Result<bool> {
    let cases = common.reps.unwrap_or(DEFAULT_SELFCHECK_CASES);
    let mut all = true;
    for outcome in run_selfcheck(common.seed.unwrap_or(0), cases)? {
        match &outcome.failure {
            None => println!("PASS {} ({} cases)", outcome.name, outcome.cases),
            Some(f) => {
                all = false;
                println!("FAIL {}: {f}", outcome.name);
            }
        }
    }
    Ok(all)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let res = match &cli.command {
        Command::Simulate { common, set } => simulate(common, set),
        Command::Table { id, common } => table(*id, common),
        Command::Estimate {
            input,
            m,
            clusterer,
            common,
        } => estimate(input, *m, clusterer, common),
        Command::Erdf {
            input,
            v54_convention,
            common,
        } => erdf(input, v54_convention, common),
        Command::Selfcheck { common } => match selfcheck(common) {
            Ok(true) => Ok(()),
            Ok(false) => return Ok(EXIT_NUMERIC),
            Err(e) => Err(e),
        },
    };
    match res {
        Ok(()) => Ok(0),
        Err(e) => {
            eprintln!("error: {e}");
            Ok(match e.kind() {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numeric => EXIT_NUMERIC,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
