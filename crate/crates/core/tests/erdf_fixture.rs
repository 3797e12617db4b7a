//! The bundled consumption-curve fixture and the pipeline run on it.
//! Regenerate the fixture files with `UPDATE_FIXTURES=1 cargo test --test erdf_fixture`.

use std::fs;
use std::path::PathBuf;

use covclust::erdf::{synthetic_curves, VariationConvention};
use covclust::harness::erdf_pipeline;
use covclust::harness::erdf_pipeline::{curves_csv, erdf_analysis, read_curves};
use covclust::harness::estimate::labels_csv;
use covclust::metrics::misclassification_error;
use covclust::BandwidthPolicy;

const FIXTURE_CURVES: usize = 200;
const FIXTURE_SEED: u64 = 20_240_517;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn expected_files() -> (Vec<u8>, Vec<u8>) {
    let (curves, labels) = synthetic_curves(FIXTURE_CURVES, FIXTURE_SEED);
    (
        curves_csv(&curves).unwrap(),
        labels_csv(&[("label", &labels)]).unwrap(),
    )
}

#[test]
fn fixture_matches_generator() {
    let (curves, labels) = expected_files();
    let dir = fixture_dir();
    if std::env::var_os("UPDATE_FIXTURES").is_some() {
        fs::write(dir.join("erdf_synthetic.csv"), &curves).unwrap();
        fs::write(dir.join("erdf_synthetic.labels.csv"), &labels).unwrap();
    }
    assert_eq!(fs::read(dir.join("erdf_synthetic.csv")).unwrap(), curves);
    assert_eq!(
        fs::read(dir.join("erdf_synthetic.labels.csv")).unwrap(),
        labels
    );
}

#[test]
fn pipeline_recovers_fixture_groups() {
    let curves = read_curves(&fixture_dir().join("erdf_synthetic.csv")).unwrap();
    let (_, truth) = synthetic_curves(FIXTURE_CURVES, FIXTURE_SEED);
    let out = erdf_analysis(
        &curves,
        VariationConvention::Literal,
        &BandwidthPolicy::Silverman,
        1,
    )
    .unwrap();

    let counts = out.radius_labels.counts();
    assert_eq!(counts[0], 0);
    for &c in &counts[1..] {
        assert!((90..=110).contains(&c), "cluster sizes {counts:?}");
    }
    let (err, perm) = misclassification_error(&out.radius_labels, &truth, 2).unwrap();
    assert!(err < 0.05, "min-permutation error {err}");

    // The constant curve sits at the origin with the unaffected customers.
    assert_eq!(out.features.x[0], [0.0, 0.0]);
    let relabeled = out.radius_labels.relabel(&perm);
    assert_eq!(relabeled.predicted()[0], 2);

    for (grid, est) in &out.densities {
        for c in est {
            assert!(
                (c.density.mass() - 1.0).abs() <= 1e-3,
                "mass {} on [{}, {}]",
                c.density.mass(),
                grid.lo(),
                grid.hi()
            );
        }
    }
}

#[test]
fn pipeline_writes_density_table_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("erdf.csv");
    for conv in [VariationConvention::Literal, VariationConvention::Forward] {
        erdf_pipeline(
            &fixture_dir().join("erdf_synthetic.csv"),
            &out,
            conv,
            &BandwidthPolicy::Silverman,
            3,
        )
        .unwrap();
        let text = fs::read_to_string(&out).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
        assert_eq!(header.len(), 1 + 2 * 6);
        assert_eq!(header[0], "grid_index");
        let labels = fs::read_to_string(dir.path().join("erdf.labels.csv")).unwrap();
        assert_eq!(labels.lines().count(), 1 + FIXTURE_CURVES);
        assert!(dir.path().join("erdf.grids.csv").exists());
        assert!(dir.path().join("erdf.features.csv").exists());
        assert!(!text.contains('\r'));
    }
}
