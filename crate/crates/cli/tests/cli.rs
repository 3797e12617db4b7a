//! Exit codes and file outputs of the command-line tool.

use std::fs;
use std::process::{Command, Output};

fn covclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covclust"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn estimate_example_and_degenerate_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let out = dir.path().join("d.csv");
    fs::write(&input, "y,x1\n0,0\n0,0.1\n10,5\n10,5.1\n").unwrap();
    let o = covclust(&[
        "estimate",
        input.to_str().unwrap(),
        "--m",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let weights = fs::read_to_string(dir.path().join("d.weights.csv")).unwrap();
    assert!(
        weights.contains("\n1,0.5,2,") && weights.contains("\n2,0.5,2,"),
        "{weights}"
    );

    fs::write(&input, "y,x1\n0,1\n0,1\n10,1\n10,1\n").unwrap();
    let o = covclust(&[
        "estimate",
        input.to_str().unwrap(),
        "--m",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot realize exactly M clusters"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(covclust(&["nonsense"]).status.code(), Some(1));
    assert_eq!(covclust(&["table", "--id", "7"]).status.code(), Some(1));
    assert_eq!(
        covclust(&["simulate", "--bandwidth", "wide"]).status.code(),
        Some(1)
    );
    assert_eq!(
        covclust(&["simulate", "--grid", "3:1:10"]).status.code(),
        Some(1)
    );
    assert_eq!(covclust(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = covclust(&[
        "estimate",
        "/nonexistent/in.csv",
        "--m",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_report_with_config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small run\nx_model = uniform:0.5\nn = 60\nreplications = 9\nmaster_seed = 1\n",
    )
    .unwrap();
    let out = dir.path().join("report");
    let o = covclust(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--reps",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let echo = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echo.contains("replications = 3"), "{echo}");
    let reps = fs::read_to_string(out.join("replications.csv")).unwrap();
    assert_eq!(reps.lines().count(), 1 + 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("minimized over label permutations"));
}

#[test]
fn erdf_on_bundled_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/fixtures/erdf_synthetic.csv"
    );
    let out = dir.path().join("erdf.csv");
    for conv in ["literal", "forward"] {
        let o = covclust(&[
            "erdf",
            fixture,
            "--out",
            out.to_str().unwrap(),
            "--v54-convention",
            conv,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let header = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header.split(',').count(), 13);
    assert!(dir.path().join("erdf.labels.csv").exists());
    let o = covclust(&[
        "erdf",
        fixture,
        "--out",
        out.to_str().unwrap(),
        "--v54-convention",
        "sideways",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn selfcheck_passes() {
    let o = covclust(&["selfcheck", "--reps", "40", "--seed", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
}
