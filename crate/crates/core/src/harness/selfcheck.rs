//! Randomized equivalence checks of the estimators against brute-force
//! oracles, runnable from the command line.

use rand::Rng;

use crate::kde::{oracle_estimate, two_step_estimate, BandwidthPolicy};
use crate::metrics::{misclassification_error, unpermuted_error};
use crate::model::{make_grid, ClusterAssignment, ClusterMethod, LabeledSample, Permutation};
use crate::numeric::euclidean;
use crate::radius::{radius_graph_cluster, select_radius};
use crate::rng::{derive_seed, stream, StreamRng};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    /// First failing case, if any.
    pub failure: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

fn random_points(rng: &mut StreamRng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect()
}

/// Connected components of the graph joining points within distance `2r`,
/// by repeated flooding over all pairs. Labels follow first appearance.
pub fn brute_force_components(points: &[Vec<f64>], r: f64) -> Vec<usize> {
    let n = points.len();
    let mut label = vec![0usize; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != 0 {
            continue;
        }
        next += 1;
        label[s] = next;
        let mut changed = true;
        while changed {
            changed = false;
            for a in 0..n {
                if label[a] != next {
                    continue;
                }
                for b in 0..n {
                    if label[b] == 0 && euclidean(&points[a], &points[b]) <= 2.0 * r {
                        label[b] = next;
                        changed = true;
                    }
                }
            }
        }
    }
    label
}

/// Smallest candidate radius (half a pairwise distance, or 0) at which the
/// graph has at most `m` components.
pub fn brute_force_radius(points: &[Vec<f64>], m: usize) -> f64 {
    let n = points.len();
    let mut candidates = vec![0.0];
    for a in 0..n {
        for b in a + 1..n {
            candidates.push(euclidean(&points[a], &points[b]) / 2.0);
        }
    }
    candidates.sort_by(f64::total_cmp);
    for r in candidates {
        let comps = brute_force_components(points, r)
            .into_iter()
            .max()
            .unwrap_or(0);
        if comps <= m {
            return r;
        }
    }
    unreachable!("the largest half-distance joins everything")
}

fn check_radius(seed: u64, cases: usize) -> CheckOutcome {
    let mut failure = None;
    for c in 0..cases {
        let mut rng = stream(derive_seed(seed, c as u64));
        let n = rng.random_range(1..=30);
        let d = rng.random_range(1..=3);
        let m = rng.random_range(1..=4);
        let pts = random_points(&mut rng, n, d);
        let r = select_radius(&pts, m);
        let oracle_r = brute_force_radius(&pts, m);
        if r != oracle_r {
            failure = Some(format!("case {c}: radius {r} vs brute force {oracle_r}"));
            break;
        }
        let expected = brute_force_components(&pts, oracle_r);
        let k = expected.iter().copied().max().unwrap_or(0);
        match radius_graph_cluster(&pts, m) {
            Ok(a) if k == m && a.predicted() == expected.as_slice() => {}
            Err(_) if k != m => {}
            other => {
                failure = Some(format!("case {c}: {other:?} vs {k} brute-force components"));
                break;
            }
        }
    }
    CheckOutcome {
        name: "radius graph vs brute-force closure",
        cases,
        failure,
    }
}

fn random_sample(rng: &mut StreamRng, m: usize) -> LabeledSample {
    let n = rng.random_range(m + 2..=60);
    let labels: Vec<usize> = (0..n)
        .map(|k| {
            if k < m {
                k + 1
            } else {
                rng.random_range(1..=m)
            }
        })
        .collect();
    let y: Vec<f64> = labels
        .iter()
        .map(|&l| l as f64 * 2.0 + rng.random_range(-1.5..1.5))
        .collect();
    let x = vec![vec![0.0]; n];
    LabeledSample::new(y, x, Some(labels), m).expect("valid sample")
}

fn check_identity(seed: u64, cases: usize) -> CheckOutcome {
    let grid = make_grid(-4.0, 14.0, 257).expect("valid grid");
    let mut failure = None;
    for c in 0..cases {
        let mut rng = stream(derive_seed(seed, c as u64));
        let m = rng.random_range(1..=4);
        let sample = random_sample(&mut rng, m);
        let truth = ClusterAssignment::from_truth(sample.labels().unwrap(), m).unwrap();
        let a = oracle_estimate(&sample, &BandwidthPolicy::Silverman, &grid);
        let b = two_step_estimate(
            &sample.hide_labels(),
            &truth,
            &BandwidthPolicy::Silverman,
            &grid,
        );
        if a.is_err() || a != b {
            failure = Some(format!(
                "case {c}: two-step and oracle estimates differ ({:?})",
                a.err()
            ));
            break;
        }
    }
    CheckOutcome {
        name: "two-step with true labels equals oracle",
        cases,
        failure,
    }
}

fn check_normalization(seed: u64, cases: usize) -> CheckOutcome {
    let grid = make_grid(-20.0, 30.0, 2049).expect("valid grid");
    let mut failure = None;
    'outer: for c in 0..cases {
        let mut rng = stream(derive_seed(seed, c as u64));
        let m = rng.random_range(2..=4);
        let sample = random_sample(&mut rng, m);
        // Leave the last component empty.
        let predicted: Vec<usize> = sample
            .labels()
            .unwrap()
            .iter()
            .map(|&l| l.min(m - 1))
            .collect();
        let a = ClusterAssignment::new(predicted, m, None, ClusterMethod::KMeans).unwrap();
        let est = match two_step_estimate(&sample, &a, &BandwidthPolicy::Silverman, &grid) {
            Ok(e) => e,
            Err(e) => {
                failure = Some(format!("case {c}: {e}"));
                break;
            }
        };
        for (i, e) in est.iter().enumerate() {
            let mass = e.density.mass();
            let ok = if e.support_count == 0 {
                mass == 0.0
            } else {
                (mass - 1.0).abs() <= 1e-3
            };
            if !ok {
                failure = Some(format!("case {c}: component {} has mass {mass}", i + 1));
                break 'outer;
            }
        }
    }
    CheckOutcome {
        name: "component densities integrate to one",
        cases,
        failure,
    }
}

fn check_permutation_metric(seed: u64, cases: usize) -> CheckOutcome {
    let mut failure = None;
    for c in 0..cases {
        let mut rng = stream(derive_seed(seed, c as u64));
        let m = rng.random_range(1..=4);
        let n = rng.random_range(1..=40);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(1..=m)).collect();
        let predicted: Vec<usize> = (0..n).map(|_| rng.random_range(0..=m)).collect();
        let a = ClusterAssignment::new(predicted.clone(), m, None, ClusterMethod::KMeans).unwrap();
        let (err, _) = misclassification_error(&a, &truth, m).unwrap();
        // A random relabeling of the truth must score zero.
        let mut map: Vec<usize> = (1..=m).collect();
        for i in (1..m).rev() {
            map.swap(i, rng.random_range(0..=i));
        }
        let perm = Permutation::new(map).unwrap();
        let relabeled = ClusterAssignment::from_truth(&truth, m)
            .unwrap()
            .relabel(&perm);
        let (zero, _) = misclassification_error(&relabeled, &truth, m).unwrap();
        let raw = unpermuted_error(&predicted, &truth);
        if zero != 0.0 || err > raw {
            failure = Some(format!(
                "case {c}: relabeled {zero}, minimized {err}, raw {raw}"
            ));
            break;
        }
    }
    CheckOutcome {
        name: "permutation-minimized error",
        cases,
        failure,
    }
}

/// Runs every check with `cases` random instances each.
pub fn run_selfcheck(seed: u64, cases: usize) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_radius(derive_seed(seed, 1), cases),
        check_identity(derive_seed(seed, 2), cases),
        check_normalization(derive_seed(seed, 3), cases),
        check_permutation_metric(derive_seed(seed, 4), cases),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for outcome in run_selfcheck(7, 40).unwrap() {
            assert!(outcome.passed(), "{}: {:?}", outcome.name, outcome.failure);
        }
    }
}
