//! Lloyd's k-means with k-means++ seeding and seeded restarts.

use rand::Rng;

use super::BaselineError;
use crate::model::{ClusterAssignment, ClusterMethod};
use crate::numeric::squared_distance;
use crate::rng::{derive_seed, stream};

pub const DEFAULT_RESTARTS: usize = 10;
const MAX_LLOYD_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// 0-based cluster index per point.
    pub assignment: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub wcss: f64,
    /// Within-cluster sum of squares after each Lloyd update.
    pub wcss_history: Vec<f64>,
}

/// k-means++ seeding: the first center uniformly at random, each next one
/// with probability proportional to the squared distance to the nearest
/// chosen center.
pub fn kmeans_plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            if d2[pick] == 0.0 {
                // Rounding pushed past the end; take the last positive weight.
                pick = (0..n).rev().find(|&i| d2[i] > 0.0).unwrap();
            }
            pick
        } else {
            // All remaining points coincide with a center.
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn wcss(points: &[Vec<f64>], assignment: &[usize], centers: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| squared_distance(p, &centers[c]))
        .sum()
}

/// Lloyd iterations from `centers` until no assignment changes.
pub fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KMeansFit {
    let k = centers.len();
    let d = points[0].len();
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            // An emptied cluster keeps its previous center.
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        history.push(wcss(points, &assignment, &centers));
        let mut changed = false;
        for (p, a) in points.iter().zip(assignment.iter_mut()) {
            let (c, dist) = nearest(p, &centers);
            // Only move when strictly closer, so ties cannot cycle.
            if c != *a && dist < squared_distance(p, &centers[*a]) {
                *a = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let total = wcss(points, &assignment, &centers);
    KMeansFit {
        assignment,
        centers,
        wcss: total,
        wcss_history: history,
    }
}

/// Best of `restarts` k-means++/Lloyd runs by within-cluster sum of squares.
pub fn kmeans_fit(
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<KMeansFit, BaselineError> {
    let n = points.len();
    if k == 0 {
        return Err(BaselineError::InvalidArgument(
            "k must be at least 1".into(),
        ));
    }
    if n < k {
        return Err(BaselineError::TooFewPoints { n, k });
    }
    if restarts == 0 {
        return Err(BaselineError::InvalidArgument(
            "restarts must be at least 1".into(),
        ));
    }
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts {
        let mut rng = stream(derive_seed(seed, r as u64));
        let centers = kmeans_plus_plus(points, k, &mut rng);
        let fit = lloyd(points, centers);
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

/// Renumbers 0-based cluster ids to labels `1..=k` ordered by each cluster's
/// smallest member index. Clusters that ended up empty get the trailing
/// labels and no members.
pub fn labels_by_first_member(assignment: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![0usize; k];
    let mut next = 0;
    for &c in assignment {
        if map[c] == 0 {
            next += 1;
            map[c] = next;
        }
    }
    assignment.iter().map(|&c| map[c]).collect()
}

pub fn kmeans_cluster(
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<ClusterAssignment, BaselineError> {
    let fit = kmeans_fit(points, k, restarts, seed)?;
    Ok(ClusterAssignment::new(
        labels_by_first_member(&fit.assignment, k),
        k,
        None,
        ClusterMethod::KMeans,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn separated_blobs() {
        let mut rng = stream(1);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for i in 0..100 {
            let (cx, label) = if i % 2 == 0 { (0.0, 1) } else { (10.0, 2) };
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r: f64 = 0.5 * rng.random::<f64>().sqrt();
            pts.push(vec![cx + r * a.cos(), r * a.sin()]);
            truth.push(label);
        }
        let a = kmeans_cluster(&pts, 2, DEFAULT_RESTARTS, 5).unwrap();
        // Point 0 is in blob 1 and therefore gets label 1.
        assert_eq!(a.predicted(), truth.as_slice());
    }

    #[test]
    fn one_point_per_cluster() {
        let pts = vec![vec![0.0], vec![3.0], vec![-2.0]];
        let fit = kmeans_fit(&pts, 3, 4, 0).unwrap();
        assert_eq!(fit.wcss, 0.0);
        let a = kmeans_cluster(&pts, 3, 4, 0).unwrap();
        assert_eq!(a.predicted(), &[1, 2, 3]);
    }

    #[test]
    fn wcss_nonincreasing() {
        let mut rng = stream(4);
        let pts: Vec<Vec<f64>> = (0..300)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                vec![x, y]
            })
            .collect();
        for seed in 0..10 {
            let mut r = stream(seed);
            let fit = lloyd(&pts, kmeans_plus_plus(&pts, 4, &mut r));
            assert!(
                fit.wcss_history.windows(2).all(|w| w[1] <= w[0] + 1e-12),
                "{:?}",
                fit.wcss_history
            );
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        assert_eq!(
            kmeans_cluster(&pts, 3, 5, 9).unwrap(),
            kmeans_cluster(&pts, 3, 5, 9).unwrap()
        );
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            kmeans_cluster(&[vec![1.0]], 2, 1, 0),
            Err(BaselineError::TooFewPoints { n: 1, k: 2 })
        ));
    }

    #[test]
    fn duplicate_points_seed_without_panic() {
        let pts = vec![vec![1.0]; 5];
        let a = kmeans_cluster(&pts, 2, 3, 0).unwrap();
        assert_eq!(a.len(), 5);
    }
}
