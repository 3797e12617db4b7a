//! Single-linkage radius-graph clustering and the interval rule for the
//! uniform toy model.
//!
//! Two observations are adjacent when their closed balls of radius `r`
//! intersect, i.e. `‖x_k - x_l‖ ≤ 2r`. The number of connected components
//! `M̂_r` only changes at half the edge lengths of a Euclidean minimum
//! spanning tree, so the smallest radius giving at most `M` components is read
//! directly off the sorted MST edges.

use thiserror::Error;

use crate::model::{ClusterAssignment, ClusterMethod, ModelError};
use crate::numeric::euclidean;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadiusError {
    #[error("fewer points than clusters ({n} < {m})")]
    TooFewPoints { n: usize, m: usize },
    #[error(
        "cannot realize exactly M clusters: {found} components at the selected radius, M = {m}"
    )]
    CannotRealize { found: usize, m: usize },
    #[error("component count must be at least 1")]
    ZeroClusters,
    #[error("empty point set")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Connected components of the radius-`r` affinity graph, found by
/// depth-first search. Blocks hold 0-based indices in increasing order and
/// are sorted by their smallest member.
pub fn affinity_components(points: &[Vec<f64>], r: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let threshold = 2.0 * r;
    let mut seen = vec![false; n];
    let mut blocks = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut block = Vec::new();
        while let Some(k) = stack.pop() {
            block.push(k);
            for l in 0..n {
                if !seen[l] && euclidean(&points[k], &points[l]) <= threshold {
                    seen[l] = true;
                    stack.push(l);
                }
            }
        }
        block.sort_unstable();
        blocks.push(block);
    }
    blocks
}

/// An MST edge between points `a` and `b` of length `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// Prim's algorithm on the complete Euclidean graph, `O(n²)`.
pub fn euclidean_mst(points: &[Vec<f64>]) -> Vec<MstEdge> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    in_tree[0] = true;
    for l in 1..n {
        best[l] = euclidean(&points[0], &points[l]);
    }
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for l in 0..n {
            if !in_tree[l] && (next == usize::MAX || best[l] < next_d) {
                next = l;
                next_d = best[l];
            }
        }
        in_tree[next] = true;
        edges.push(MstEdge {
            a: parent[next],
            b: next,
            length: next_d,
        });
        for l in 0..n {
            if !in_tree[l] {
                let d = euclidean(&points[next], &points[l]);
                if d < best[l] {
                    best[l] = d;
                    parent[l] = next;
                }
            }
        }
    }
    edges
}

/// The step function `r ↦ M̂_r` in compact form.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusProfile {
    /// Half MST edge lengths, largest first.
    merge_radii: Vec<f64>,
    n: usize,
}

impl RadiusProfile {
    pub fn merge_radii(&self) -> &[f64] {
        &self.merge_radii
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `M̂_r = 1 + #{merge radii > r}` (or `n` for an empty profile).
    pub fn components_at(&self, r: f64) -> usize {
        if self.n == 0 {
            return 0;
        }
        1 + self.merge_radii.iter().filter(|&&m| m > r).count()
    }

    /// `r̂ = min{r ≥ 0 : M̂_r ≤ m}`.
    pub fn radius_for(&self, m: usize) -> f64 {
        if self.n <= m || m == 0 {
            0.0
        } else {
            self.merge_radii[m - 1]
        }
    }
}

pub fn radius_profile(points: &[Vec<f64>]) -> RadiusProfile {
    let mut merge_radii: Vec<f64> = euclidean_mst(points)
        .iter()
        .map(|e| e.length / 2.0)
        .collect();
    merge_radii.sort_by(|a, b| b.total_cmp(a));
    RadiusProfile {
        merge_radii,
        n: points.len(),
    }
}

/// Smallest radius whose affinity graph has at most `m` components.
pub fn select_radius(points: &[Vec<f64>], m: usize) -> f64 {
    radius_profile(points).radius_for(m)
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Labels `1..` by component, numbered in order of each component's smallest
/// member index.
fn labels_from_roots(ds: &mut DisjointSet, n: usize) -> (Vec<usize>, usize) {
    let mut label_of_root = vec![0usize; n];
    let mut labels = vec![0usize; n];
    let mut next = 0;
    for (k, label) in labels.iter_mut().enumerate() {
        let root = ds.find(k);
        if label_of_root[root] == 0 {
            next += 1;
            label_of_root[root] = next;
        }
        *label = label_of_root[root];
    }
    (labels, next)
}

/// Partition into the components of the affinity graph at `r̂`.
pub fn radius_graph_cluster(
    points: &[Vec<f64>],
    m: usize,
) -> Result<ClusterAssignment, RadiusError> {
    let n = points.len();
    if m == 0 {
        return Err(RadiusError::ZeroClusters);
    }
    if n == 0 {
        return Err(RadiusError::Empty);
    }
    if n < m {
        return Err(RadiusError::TooFewPoints { n, m });
    }
    let edges = euclidean_mst(points);
    let mut radii: Vec<f64> = edges.iter().map(|e| e.length / 2.0).collect();
    radii.sort_by(|a, b| b.total_cmp(a));
    let profile = RadiusProfile {
        merge_radii: radii,
        n,
    };
    let r_hat = profile.radius_for(m);

    let mut ds = DisjointSet::new(n);
    for e in &edges {
        if e.length <= 2.0 * r_hat {
            ds.union(e.a, e.b);
        }
    }
    let (labels, found) = labels_from_roots(&mut ds, n);
    if found != m {
        return Err(RadiusError::CannotRealize { found, m });
    }
    Ok(ClusterAssignment::new(
        labels,
        m,
        Some(r_hat),
        ClusterMethod::RadiusGraph,
    )?)
}

/// Three-zone rule for the uniform toy model with `λ̂ = 2 - max(x)`:
/// label 2 when `x ≥ 1`, label 1 when `x ≤ 1 - λ̂`, otherwise the reject
/// label 0.
pub fn interval_cluster(x: &[f64]) -> Result<ClusterAssignment, RadiusError> {
    if x.is_empty() {
        return Err(RadiusError::Empty);
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lambda_hat = 2.0 - max;
    let cut = 1.0 - lambda_hat;
    let labels = x
        .iter()
        .map(|&v| {
            if v >= 1.0 {
                2
            } else if v <= cut {
                1
            } else {
                0
            }
        })
        .collect();
    Ok(ClusterAssignment::new(
        labels,
        2,
        None,
        ClusterMethod::Interval,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn components_small_example() {
        let p = pts(&[0.0, 1.0, 5.0, 6.0]);
        assert_eq!(affinity_components(&p, 0.5), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(affinity_components(&p, 0.0).len(), 4);
        assert_eq!(affinity_components(&p, 3.0), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn profile_small_example() {
        let prof = radius_profile(&pts(&[0.0, 1.0, 5.0, 6.0]));
        assert_eq!(prof.merge_radii(), &[2.0, 0.5, 0.5]);
        assert_eq!(prof.components_at(0.4), 4);
        assert_eq!(prof.components_at(0.5), 2);
        assert_eq!(prof.components_at(1.9), 2);
        assert_eq!(prof.components_at(2.0), 1);
    }

    #[test]
    fn profile_identical_points() {
        let prof = radius_profile(&pts(&[3.0, 3.0]));
        assert_eq!(prof.merge_radii(), &[0.0]);
        assert_eq!(prof.components_at(0.0), 1);
        assert_eq!(radius_profile(&pts(&[1.0])).merge_radii(), &[] as &[f64]);
    }

    #[test]
    fn select_radius_examples() {
        let p = pts(&[0.0, 1.0, 5.0, 6.0]);
        assert_eq!(select_radius(&p, 2), 0.5);
        assert_eq!(select_radius(&p, 1), 2.0);
        assert_eq!(select_radius(&p, 4), 0.0);
        assert_eq!(select_radius(&pts(&[0.0, 1.0]), 2), 0.0);
    }

    #[test]
    fn cluster_examples() {
        let a = radius_graph_cluster(&pts(&[0.0, 1.0, 5.0, 6.0]), 2).unwrap();
        assert_eq!(a.predicted(), &[1, 1, 2, 2]);
        assert_eq!(a.radius(), Some(0.5));

        let a = radius_graph_cluster(&pts(&[0.0, 0.0, 9.0, 9.0]), 2).unwrap();
        assert_eq!(a.predicted(), &[1, 1, 2, 2]);

        let a = radius_graph_cluster(&pts(&[4.0, -1.0, 2.5]), 3).unwrap();
        let mut l = a.predicted().to_vec();
        l.sort_unstable();
        assert_eq!(l, vec![1, 2, 3]);
    }

    #[test]
    fn cluster_errors() {
        assert_eq!(
            radius_graph_cluster(&pts(&[1.0]), 2),
            Err(RadiusError::TooFewPoints { n: 1, m: 2 })
        );
        let err = radius_graph_cluster(&pts(&[1.0, 1.0, 1.0]), 2).unwrap_err();
        assert!(err
            .to_string()
            .contains("cannot realize exactly M clusters"));
    }

    #[test]
    fn interval_rule() {
        let a = interval_cluster(&[0.1, 0.5, 0.95, 1.2, 1.8]).unwrap();
        assert_eq!(a.predicted(), &[1, 1, 0, 2, 2]);

        let a = interval_cluster(&[0.2, 0.99, 1.0, 2.0]).unwrap();
        assert_eq!(a.predicted(), &[1, 1, 2, 2]);
    }
}
