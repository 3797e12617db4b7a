//! Shared domain types: labelled samples, cluster assignments, density grids
//! and label permutations.

use std::fmt;

use thiserror::Error;

/// Largest component count for which permutations are enumerated.
pub const MAX_ENUMERATED_COMPONENTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("sample must contain at least one observation")]
    EmptySample,
    #[error("component count must be at least 1, got {0}")]
    BadComponentCount(usize),
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("label {label} at index {index} is outside 1..={m}")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        m: usize,
    },
    #[error("covariate at index {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("covariates must have dimension at least 1")]
    ZeroDimension,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error(
        "invalid grid: need lo < hi and at least 2 points (lo={lo}, hi={hi}, points={points})"
    )]
    InvalidGrid { lo: f64, hi: f64, points: usize },
    #[error(
        "cannot enumerate permutations for m={0}; enumeration supports 1..=8, use \
         maximum-weight bipartite matching on the confusion matrix for larger m"
    )]
    TooManyComponents(usize),
    #[error("not a bijection on 1..={0}")]
    NotABijection(usize),
}

/// Observations `(y_k, x_k, I_k)` of a mixture with `m` components.
///
/// Labels are optional: a sample with hidden labels is what the two-step
/// estimator sees.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
    m: usize,
}

impl LabeledSample {
    pub fn new(
        y: Vec<f64>,
        x: Vec<Vec<f64>>,
        labels: Option<Vec<usize>>,
        m: usize,
    ) -> Result<Self, ModelError> {
        if y.is_empty() {
            return Err(ModelError::EmptySample);
        }
        if m == 0 {
            return Err(ModelError::BadComponentCount(m));
        }
        if x.len() != y.len() {
            return Err(ModelError::LengthMismatch {
                what: "x",
                got: x.len(),
                expected: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("y"));
        }
        let d = x[0].len();
        if d == 0 {
            return Err(ModelError::ZeroDimension);
        }
        for (index, p) in x.iter().enumerate() {
            if p.len() != d {
                return Err(ModelError::DimensionMismatch {
                    index,
                    got: p.len(),
                    expected: d,
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite("x"));
            }
        }
        if let Some(l) = &labels {
            if l.len() != y.len() {
                return Err(ModelError::LengthMismatch {
                    what: "labels",
                    got: l.len(),
                    expected: y.len(),
                });
            }
            if let Some((index, &label)) = l.iter().enumerate().find(|(_, &v)| v == 0 || v > m) {
                return Err(ModelError::LabelOutOfRange { index, label, m });
            }
        }
        Ok(Self { y, x, labels, m })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    /// The same sample with the labels removed.
    pub fn hide_labels(&self) -> Self {
        Self {
            labels: None,
            ..self.clone()
        }
    }
}

/// Which clustering procedure produced an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusterMethod {
    RadiusGraph,
    KMeans,
    Spectral,
    Interval,
    /// Labels copied from the truth (oracle path).
    Truth,
}

impl ClusterMethod {
    pub fn name(self) -> &'static str {
        match self {
            ClusterMethod::RadiusGraph => "radius_graph",
            ClusterMethod::KMeans => "kmeans",
            ClusterMethod::Spectral => "spectral",
            ClusterMethod::Interval => "interval",
            ClusterMethod::Truth => "truth",
        }
    }
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Predicted labels in `0..=m`; label 0 is the reject cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    predicted: Vec<usize>,
    m: usize,
    radius: Option<f64>,
    method: ClusterMethod,
}

impl ClusterAssignment {
    pub fn new(
        predicted: Vec<usize>,
        m: usize,
        radius: Option<f64>,
        method: ClusterMethod,
    ) -> Result<Self, ModelError> {
        if m == 0 {
            return Err(ModelError::BadComponentCount(m));
        }
        if let Some((index, &label)) = predicted.iter().enumerate().find(|(_, &v)| v > m) {
            return Err(ModelError::LabelOutOfRange { index, label, m });
        }
        Ok(Self {
            predicted,
            m,
            radius,
            method,
        })
    }

    /// Assignment equal to the true labels of a sample.
    pub fn from_truth(labels: &[usize], m: usize) -> Result<Self, ModelError> {
        Self::new(labels.to_vec(), m, None, ClusterMethod::Truth)
    }

    pub fn predicted(&self) -> &[usize] {
        &self.predicted
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    pub fn method(&self) -> ClusterMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    /// `N̂_i` for `i` in `0..=m` (index 0 is the reject count).
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.m + 1];
        for &l in &self.predicted {
            counts[l] += 1;
        }
        counts
    }

    /// Applies `perm` to every nonzero label; label 0 stays 0.
    pub fn relabel(&self, perm: &Permutation) -> Self {
        assert_eq!(perm.len(), self.m, "permutation size must equal m");
        Self {
            predicted: self.predicted.iter().map(|&l| perm.apply(l)).collect(),
            ..self.clone()
        }
    }
}

/// A density tabulated on `points` equally spaced abscissae covering
/// `[lo, hi]`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

/// Grid with `g` zero values on `[lo, hi]`.
pub fn make_grid(lo: f64, hi: f64, g: usize) -> Result<DensityGrid, ModelError> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi || g < 2 {
        return Err(ModelError::InvalidGrid { lo, hi, points: g });
    }
    Ok(DensityGrid {
        lo,
        hi,
        values: vec![0.0; g],
    })
}

impl DensityGrid {
    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    /// `j`-th abscissa. The last one is exactly `hi`.
    pub fn abscissa(&self, j: usize) -> f64 {
        let last = self.values.len() - 1;
        if j == last {
            self.hi
        } else {
            self.lo + j as f64 * (self.hi - self.lo) / last as f64
        }
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.values.len()).map(|j| self.abscissa(j)).collect()
    }

    /// Same abscissae, values from `f(t)`.
    pub fn tabulate(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = (0..self.values.len())
            .map(|j| f(self.abscissa(j)))
            .collect();
        Self { values, ..*self }
    }

    /// Same abscissae, all values zero.
    pub fn zeroed(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            ..*self
        }
    }

    pub fn same_abscissae(&self, other: &DensityGrid) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.values.len() == other.values.len()
    }

    /// Trapezoidal integral of the tabulated values.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.values, self.step())
    }
}

pub(crate) fn trapezoid(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let interior = crate::numeric::neumaier_sum(values[1..n - 1].iter().copied());
    step * (interior + 0.5 * (values[0] + values[n - 1]))
}

/// A bijection on `1..=m`, stored as `map[i-1] = π(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self, ModelError> {
        let m = map.len();
        let mut seen = vec![false; m];
        for &v in &map {
            if v == 0 || v > m || seen[v - 1] {
                return Err(ModelError::NotABijection(m));
            }
            seen[v - 1] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            map: (1..=m).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `π(label)`, with `π(0) = 0`.
    pub fn apply(&self, label: usize) -> usize {
        if label == 0 {
            0
        } else {
            self.map[label - 1]
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        Self { map: inv }
    }
}

/// All `m!` permutations of `1..=m` in lexicographic order.
pub fn enumerate_permutations(m: usize) -> Result<Vec<Permutation>, ModelError> {
    if m == 0 || m > MAX_ENUMERATED_COMPONENTS {
        return Err(ModelError::TooManyComponents(m));
    }
    let mut current: Vec<usize> = (1..=m).collect();
    let mut out = vec![Permutation {
        map: current.clone(),
    }];
    // Narayana's next-permutation.
    while let Some(i) = (0..m.saturating_sub(1))
        .rev()
        .find(|&i| current[i] < current[i + 1])
    {
        let j = (i + 1..m).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
        out.push(Permutation {
            map: current.clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = make_grid(0.0, 1.0, 3).unwrap();
        assert_eq!(g.abscissae(), vec![0.0, 0.5, 1.0]);
        assert_eq!(g.values(), &[0.0, 0.0, 0.0]);

        let g = make_grid(-5.0, 5.0, 11).unwrap();
        let expected: Vec<f64> = (-5..=5).map(f64::from).collect();
        assert_eq!(g.abscissae(), expected);
    }

    #[test]
    fn degenerate_grids_rejected() {
        assert!(make_grid(2.0, 2.0, 5).is_err());
        assert!(make_grid(3.0, 2.0, 5).is_err());
        assert!(make_grid(0.0, 1.0, 1).is_err());
        assert!(make_grid(f64::NEG_INFINITY, 1.0, 4).is_err());
    }

    #[test]
    fn grid_symmetric_under_reflection() {
        let a = make_grid(-3.0, 7.0, 101).unwrap().abscissae();
        let b = make_grid(-7.0, 3.0, 101).unwrap().abscissae();
        for (x, y) in a.iter().zip(b.iter().rev()) {
            assert!((x + y).abs() < 1e-12);
        }
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn small_permutation_sets() {
        let p1 = enumerate_permutations(1).unwrap();
        assert_eq!(p1, vec![Permutation::identity(1)]);

        let p2 = enumerate_permutations(2).unwrap();
        assert_eq!(p2.len(), 2);
        assert_eq!(p2[0].as_slice(), &[1, 2]);
        assert_eq!(p2[1].as_slice(), &[2, 1]);

        assert_eq!(enumerate_permutations(3).unwrap().len(), 6);
    }

    #[test]
    fn permutation_bounds() {
        assert!(enumerate_permutations(0).is_err());
        let err = enumerate_permutations(9).unwrap_err();
        assert!(err.to_string().contains("bipartite matching"));
        assert_eq!(enumerate_permutations(8).unwrap().len(), 40320);
    }

    #[test]
    fn permutations_are_distinct_bijections() {
        for m in 1..=6 {
            let perms = enumerate_permutations(m).unwrap();
            let expected: usize = (1..=m).product();
            assert_eq!(perms.len(), expected);
            let mut sorted = perms.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), expected);
            for p in &perms {
                assert!(Permutation::new(p.as_slice().to_vec()).is_ok());
                assert_eq!(p.inverse().inverse(), *p);
            }
        }
    }

    #[test]
    fn sample_validation() {
        let x = |n: usize| (0..n).map(|i| vec![i as f64]).collect::<Vec<_>>();
        assert!(LabeledSample::new(vec![1.0, 2.0], x(2), Some(vec![1, 2]), 2).is_ok());
        assert!(matches!(
            LabeledSample::new(vec![1.0, 2.0], x(3), None, 2),
            Err(ModelError::LengthMismatch { .. })
        ));
        assert!(matches!(
            LabeledSample::new(vec![1.0, 2.0], x(2), Some(vec![1]), 2),
            Err(ModelError::LengthMismatch { .. })
        ));
        assert!(matches!(
            LabeledSample::new(vec![1.0, 2.0], x(2), Some(vec![1, 3]), 2),
            Err(ModelError::LabelOutOfRange { label: 3, .. })
        ));
        assert!(matches!(
            LabeledSample::new(vec![1.0, 2.0], x(2), Some(vec![0, 1]), 2),
            Err(ModelError::LabelOutOfRange { label: 0, .. })
        ));
        assert!(matches!(
            LabeledSample::new(vec![1.0, 2.0], vec![vec![0.0], vec![1.0, 2.0]], None, 2),
            Err(ModelError::DimensionMismatch { index: 1, .. })
        ));
        assert!(matches!(
            LabeledSample::new(vec![], vec![], None, 2),
            Err(ModelError::EmptySample)
        ));
    }

    #[test]
    fn assignment_counts_and_relabel() {
        let a = ClusterAssignment::new(vec![1, 0, 2, 2], 2, None, ClusterMethod::Interval).unwrap();
        assert_eq!(a.counts(), vec![1, 1, 2]);
        let swapped = a.relabel(&Permutation::new(vec![2, 1]).unwrap());
        assert_eq!(swapped.predicted(), &[2, 0, 1, 1]);
        assert!(ClusterAssignment::new(vec![3], 2, None, ClusterMethod::KMeans).is_err());
    }
}
