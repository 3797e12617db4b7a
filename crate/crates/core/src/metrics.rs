//! L1 distances between tabulated densities, permutation-minimized
//! clustering error, and Monte Carlo ratio statistics.

use thiserror::Error;

use crate::model::{
    enumerate_permutations, ClusterAssignment, DensityGrid, ModelError, Permutation,
};
use crate::numeric::{order_insensitive_mean, order_insensitive_sum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("density grids differ: [{0}, {1}] with {2} points vs [{3}, {4}] with {5} points")]
    GridMismatch(f64, f64, usize, f64, f64, usize),
    #[error("length mismatch: {predicted} predictions vs {truth} true labels")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("true label {label} at index {index} is outside 1..={m}")]
    TruthOutOfRange {
        index: usize,
        label: usize,
        m: usize,
    },
    #[error("no replication records")]
    NoRecords,
    #[error("component {component} out of range 1..={m}")]
    ComponentOutOfRange { component: usize, m: usize },
    #[error("mean L1 error of the denominator is zero")]
    ZeroDenominator,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Trapezoidal `∫ |f - g|` over the shared grid.
pub fn l1_distance(f: &DensityGrid, g: &DensityGrid) -> Result<f64, MetricsError> {
    if !f.same_abscissae(g) {
        return Err(MetricsError::GridMismatch(
            f.lo(),
            f.hi(),
            f.len(),
            g.lo(),
            g.hi(),
            g.len(),
        ));
    }
    let diff: Vec<f64> = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok(crate::model::trapezoid(&diff, f.step()))
}

/// `min_π (1/n) Σ 1{π(Î_k) ≠ I_k}` with the minimizing permutation. Label 0
/// never matches a true label. Ties go to the lexicographically first
/// permutation.
pub fn misclassification_error(
    predicted: &ClusterAssignment,
    truth: &[usize],
    m: usize,
) -> Result<(f64, Permutation), MetricsError> {
    let n = predicted.len();
    if truth.len() != n {
        return Err(MetricsError::LengthMismatch {
            predicted: n,
            truth: truth.len(),
        });
    }
    if let Some((index, &label)) = truth.iter().enumerate().find(|(_, &l)| l == 0 || l > m) {
        return Err(MetricsError::TruthOutOfRange { index, label, m });
    }
    let perms = enumerate_permutations(m)?;
    if n == 0 {
        return Ok((0.0, Permutation::identity(m)));
    }
    // confusion[p][t]: predicted label p (1..=m) against true label t.
    let mut confusion = vec![vec![0usize; m + 1]; m + 1];
    for (&p, &t) in predicted.predicted().iter().zip(truth) {
        if p <= m {
            confusion[p][t] += 1;
        }
    }
    let mut best: Option<(usize, &Permutation)> = None;
    for perm in &perms {
        let agree: usize = (1..=m).map(|p| confusion[p][perm.apply(p)]).sum();
        if best.is_none_or(|(b, _)| agree > b) {
            best = Some((agree, perm));
        }
    }
    let (agree, perm) = best.unwrap();
    Ok(((n - agree) as f64 / n as f64, perm.clone()))
}

/// Raw `(1/n) Σ 1{Î_k ≠ I_k}` without relabeling.
pub fn unpermuted_error(predicted: &[usize], truth: &[usize]) -> f64 {
    let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
    wrong as f64 / truth.len().max(1) as f64
}

/// Errors of one Monte Carlo replication for one clusterer.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    /// Per-component `‖f̂_i - f_i‖₁`.
    pub l1_two_step: Vec<f64>,
    /// Per-component `‖f̄_i - f_i‖₁`.
    pub l1_oracle: Vec<f64>,
    /// Per-component `‖f_i^em - f_i‖₁`, when the EM benchmark ran.
    pub l1_em: Option<Vec<f64>>,
    pub cluster_error: f64,
    /// Observations placed in the reject cluster.
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioStatistics {
    pub two_step_vs_em: Option<f64>,
    pub oracle_vs_em: Option<f64>,
    pub two_step_vs_oracle: f64,
}

fn column(records: &[ReplicationRecord], pick: impl Fn(&ReplicationRecord) -> f64) -> Vec<f64> {
    records.iter().map(pick).collect()
}

fn ratio_of_means(num: &[f64], den: &[f64]) -> Result<f64, MetricsError> {
    let d = order_insensitive_sum(den);
    if d <= 0.0 {
        return Err(MetricsError::ZeroDenominator);
    }
    // Both sums run over the same number of replications.
    Ok(order_insensitive_sum(num) / d)
}

/// Ratios of Monte Carlo means for component `component` (1-based).
pub fn ratio_statistics(
    records: &[ReplicationRecord],
    component: usize,
) -> Result<RatioStatistics, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    let m = records[0].l1_oracle.len();
    if component == 0 || component > m {
        return Err(MetricsError::ComponentOutOfRange { component, m });
    }
    let i = component - 1;
    let two_step = column(records, |r| r.l1_two_step[i]);
    let oracle = column(records, |r| r.l1_oracle[i]);
    let two_step_vs_oracle = ratio_of_means(&two_step, &oracle)?;
    let (two_step_vs_em, oracle_vs_em) = if records.iter().all(|r| r.l1_em.is_some()) {
        let em = column(records, |r| r.l1_em.as_ref().unwrap()[i]);
        (
            Some(ratio_of_means(&two_step, &em)?),
            Some(ratio_of_means(&oracle, &em)?),
        )
    } else {
        (None, None)
    };
    Ok(RatioStatistics {
        two_step_vs_em,
        oracle_vs_em,
        two_step_vs_oracle,
    })
}

/// Mean and Monte Carlo standard error `s / √R`.
pub fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let r = values.len();
    if r == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = order_insensitive_mean(values);
    if r < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = order_insensitive_sum(&sq) / (r - 1) as f64;
    (mean, (var / r as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_grid, ClusterMethod};
    use crate::numeric::normal_pdf;

    fn assign(labels: &[usize], m: usize) -> ClusterAssignment {
        ClusterAssignment::new(labels.to_vec(), m, None, ClusterMethod::KMeans).unwrap()
    }

    #[test]
    fn l1_examples() {
        let grid = make_grid(-10.0, 10.0, 2048).unwrap();
        let f = grid.tabulate(|t| normal_pdf(t, -1.0, 1.0));
        let g = grid.tabulate(|t| normal_pdf(t, 1.0, 1.0));
        assert_eq!(l1_distance(&f, &f).unwrap(), 0.0);
        // 2(2Φ(1) - 1)
        assert!((l1_distance(&f, &g).unwrap() - 1.365_379_1).abs() < 1e-3);

        let grid = make_grid(0.0, 4.0, 4001).unwrap();
        let a = grid.tabulate(|t| if (0.5..=1.5).contains(&t) { 1.0 } else { 0.0 });
        let b = grid.tabulate(|t| if (2.5..=3.5).contains(&t) { 1.0 } else { 0.0 });
        // Each of the four jumps costs at most one grid step.
        assert!((l1_distance(&a, &b).unwrap() - 2.0).abs() <= 4.0 * 0.001 + 1e-12);
    }

    #[test]
    fn l1_rejects_mismatched_grids() {
        let a = make_grid(0.0, 1.0, 10).unwrap();
        let b = make_grid(0.0, 1.0, 11).unwrap();
        assert!(matches!(
            l1_distance(&a, &b),
            Err(MetricsError::GridMismatch(..))
        ));
    }

    #[test]
    fn misclassification_examples() {
        let truth = [1, 1, 2, 2, 1];
        let (e, p) = misclassification_error(&assign(&truth, 2), &truth, 2).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(p, Permutation::identity(2));

        let swapped = [2, 2, 1, 1, 2];
        let (e, p) = misclassification_error(&assign(&swapped, 2), &truth, 2).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(p.as_slice(), &[2, 1]);

        // Label 0 is always an error.
        let (e, _) = misclassification_error(&assign(&[0, 1, 2, 2, 1], 2), &truth, 2).unwrap();
        assert!((e - 0.2).abs() < 1e-15);
    }

    #[test]
    fn misclassification_rejects_large_m() {
        let a = assign(&[1], 9);
        assert!(misclassification_error(&a, &[1], 9).is_err());
        assert!(matches!(
            misclassification_error(&assign(&[1, 2], 2), &[1], 2),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }

    fn record(two_step: f64, oracle: f64, em: Option<f64>) -> ReplicationRecord {
        ReplicationRecord {
            replication: 0,
            seed: 0,
            l1_two_step: vec![two_step, two_step],
            l1_oracle: vec![oracle, oracle],
            l1_em: em.map(|e| vec![e, e]),
            cluster_error: 0.0,
            rejected: 0,
        }
    }

    #[test]
    fn ratios_of_means() {
        let same = vec![record(0.2, 0.2, None); 5];
        let r = ratio_statistics(&same, 1).unwrap();
        assert_eq!(r.two_step_vs_oracle, 1.0);
        assert_eq!(r.two_step_vs_em, None);

        // Ratio of means, not mean of ratios: (0.1 + 0.3) / (0.1 + 0.1) = 2,
        // whereas the mean of ratios would be (1 + 3) / 2 = 2 as well, so use
        // unequal denominators.
        let recs = vec![record(0.1, 0.1, Some(0.05)), record(0.3, 0.3, Some(0.35))];
        let r = ratio_statistics(&recs, 2).unwrap();
        assert!((r.two_step_vs_em.unwrap() - 1.0).abs() < 1e-15);
        assert!((r.oracle_vs_em.unwrap() - 1.0).abs() < 1e-15);

        assert_eq!(ratio_statistics(&[], 1), Err(MetricsError::NoRecords));
        assert_eq!(
            ratio_statistics(&[record(0.1, 0.0, None)], 1),
            Err(MetricsError::ZeroDenominator)
        );
        assert!(ratio_statistics(&same, 3).is_err());
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_and_standard_error(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
