//! Features built from consumption curves observed at nine instants, with a
//! disruption window between the fourth and sixth instants.

use rand::Rng;
use thiserror::Error;

use crate::rng::stream;

pub const CURVE_LEN: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ErdfError {
    #[error("row {row}: expected {CURVE_LEN} consumption values, found {found}")]
    WrongColumnCount { row: usize, found: usize },
    #[error(
        "row {row}: consumption values must be positive and finite (column {column} = {value})"
    )]
    NonPositive {
        row: usize,
        column: usize,
        value: f64,
    },
}

/// How the relative variations around the disruption are oriented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VariationConvention {
    /// `v_54 = (Z_4 - Z_5) / Z_5`, `v_65 = (Z_5 - Z_6) / Z_6`: the
    /// `v_ij = (Z_j - Z_i) / Z_i` definition read with `(i, j) = (5, 4)` and
    /// `(6, 5)`.
    #[default]
    Literal,
    /// `v_54 = (Z_5 - Z_4) / Z_4`, `v_65 = (Z_6 - Z_5) / Z_5`.
    Forward,
}

impl VariationConvention {
    pub fn name(self) -> &'static str {
        match self {
            VariationConvention::Literal => "literal",
            VariationConvention::Forward => "forward",
        }
    }
}

impl std::str::FromStr for VariationConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(VariationConvention::Literal),
            "forward" => Ok(VariationConvention::Forward),
            other => Err(format!(
                "unknown variation convention '{other}' (expected literal or forward)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErdfFeatures {
    /// `(min(v_54, v_65), v_54 + v_65)` per curve.
    pub x: Vec<[f64; 2]>,
    /// Mean levels before, during and after the window, then the relative
    /// evolutions during/before, after/before and after/during.
    pub y: Vec<[f64; 6]>,
}

/// Relative variation from instant `i` to instant `j` (1-based):
/// `(Z_j - Z_i) / Z_i`.
fn variation(z: &[f64], i: usize, j: usize) -> f64 {
    (z[j - 1] - z[i - 1]) / z[i - 1]
}

pub fn erdf_features(
    curves: &[Vec<f64>],
    convention: VariationConvention,
) -> Result<ErdfFeatures, ErdfError> {
    let mut x = Vec::with_capacity(curves.len());
    let mut y = Vec::with_capacity(curves.len());
    for (row, z) in curves.iter().enumerate() {
        if z.len() != CURVE_LEN {
            return Err(ErdfError::WrongColumnCount {
                row,
                found: z.len(),
            });
        }
        if let Some((column, &value)) = z
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(ErdfError::NonPositive {
                row,
                column: column + 1,
                value,
            });
        }
        let (v54, v65) = match convention {
            VariationConvention::Literal => (variation(z, 5, 4), variation(z, 6, 5)),
            VariationConvention::Forward => (variation(z, 4, 5), variation(z, 5, 6)),
        };
        x.push([v54.min(v65), v54 + v65]);

        let y1 = (z[0] + z[1] + z[2]) / 3.0;
        let y2 = (z[3] + z[4] + z[5]) / 3.0;
        let y3 = (z[6] + z[7] + z[8]) / 3.0;
        y.push([y1, y2, y3, (y2 - y1) / y1, (y3 - y1) / y1, (y3 - y2) / y2]);
    }
    Ok(ErdfFeatures { x, y })
}

/// Synthetic curves with the consumption-curve schema: `n` customers, every
/// other one (odd rows, 0-based) affected by a dip centred on the fifth
/// instant. Row 0 is a constant curve. Returns the curves and labels
/// (1 = affected, 2 = not affected).
pub fn synthetic_curves(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = stream(seed);
    let mut curves = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let level: f64 = rng.random_range(1.0..5.0);
        let affected = k % 2 == 1;
        let mut z: Vec<f64> = (0..CURVE_LEN)
            .map(|_| level * (1.0 + rng.random_range(-0.03..0.03)))
            .collect();
        if k == 0 {
            z = vec![level; CURVE_LEN];
        }
        if affected {
            let depth: f64 = rng.random_range(0.45..0.55);
            let shoulder: f64 = rng.random_range(0.8..0.9);
            z[3] *= shoulder;
            z[4] *= depth;
            z[5] *= shoulder;
        }
        curves.push(z);
        labels.push(if affected { 1 } else { 2 });
    }
    (curves, labels)
}
