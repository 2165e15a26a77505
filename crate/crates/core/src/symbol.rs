//! Constant-coefficient first-order operators `𝒜 = Σₗ Aˡ∂ₗ` and their symbols
//! `𝔸(ξ) = Σₗ ξₗAˡ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symbol of the relaxed Euler operator, a 3×8 matrix.
pub type SymbolMatrix = SMatrix<f64, 3, 8>;

/// Coefficient matrices of the relaxed Euler operator for the directions
/// `t`, `x₁`, `x₂`, exactly as they act on the 8-slot layout of
/// [`crate::lifted::StateVector`].
pub fn relaxed_euler_coefficients() -> [SymbolMatrix; 3] {
    let mut a_t = SymbolMatrix::zeros();
    a_t[(0, 0)] = 1.0;
    a_t[(1, 1)] = 1.0;
    a_t[(2, 2)] = 1.0;

    let mut a_x1 = SymbolMatrix::zeros();
    a_x1[(0, 1)] = 1.0;
    a_x1[(1, 3)] = 1.0;
    a_x1[(1, 7)] = 1.0;
    a_x1[(2, 4)] = 1.0;

    let mut a_x2 = SymbolMatrix::zeros();
    a_x2[(0, 2)] = 1.0;
    a_x2[(1, 4)] = 1.0;
    a_x2[(2, 3)] = -1.0;
    a_x2[(2, 7)] = 1.0;

    [a_t, a_x1, a_x2]
}

/// `𝔸(ξ)` for the relaxed Euler operator.
pub fn symbol(xi: [f64; 3]) -> SymbolMatrix {
    let [a, b, c] = relaxed_euler_coefficients();
    a * xi[0] + b * xi[1] + c * xi[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRange {
    pub min: usize,
    pub max: usize,
}

impl RankRange {
    pub fn is_constant(&self) -> bool {
        self.min == self.max
    }
}

/// A general first-order operator with `d` coefficient matrices of size `k×m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderOperator {
    coeffs: Vec<DMatrix<f64>>,
}

impl FirstOrderOperator {
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = coeffs.first().ok_or_else(|| {
            Error::Config("operator needs at least one coefficient matrix".into())
        })?;
        let shape = first.shape();
        if coeffs.iter().any(|a| a.shape() != shape) {
            return Err(Error::Config("coefficient matrices differ in shape".into()));
        }
        Ok(FirstOrderOperator { coeffs })
    }

    pub fn relaxed_euler() -> Self {
        let coeffs = relaxed_euler_coefficients()
            .iter()
            .map(|a| DMatrix::from_iterator(3, 8, a.iter().copied()))
            .collect();
        FirstOrderOperator { coeffs }
    }

    /// Number of independent variables `d`.
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn symbol(&self, xi: &[f64]) -> DMatrix<f64> {
        assert_eq!(xi.len(), self.dim(), "frequency has wrong dimension");
        let (k, m) = self.coeffs[0].shape();
        self.coeffs
            .iter()
            .zip(xi)
            .fold(DMatrix::zeros(k, m), |acc, (a, &x)| acc + a * x)
    }

    /// Minimum and maximum rank of `𝔸(ξ)` over `samples` points of the unit
    /// sphere; singular values below `1e−9·σ_max` count as zero.
    pub fn rank_scan(&self, samples: usize) -> Result<RankRange> {
        if samples == 0 {
            return Err(Error::Config("rank scan needs at least one sample".into()));
        }
        let points = sphere_points(self.dim(), samples)?;
        let mut range = RankRange {
            min: usize::MAX,
            max: 0,
        };
        for xi in &points {
            let r = numerical_rank(&self.symbol(xi), 1e-9);
            range.min = range.min.min(r);
            range.max = range.max.max(r);
        }
        Ok(range)
    }
}

pub fn numerical_rank(a: &DMatrix<f64>, rel: f64) -> usize {
    let sv = a.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * top).count()
}

/// Deterministic, roughly uniform points on `𝕊^{d−1}` for `d ≤ 3`: the
/// golden-angle (Fibonacci) lattice on the sphere, equally spaced angles on
/// the circle. The circle samples start at angle 0, so coordinate axes are hit.
pub fn sphere_points(d: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    match d {
        1 => Ok((0..n)
            .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }])
            .collect()),
        2 => Ok((0..n)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n as f64;
                vec![th.cos(), th.sin()]
            })
            .collect()),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            Ok((0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * i as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect())
        }
        _ => Err(Error::Config(format!(
            "sphere sampling implemented for d <= 3, got {d}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifted::{capital_matrix_of, StateVector};

    #[test]
    fn unit_directions_give_coefficients() {
        let [a, b, c] = relaxed_euler_coefficients();
        assert_eq!(symbol([1.0, 0.0, 0.0]), a);
        assert_eq!(symbol([0.0, 1.0, 0.0]), b);
        assert_eq!(symbol([0.0, 0.0, 1.0]), c);
        assert_eq!(symbol([0.0; 3]), SymbolMatrix::zeros());
        // time coefficient selects ρ, m₁, m₂
        let z = StateVector::from([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!((a * z).as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn symbol_matches_capital_matrix() {
        let z = StateVector::from([0.3, -1.2, 2.0, 0.7, -0.4, 9.0, -9.0, 1.5]);
        let xi = nalgebra::Vector3::new(0.2, -0.9, 1.3);
        let lhs = symbol([xi[0], xi[1], xi[2]]) * z;
        let rhs = capital_matrix_of(&z) * xi;
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn relaxed_euler_has_constant_rank_three() {
        let r = FirstOrderOperator::relaxed_euler().rank_scan(2000).unwrap();
        assert_eq!(r, RankRange { min: 3, max: 3 });
    }

    #[test]
    fn rank_one_operator() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let op = FirstOrderOperator::new(vec![a.clone(), a.clone() * 3.0, a * -0.5]).unwrap();
        let r = op.rank_scan(500).unwrap();
        assert_eq!(r, RankRange { min: 1, max: 1 });
    }

    #[test]
    fn diagonal_toy_operator_has_nonconstant_rank() {
        // z ↦ (∂₁z₁, ∂₂z₂): symbol diag(ξ₁, ξ₂) drops rank on the axes
        let a1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let a2 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let r = FirstOrderOperator::new(vec![a1, a2])
            .unwrap()
            .rank_scan(64)
            .unwrap();
        assert_eq!(r, RankRange { min: 1, max: 2 });
        assert!(!r.is_constant());
    }

    #[test]
    fn two_dimensional_curl_is_constant_rank() {
        // curl v = ∂₁v₂ − ∂₂v₁
        let a1 = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let a2 = DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]);
        let r = FirstOrderOperator::new(vec![a1, a2])
            .unwrap()
            .rank_scan(64)
            .unwrap();
        assert_eq!(r, RankRange { min: 1, max: 1 });
    }

    #[test]
    fn bad_configurations() {
        assert!(FirstOrderOperator::new(vec![]).is_err());
        assert!(FirstOrderOperator::relaxed_euler().rank_scan(0).is_err());
        assert!(sphere_points(4, 10).is_err());
    }
}
