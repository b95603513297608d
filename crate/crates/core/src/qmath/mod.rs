//! Dense complex operator algebra.
//!
//! Conventions used throughout the crate:
//! - `k_B = ħ = 1`, and the weight's `mg = 1`, so lengths and energies share units;
//! - entropies are in nats;
//! - in a tensor product the left factor is the most significant index.

mod eigen;
mod matrix;
mod states;

pub use eigen::{eig_hermitian, eigvals_hermitian, psd_eigenvalues, EigenDecomposition};
pub use matrix::{on_left, partial_trace, tensor, tensor_vec, tensor_with_limit, ComplexMatrix, DEFAULT_MAX_DIM};
pub use states::{DensityOperator, Observable, UnitaryOperator};

pub(crate) use eigen::clamp_psd;
pub(crate) use states::check_same_dim;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Result;

pub const TOL_HERM: f64 = 1e-10;
pub const TOL_TRACE: f64 = 1e-10;
pub const TOL_PSD: f64 = 1e-9;
pub const TOL_UNITARY: f64 = 1e-9;

/// `-Σ λ ln λ` with `0 ln 0 = 0`.
pub fn entropy_from_eigenvalues(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let values = psd_eigenvalues(rho.matrix())?;
    Ok(entropy_from_eigenvalues(&values))
}

/// `p · S(X/p)` for a positive operator `X` with `p = Tr X`; zero when `X = 0`.
///
/// Smooth in `X` even as `p → 0`, which the benefit objectives rely on.
pub fn weighted_entropy(x: &ComplexMatrix) -> Result<(f64, f64)> {
    let values = psd_eigenvalues(x)?;
    let p: f64 = values.iter().sum();
    if p <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let h = entropy_from_eigenvalues(&values) + p * p.ln();
    Ok((p, h))
}

/// Relative entropy `Tr[ρ ln ρ − ρ ln σ]`; `+∞` when the support of `ρ` is not contained in that of `σ`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_same_dim(rho.dim(), sigma.dim(), "relative entropy")?;
    let er = rho.eigen();
    let es = sigma.eigen();
    let n = rho.dim();
    let mut d = -entropy_from_eigenvalues(&clamp_psd(er.values.clone())?);
    for i in 0..n {
        let li = er.values[i].max(0.0);
        if li <= 0.0 {
            continue;
        }
        let ri = er.vector(i);
        for j in 0..n {
            let sj = es.vector(j);
            let overlap: f64 = ri
                .iter()
                .zip(&sj)
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
                .norm_sqr();
            let weight = li * overlap;
            let mu = es.values[j];
            if mu <= TOL_PSD {
                if weight > 1e-12 {
                    return Ok(f64::INFINITY);
                }
                continue;
            }
            d -= weight * mu.ln();
        }
    }
    Ok(d.max(0.0))
}

/// Trace norm `‖A‖₁` of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigvals_hermitian(m)?.iter().map(|l| l.abs()).sum())
}

/// `½‖ρ − σ‖₁`
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_same_dim(rho.dim(), sigma.dim(), "trace distance")?;
    Ok((0.5 * trace_norm(&(rho.matrix() - sigma.matrix()))?).clamp(0.0, 1.0))
}

/// Complex matrices serialise as nested rows of `[re, im]` pairs.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows())
            .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<Complex64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityOperator::pure(&[c(0.6), Complex64::new(0.0, 0.8)]).unwrap();
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);
        for d in 2..6 {
            let s = von_neumann_entropy(&DensityOperator::maximally_mixed(d)).unwrap();
            assert!((s - (d as f64).ln()).abs() < 1e-12);
        }
        let rho = DensityOperator::diagonal(&[0.75, 0.25]).unwrap();
        let expected = -0.75 * 0.75f64.ln() - 0.25 * 0.25f64.ln();
        assert!((von_neumann_entropy(&rho).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.5623351446188083).abs() < 1e-15);
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = DensityOperator::diagonal(&[0.3, 0.7]).unwrap();
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-12);
        let zero = DensityOperator::basis(2, 0);
        let one = DensityOperator::basis(2, 1);
        let mixed = DensityOperator::maximally_mixed(2);
        assert!((relative_entropy(&zero, &mixed).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(relative_entropy(&zero, &one).unwrap(), f64::INFINITY);
        assert!(relative_entropy(&zero, &zero).unwrap().abs() < 1e-12);
    }

    #[test]
    fn trace_distance_examples() {
        let zero = DensityOperator::basis(2, 0);
        let one = DensityOperator::basis(2, 1);
        let mixed = DensityOperator::maximally_mixed(2);
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-15);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-14);
        assert!((trace_distance(&mixed, &zero).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let a = DensityOperator::maximally_mixed(2);
        let b = DensityOperator::maximally_mixed(3);
        assert!(matches!(trace_distance(&a, &b), Err(Error::DimensionMismatch(_))));
        assert!(matches!(relative_entropy(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn matrix_json_format() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0), Complex64::new(0.0, -0.5)],
            vec![Complex64::new(0.0, 0.5), c(2.0)],
        ])
        .unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[[1.0,0.0],[0.0,-0.5]],[[0.0,0.5],[2.0,0.0]]]");
        let back: ComplexMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>("[[[1,0]],[[1,0],[2,0]]]").is_err());
    }

    #[test]
    fn weighted_entropy_matches_definition() {
        let x = ComplexMatrix::diag(&[0.2, 0.1]);
        let (p, h) = weighted_entropy(&x).unwrap();
        let rho = DensityOperator::diagonal(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((p - 0.3).abs() < 1e-15);
        assert!((h - 0.3 * von_neumann_entropy(&rho).unwrap()).abs() < 1e-14);
        assert_eq!(weighted_entropy(&ComplexMatrix::zeros(2, 2)).unwrap(), (0.0, 0.0));
    }
}
