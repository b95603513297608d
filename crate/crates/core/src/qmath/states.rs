use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::eigen::{eig_hermitian, psd_eigenvalues, EigenDecomposition};
use super::matrix::ComplexMatrix;
use super::{TOL_HERM, TOL_TRACE, TOL_UNITARY};
use crate::error::{Error, Result};

/// Positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates hermiticity, positivity and normalisation.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        validate_hermitian(&matrix)?;
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TOL_TRACE || trace.im.abs() > TOL_TRACE {
            return Err(Error::NotNormalized { trace: trace.re });
        }
        psd_eigenvalues(&matrix)?;
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    /// Normalises a positive operator by its trace.
    pub fn from_positive(matrix: ComplexMatrix) -> Result<Self> {
        let tr = matrix.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::NotNormalized { trace: tr });
        }
        Self::new(matrix.scale(1.0 / tr))
    }

    /// Skips validation; for internal use where positivity holds by construction.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let psi: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self {
            matrix: ComplexMatrix::outer(&psi, &psi),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        Self {
            matrix: ComplexMatrix::unit(dim, index, index),
        }
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::diag(populations))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Eigenvalues (descending, clamped at zero).
    pub fn eigenvalues(&self) -> Vec<f64> {
        psd_eigenvalues(&self.matrix).expect("density operator invariant")
    }

    pub fn eigen(&self) -> EigenDecomposition {
        eig_hermitian(&self.matrix).expect("density operator invariant")
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            matrix: self.matrix.kron(&other.matrix)?,
        })
    }

    /// `Tr[O ρ]` for a Hermitian `O`.
    pub fn expectation(&self, op: &Observable) -> Result<f64> {
        check_same_dim(self.dim(), op.dim(), "expectation value")?;
        Ok(op.matrix().trace_product(&self.matrix).re)
    }

    /// `(1-η) ρ + η I/d`
    pub fn mix_with_identity(&self, eta: f64) -> Self {
        let d = self.dim();
        let id = ComplexMatrix::identity(d).scale(eta / d as f64);
        Self {
            matrix: &self.matrix.scale(1.0 - eta) + &id,
        }
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        DensityOperator::new(m).map_err(serde::de::Error::custom)
    }
}

/// Hermitian operator; energy units when used as a Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        validate_hermitian(&matrix)?;
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn diagonal(energies: &[f64]) -> Self {
        Self {
            matrix: ComplexMatrix::diag(energies),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigen(&self) -> EigenDecomposition {
        eig_hermitian(&self.matrix).expect("observable invariant")
    }

    /// Diagonal entries, provided the operator is diagonal within `tol`.
    pub fn energies_if_diagonal(&self, tol: f64) -> Result<Vec<f64>> {
        let deviation = self.matrix.max_off_diagonal();
        if deviation > tol {
            return Err(Error::NotDiagonal { deviation });
        }
        Ok(self.matrix.diagonal().iter().map(|z| z.re).collect())
    }

    /// Spectral range `(E_min, E_max)`.
    pub fn spectral_range(&self) -> (f64, f64) {
        let v = self.eigen().values;
        (*v.last().unwrap_or(&0.0), *v.first().unwrap_or(&0.0))
    }

    /// Operator norm (largest absolute eigenvalue).
    pub fn operator_norm(&self) -> f64 {
        let (lo, hi) = self.spectral_range();
        lo.abs().max(hi.abs())
    }
}

impl Serialize for Observable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Observable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        Observable::new(m).map_err(serde::de::Error::custom)
    }
}

/// Square matrix with `U†U = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    matrix: ComplexMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite);
        }
        let deviation = (&matrix.adjoint() * &matrix).max_abs_diff(&ComplexMatrix::identity(matrix.rows()));
        if deviation > TOL_UNITARY {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `U ρ U†`
    pub fn conjugate(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        check_same_dim(self.dim(), rho.dim(), "unitary conjugation")?;
        Ok(DensityOperator::from_matrix_unchecked(self.matrix.sandwich(rho.matrix())))
    }
}

impl Serialize for UnitaryOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitaryOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        UnitaryOperator::new(m).map_err(serde::de::Error::custom)
    }
}

fn validate_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let deviation = m.hermiticity_deviation();
    if deviation > TOL_HERM {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

pub(crate) fn check_same_dim(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_validation() {
        assert!(DensityOperator::diagonal(&[0.5, 0.5]).is_ok());
        assert!(matches!(
            DensityOperator::diagonal(&[0.6, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            DensityOperator::diagonal(&[1.5, -0.5]),
            Err(Error::NotPositive { .. })
        ));
        let nh = ComplexMatrix::from_real_rows(&[&[0.5, 0.3], &[0.0, 0.5]]).unwrap();
        assert!(matches!(DensityOperator::new(nh), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn tiny_negative_eigenvalues_tolerated() {
        assert!(DensityOperator::diagonal(&[1.0 + 5e-10, -5e-10]).is_ok());
    }

    #[test]
    fn unitary_validation() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!(UnitaryOperator::new(x).is_ok());
        let bad = ComplexMatrix::diag(&[1.0, 2.0]);
        assert!(matches!(UnitaryOperator::new(bad), Err(Error::NotUnitary { .. })));
    }
}
