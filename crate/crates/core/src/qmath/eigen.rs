//! Cyclic Jacobi diagonalisation of Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` and then applies a
//! real Givens rotation, so the iteration stays in the space of Hermitian
//! matrices. Exact zeros are never touched, which keeps block-diagonal inputs
//! (e.g. classically correlated states) cheap: rotations only happen inside
//! the blocks.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use super::{TOL_HERM, TOL_PSD};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order together with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// Column `k` as a state vector.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }

    /// `Q f(Λ) Q†`
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.vectors[(j, k)].conj() * fv[k])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|l| l)
    }
}

/// Hermitian eigen-decomposition; rejects inputs that are not Hermitian within `TOL_HERM`
/// (scaled by the matrix magnitude).
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenDecomposition> {
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
    if deviation > TOL_HERM * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let (values, vectors) = jacobi(m, true);
    Ok(sorted(values, vectors.expect("vectors requested")))
}

/// Eigenvalues only, in descending order.
pub fn eigvals_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let deviation = m.hermiticity_deviation();
    if deviation > TOL_HERM * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let (mut values, _) = jacobi(m, false);
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Eigenvalues of a PSD operator, with values in `[-TOL_PSD, 0)` clamped to zero.
pub fn psd_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let values = eigvals_hermitian(m)?;
    clamp_psd(values)
}

pub(crate) fn clamp_psd(values: Vec<f64>) -> Result<Vec<f64>> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -TOL_PSD {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(values.into_iter().map(|l| l.max(0.0)).collect())
}

fn jacobi(m: &ComplexMatrix, want_vectors: bool) -> (Vec<f64>, Option<ComplexMatrix>) {
    let n = m.rows();
    let mut a = m.hermitian_part();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
    }
    let mut v = want_vectors.then(|| ComplexMatrix::identity(n));
    let scale = a.frobenius_norm();
    if n <= 1 || scale == 0.0 {
        return ((0..n).map(|i| a[(i, i)].re).collect(), v);
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 || mag <= 1e-18 * scale {
                    continue;
                }
                let phase = apq / mag; // e^{iφ}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // R restricted to (p, q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
                let r00 = Complex64::new(c, 0.0);
                let r01 = Complex64::new(s, 0.0);
                let r10 = -phase.conj() * s;
                let r11 = phase.conj() * c;
                // A <- A R
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    if akp == ZERO && akq == ZERO {
                        continue;
                    }
                    a[(k, p)] = akp * r00 + akq * r10;
                    a[(k, q)] = akp * r01 + akq * r11;
                }
                // A <- R† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    if apk == ZERO && aqk == ZERO {
                        continue;
                    }
                    a[(p, k)] = r00.conj() * apk + r10.conj() * aqk;
                    a[(q, k)] = r01.conj() * apk + r11.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(app - t * mag, 0.0);
                a[(q, q)] = Complex64::new(aqq + t * mag, 0.0);
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        if vkp == ZERO && vkq == ZERO {
                            continue;
                        }
                        v[(k, p)] = vkp * r00 + vkq * r10;
                        v[(k, q)] = vkp * r01 + vkq * r11;
                    }
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

/// Index of the first component with non-negligible magnitude.
fn leading_index(col: &[Complex64]) -> usize {
    col.iter().position(|z| z.norm() > 1e-8).unwrap_or(col.len())
}

fn sorted(values: Vec<f64>, vectors: ComplexMatrix) -> EigenDecomposition {
    let n = values.len();
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tie = 1e-10 * scale;
    let cols: Vec<Vec<Complex64>> = (0..n).map(|k| vectors.column(k)).collect();
    let lead: Vec<usize> = cols.iter().map(|c| leading_index(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Descending by value; ties broken by the leading nonzero component.
    order.sort_by(|&i, &j| {
        if (values[i] - values[j]).abs() <= tie {
            lead[i].cmp(&lead[j]).then(i.cmp(&j))
        } else {
            values[j].total_cmp(&values[i])
        }
    });
    let mut out_vectors = ComplexMatrix::zeros(n, n);
    let mut out_values = Vec::with_capacity(n);
    for (new_k, &old_k) in order.iter().enumerate() {
        out_values.push(values[old_k]);
        let col = &cols[old_k];
        // fix the global phase: leading component real and positive
        let li = lead[old_k];
        let phase = if li < n {
            col[li].conj() / col[li].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            out_vectors[(i, new_k)] = col[i] * phase;
        }
    }
    EigenDecomposition {
        values: out_values,
        vectors: out_vectors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_sorted_descending() {
        let e = eig_hermitian(&ComplexMatrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn sigma_x_eigenpairs() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let e = eig_hermitian(&x).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        let s = 1.0 / 2f64.sqrt();
        let plus = e.vector(0);
        let minus = e.vector(1);
        assert!((plus[0].re - s).abs() < 1e-14 && (plus[1].re - s).abs() < 1e-14);
        assert!((minus[0].re - s).abs() < 1e-14 && (minus[1].re + s).abs() < 1e-14);
    }

    #[test]
    fn complex_entries() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1
        let m = ComplexMatrix::from_rows(&[
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(0.0, -1.0), Complex64::new(2.0, 0.0)],
        ])
        .unwrap();
        let e = eig_hermitian(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&m) < 1e-14);
    }

    #[test]
    fn degenerate_ties_follow_leading_component() {
        let e = eig_hermitian(&ComplexMatrix::diag(&[1.0, 2.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![2.0, 2.0, 1.0, 1.0]);
        assert_eq!(leading_index(&e.vector(0)), 1);
        assert_eq!(leading_index(&e.vector(1)), 3);
        assert_eq!(leading_index(&e.vector(2)), 0);
        assert_eq!(leading_index(&e.vector(3)), 2);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn random_reconstruction_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let h = sampling::random_hermitian(&mut rng, 8);
            let e = eig_hermitian(&h).unwrap();
            let resid = (&e.reconstruct() - &h).frobenius_norm();
            assert!(resid < 1e-10, "residual {resid}");
            let q = &e.vectors;
            let qq = &q.adjoint() * q;
            assert!(qq.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn block_diagonal_large_is_exact() {
        let n = 128;
        let mut m = ComplexMatrix::zeros(n, n);
        for b in 0..n / 2 {
            let (i, j) = (2 * b, 2 * b + 1);
            m[(i, i)] = Complex64::new(1.0, 0.0);
            m[(j, j)] = Complex64::new(1.0, 0.0);
            m[(i, j)] = Complex64::new(0.0, 0.5);
            m[(j, i)] = Complex64::new(0.0, -0.5);
        }
        let vals = eigvals_hermitian(&m).unwrap();
        assert!(vals[..n / 2].iter().all(|v| (v - 1.5).abs() < 1e-14));
        assert!(vals[n / 2..].iter().all(|v| (v - 0.5).abs() < 1e-14));
    }
}
