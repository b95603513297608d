use num_complex::Complex64;

use super::{CpMap, KrausChannel};
use crate::error::{Error, Result};
use crate::qmath::{eig_hermitian, partial_trace, ComplexMatrix, TOL_HERM};

/// Eigenvalues of the Choi matrix below this are dropped when extracting Kraus operators.
pub const KRAUS_CUTOFF: f64 = 1e-12;

/// Unnormalised Choi matrix `J = Σ_ij |i⟩⟨j| ⊗ C[|i⟩⟨j|]`, input factor on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn new(dim_in: usize, dim_out: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix must be {n}x{n}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let deviation = matrix.hermiticity_deviation();
        if deviation > TOL_HERM * matrix.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            dim_in,
            dim_out,
            matrix: matrix.hermitian_part(),
        })
    }

    pub fn from_map(map: &CpMap) -> Self {
        let (di, dout) = (map.dim_in(), map.dim_out());
        let mut j = ComplexMatrix::zeros(di * dout, di * dout);
        for k in map.kraus() {
            // column vector Σ_i |i⟩ ⊗ K|i⟩
            let v: Vec<Complex64> = (0..di).flat_map(|i| (0..dout).map(move |a| (i, a))).map(|(i, a)| k[(a, i)]).collect();
            for r in 0..v.len() {
                if v[r] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..v.len() {
                    j[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        Self {
            dim_in: di,
            dim_out: dout,
            matrix: j,
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Smallest eigenvalue; complete positivity means this is `≥ −tol`.
    pub fn min_eigenvalue(&self) -> f64 {
        eig_hermitian(&self.matrix)
            .expect("Choi matrix is Hermitian")
            .values
            .last()
            .copied()
            .unwrap_or(0.0)
    }

    pub fn is_cp(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// `max |Tr_out J − I|`
    pub fn tp_deviation(&self) -> f64 {
        let reduced = partial_trace(&self.matrix, &[self.dim_in, self.dim_out], &[0]).expect("consistent dims");
        reduced.max_abs_diff(&ComplexMatrix::identity(self.dim_in))
    }

    /// `C[X] = Σ_ij X_ij J_{(i,·),(j,·)}`
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.dim_in || x.cols() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "Choi map expects {}x{} input",
                self.dim_in, self.dim_in
            )));
        }
        let d = self.dim_out;
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..self.dim_in {
            for j in 0..self.dim_in {
                let xij = x[(i, j)];
                if xij == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for a in 0..d {
                    for b in 0..d {
                        out[(a, b)] += xij * self.matrix[(i * d + a, j * d + b)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Kraus operators from the eigen-decomposition, `K_k[a][i] = √λ_k v_k[i·d_out + a]`.
    pub fn to_kraus(&self) -> Vec<ComplexMatrix> {
        let eig = eig_hermitian(&self.matrix).expect("Choi matrix is Hermitian");
        eig.values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > KRAUS_CUTOFF)
            .map(|(k, &l)| {
                let v = eig.vector(k);
                let s = l.sqrt();
                ComplexMatrix::from_fn(self.dim_out, self.dim_in, |a, i| v[i * self.dim_out + a] * s)
            })
            .collect()
    }

    pub fn to_map(&self) -> Result<CpMap> {
        let kraus = self.to_kraus();
        if kraus.is_empty() {
            return CpMap::new(vec![ComplexMatrix::zeros(self.dim_out, self.dim_in)]);
        }
        CpMap::new(kraus)
    }

    pub fn to_channel(&self) -> Result<KrausChannel> {
        KrausChannel::from_map(self.to_map()?)
    }
}
