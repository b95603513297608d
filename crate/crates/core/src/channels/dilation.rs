//! Unitary dilations `C[ρ] = Tr_z[V (ρ ⊗ ρ_z) V†]`, the reset-cost inequality
//! and catalytic fixed points.

use num_complex::Complex64;

use super::{ChoiMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::qmath::{
    check_same_dim, partial_trace, trace_norm, von_neumann_entropy, ComplexMatrix, DensityOperator, UnitaryOperator,
};
use crate::thermo::ThermalContext;

/// Agreement required between a dilation and the channel it claims to implement.
pub const DILATION_TOL: f64 = 1e-9;

/// Unitary `V` on target ⊗ ancilla with ancilla state `ρ_z`; the ancilla Hamiltonian is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Dilation {
    v: UnitaryOperator,
    rho_z: DensityOperator,
    d_t: usize,
    d_z: usize,
}

impl Dilation {
    pub fn new(v: UnitaryOperator, rho_z: DensityOperator, d_t: usize) -> Result<Self> {
        let d_z = rho_z.dim();
        check_same_dim(v.dim(), d_t * d_z, "dilation unitary")?;
        Ok(Self { v, rho_z, d_t, d_z })
    }

    pub fn unitary(&self) -> &UnitaryOperator {
        &self.v
    }

    pub fn ancilla_state(&self) -> &DensityOperator {
        &self.rho_z
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_t, self.d_z)
    }

    /// `V (ρ_t ⊗ ρ_z) V†`
    pub fn joint_output(&self, rho_t: &DensityOperator) -> Result<DensityOperator> {
        check_same_dim(rho_t.dim(), self.d_t, "dilation input")?;
        let joint = rho_t.matrix().kron(self.rho_z.matrix())?;
        Ok(DensityOperator::from_matrix_unchecked(self.v.matrix().sandwich(&joint)))
    }

    /// Target marginal: the implemented channel.
    pub fn apply(&self, rho_t: &DensityOperator) -> Result<DensityOperator> {
        let out = self.joint_output(rho_t)?;
        Ok(DensityOperator::from_matrix_unchecked(partial_trace(
            out.matrix(),
            &[self.d_t, self.d_z],
            &[0],
        )?))
    }

    /// Ancilla marginal after the interaction.
    pub fn ancilla_output(&self, rho_t: &DensityOperator) -> Result<DensityOperator> {
        let out = self.joint_output(rho_t)?;
        Ok(DensityOperator::from_matrix_unchecked(partial_trace(
            out.matrix(),
            &[self.d_t, self.d_z],
            &[1],
        )?))
    }

    /// `√r_m (I ⊗ ⟨e|) V (I ⊗ |m⟩)` for ancilla eigenpairs `(r_m, |m⟩)` of `ρ_z` and
    /// output vectors `|e⟩` spanning the range of `projector` (all of Z when `None`).
    pub fn kraus_ops(&self, projector: Option<&ComplexMatrix>) -> Result<Vec<ComplexMatrix>> {
        let outputs: Vec<Vec<Complex64>> = match projector {
            None => (0..self.d_z)
                .map(|k| (0..self.d_z).map(|j| if j == k { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect())
                .collect(),
            Some(p) => {
                check_same_dim(p.rows(), self.d_z, "ancilla projector")?;
                let eig = crate::qmath::eig_hermitian(p)?;
                eig.values
                    .iter()
                    .enumerate()
                    .filter(|(_, &l)| l > 0.5)
                    .map(|(k, _)| eig.vector(k))
                    .collect()
            }
        };
        let eig_z = self.rho_z.eigen();
        let v = self.v.matrix();
        let mut ops = Vec::new();
        for (m, &r) in eig_z.values.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            let mvec = eig_z.vector(m);
            let s = r.sqrt();
            for e in &outputs {
                let k = ComplexMatrix::from_fn(self.d_t, self.d_t, |a, i| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (zo, eo) in e.iter().enumerate() {
                        if *eo == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for (zi, mi) in mvec.iter().enumerate() {
                            if *mi == Complex64::new(0.0, 0.0) {
                                continue;
                            }
                            acc += eo.conj() * v[(a * self.d_z + zo, i * self.d_z + zi)] * mi;
                        }
                    }
                    acc * s
                });
                if k.max_abs() > 0.0 {
                    ops.push(k);
                }
            }
        }
        if ops.is_empty() {
            ops.push(ComplexMatrix::zeros(self.d_t, self.d_t));
        }
        Ok(ops)
    }

    pub fn channel(&self) -> Result<KrausChannel> {
        KrausChannel::new(self.kraus_ops(None)?)
    }

    /// Largest Choi-matrix entry difference to `c`.
    pub fn deviation_from(&self, c: &KrausChannel) -> Result<f64> {
        check_same_dim(c.dim_in(), self.d_t, "dilation vs channel")?;
        let mine = ChoiMatrix::from_map(self.channel()?.as_map());
        let theirs = ChoiMatrix::from_map(c.as_map());
        Ok(mine.matrix().max_abs_diff(theirs.matrix()))
    }
}

/// Completes the given columns of an `n × n` matrix to a unitary by Gram–Schmidt
/// over standard basis vectors, filling the free columns in index order.
pub fn complete_isometry(n: usize, fixed: &[(usize, Vec<Complex64>)]) -> Result<UnitaryOperator> {
    let mut cols: Vec<Option<Vec<Complex64>>> = vec![None; n];
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for (idx, col) in fixed {
        if *idx >= n || col.len() != n {
            return Err(Error::DimensionMismatch("isometry column out of range".into()));
        }
        cols[*idx] = Some(col.clone());
        basis.push(col.clone());
    }
    let mut candidate = 0usize;
    for slot in cols.iter_mut().filter(|c| c.is_none()) {
        loop {
            if candidate >= n {
                return Err(Error::InvalidArgument("columns are not orthonormal".into()));
            }
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            for _ in 0..2 {
                for b in &basis {
                    let proj: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= proj * bi;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                let v: Vec<Complex64> = v.into_iter().map(|z| z / norm).collect();
                basis.push(v.clone());
                *slot = Some(v);
                break;
            }
        }
    }
    let cols: Vec<Vec<Complex64>> = cols.into_iter().map(|c| c.expect("filled")).collect();
    UnitaryOperator::new(ComplexMatrix::from_fn(n, n, |i, j| cols[j][i]))
}

/// Stinespring dilation with `ρ_z = |0⟩⟨0|` and one ancilla level per Kraus operator.
pub fn dilate(c: &KrausChannel) -> Result<Dilation> {
    dilate_with_ancilla(c, c.kraus().len())
}

/// As [`dilate`], padding the ancilla to `d_z` levels (zero Kraus operators).
pub fn dilate_with_ancilla(c: &KrausChannel, d_z: usize) -> Result<Dilation> {
    if c.dim_in() != c.dim_out() {
        return Err(Error::Unsupported("dilation needs dim_in = dim_out".into()));
    }
    let kraus = c.kraus();
    if d_z < kraus.len() {
        return Err(Error::InvalidArgument(format!(
            "ancilla dimension {d_z} below Kraus count {}",
            kraus.len()
        )));
    }
    let d = c.dim_in();
    let n = d * d_z;
    let fixed: Vec<(usize, Vec<Complex64>)> = (0..d)
        .map(|i| {
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for (k, op) in kraus.iter().enumerate() {
                for a in 0..d {
                    col[a * d_z + k] = op[(a, i)];
                }
            }
            (i * d_z, col)
        })
        .collect();
    let v = complete_isometry(n, &fixed)?;
    Dilation::new(v, DensityOperator::basis(d_z, 0), d)
}

/// `V = Σ_i U_i ⊗ |i⟩⟨i|` with `ρ_z = Σ_i p_i |i⟩⟨i|`: a catalytic implementation of
/// the mixed-unitary channel `Σ p_i U_i ρ U_i†`.
pub fn mixed_unitary_catalytic(unitaries: &[UnitaryOperator], probs: &[f64]) -> Result<Dilation> {
    super::validate_probabilities(probs)?;
    if unitaries.len() != probs.len() || unitaries.is_empty() {
        return Err(Error::InvalidArgument("need one probability per unitary".into()));
    }
    let d = unitaries[0].dim();
    for u in unitaries {
        check_same_dim(u.dim(), d, "mixed-unitary terms")?;
    }
    let m = unitaries.len();
    let v = ComplexMatrix::from_fn(d * m, d * m, |r, c| {
        let (a, i) = (r / m, r % m);
        let (b, j) = (c / m, c % m);
        if i == j {
            unitaries[i].matrix()[(a, b)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Dilation::new(
        UnitaryOperator::from_matrix_unchecked(v),
        DensityOperator::diagonal(probs)?,
        d,
    )
}

/// Outcome of the reset-cost inequality `W_total + W_reset ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetCheck {
    /// `T(S(ρ_t) − S(C[ρ_t])) − T ΔS_z`
    pub lhs: f64,
    pub holds: bool,
}

/// Evaluates the best-case protocol work plus the best-case reset work of the
/// ancilla, using exact entropies of the dilation marginals.
pub fn reset_inequality_check(
    c: &KrausChannel,
    dil: &Dilation,
    rho_t: &DensityOperator,
    ctx: ThermalContext,
) -> Result<ResetCheck> {
    let deviation = dil.deviation_from(c)?;
    if deviation > DILATION_TOL {
        return Err(Error::InconsistentDilation { deviation });
    }
    let t = ctx.temperature();
    let out_t = dil.apply(rho_t)?;
    let out_z = dil.ancilla_output(rho_t)?;
    let delta_s_t = von_neumann_entropy(&out_t)? - von_neumann_entropy(rho_t)?;
    let delta_s_z = von_neumann_entropy(&out_z)? - von_neumann_entropy(dil.ancilla_state())?;
    let lhs = -t * delta_s_t - t * delta_s_z;
    Ok(ResetCheck {
        lhs,
        holds: lhs <= 1e-9,
    })
}

/// Damped fixed-point iteration settings for [`catalytic_fixed_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointConfig {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Starting ancilla state; `I/d_z` when absent.
    pub start: Option<DensityOperator>,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            tol: 1e-9,
            max_iter: 10_000,
            start: None,
        }
    }
}

/// Searches for `σ` with `Tr_t[V (ρ_t ⊗ σ) V†] = σ` by `σ ← (1−α)σ + α Φ(σ)`.
///
/// `None` means the iteration did not settle: inconclusive, not a proof that no
/// fixed point exists.
pub fn catalytic_fixed_point(
    v: &UnitaryOperator,
    rho_t: &DensityOperator,
    d_z: usize,
    cfg: &FixedPointConfig,
) -> Result<Option<DensityOperator>> {
    let d_t = rho_t.dim();
    check_same_dim(v.dim(), d_t * d_z, "catalytic search")?;
    let mut sigma = match &cfg.start {
        Some(s) => {
            check_same_dim(s.dim(), d_z, "catalytic start")?;
            s.matrix().clone()
        }
        None => DensityOperator::maximally_mixed(d_z).into_matrix(),
    };
    let phi = |s: &ComplexMatrix| -> Result<ComplexMatrix> {
        let joint = rho_t.matrix().kron(s)?;
        partial_trace(&v.matrix().sandwich(&joint), &[d_t, d_z], &[1])
    };
    for _ in 0..=cfg.max_iter {
        let next = phi(&sigma)?;
        let residual = trace_norm(&(&next - &sigma).hermitian_part())?;
        if residual < cfg.tol {
            return Ok(Some(DensityOperator::from_matrix_unchecked(sigma)));
        }
        sigma = &sigma.scale(1.0 - cfg.alpha) + &next.scale(cfg.alpha);
    }
    Ok(None)
}
