//! Post-selected measurements: success-conditioned total work and the
//! construction whose work grows without bound in the ancilla dimension.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channels::{AccountingMode, CpMap};
use crate::error::{Error, Result};
use crate::measure::{
    anticommutator_half, apply_outcome_bipartite, system_hamiltonian, Bipartition, Measurement, P_FLOOR,
};
use crate::qmath::{
    check_same_dim, eig_hermitian, entropy_from_eigenvalues, psd_eigenvalues, weighted_entropy, ComplexMatrix,
    DensityOperator, Observable,
};
use crate::thermo::ThermalContext;

/// Eigen-gap of `M_succ` below which post-selection counts as trivial.
pub const NONTRIVIALITY_TOL: f64 = 1e-9;

/// A measurement with a designated set of success outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelection {
    measurement: Measurement,
    success: Vec<usize>,
}

impl PostSelection {
    pub fn new(measurement: Measurement, success: Vec<usize>) -> Result<Self> {
        let mut success = success;
        success.sort_unstable();
        success.dedup();
        if success.is_empty() {
            return Err(Error::InvalidArgument("success set is empty".into()));
        }
        if let Some(&bad) = success.iter().find(|&&i| i >= measurement.outcome_count()) {
            return Err(Error::InvalidArgument(format!(
                "success index {bad} out of range ({} outcomes)",
                measurement.outcome_count()
            )));
        }
        Ok(Self { measurement, success })
    }

    pub fn measurement(&self) -> &Measurement {
        &self.measurement
    }

    pub fn success_set(&self) -> &[usize] {
        &self.success
    }

    fn failure_set(&self) -> Vec<usize> {
        (0..self.measurement.outcome_count())
            .filter(|i| self.success.binary_search(i).is_err())
            .collect()
    }

    fn success_outcomes(&self) -> impl Iterator<Item = &CpMap> {
        self.success.iter().map(|&i| &self.measurement.outcomes()[i])
    }

    /// `C_succ = Σ_{i∈succ} C_i`
    pub fn success_map(&self) -> CpMap {
        CpMap::sum(&self.success_outcomes().cloned().collect::<Vec<_>>()).expect("same shapes")
    }

    /// `M_succ = Σ_{i∈succ} M_i`
    pub fn success_operator(&self) -> ComplexMatrix {
        self.success_map().effect()
    }
}

/// `{C_succ, C_fail}`, or the one-outcome measurement when every outcome succeeds.
pub fn coarse_grain(ps: &PostSelection) -> Measurement {
    let outcomes = ps.measurement.outcomes();
    let fail = ps.failure_set();
    let mut parts = vec![ps.success_map()];
    if !fail.is_empty() {
        parts.push(CpMap::sum(&fail.iter().map(|&i| outcomes[i].clone()).collect::<Vec<_>>()).expect("same shapes"));
    }
    Measurement::new(parts).expect("coarse graining keeps completeness")
}

/// `p_succ = Tr[M_succ ρ_t]`
pub fn success_prob(ps: &PostSelection, rho_t: &DensityOperator) -> Result<f64> {
    check_same_dim(rho_t.dim(), ps.measurement.dim(), "success probability")?;
    Ok(ps.success_operator().trace_product(rho_t.matrix()).re)
}

fn entropy(m: &ComplexMatrix) -> Result<f64> {
    Ok(entropy_from_eigenvalues(&psd_eigenvalues(m)?))
}

/// Success-averaged total conditional work (broad top-hat weight, reversible reset).
pub fn postselected_total_work(
    ps: &PostSelection,
    rho_s: &DensityOperator,
    dims: Bipartition,
    h_t: &Observable,
    h_a: &Observable,
    ctx: ThermalContext,
) -> Result<f64> {
    dims.check(rho_s)?;
    check_same_dim(ps.measurement.dim(), dims.d_t, "measurement target")?;
    check_same_dim(h_t.dim(), dims.d_t, "target Hamiltonian")?;
    check_same_dim(h_a.dim(), dims.d_a, "ancilla Hamiltonian")?;
    let rho_t = dims.target(rho_s.matrix())?;
    let rho_a = dims.ancilla(rho_s.matrix())?;
    let sym = anticommutator_half(h_t.matrix(), &rho_t);

    let mut p_succ = 0.0;
    let mut sym_sum = 0.0;
    let mut ancilla_energy = 0.0;
    let mut post_entropy = 0.0;
    for o in ps.success_outcomes() {
        let x_s = apply_outcome_bipartite(o, rho_s.matrix(), dims)?;
        p_succ += x_s.trace().re;
        sym_sum += o.apply_matrix(&sym)?.trace().re;
        ancilla_energy += h_a.matrix().trace_product(&dims.ancilla(&x_s)?).re;
        post_entropy += weighted_entropy(&x_s)?.1;
    }
    if p_succ <= P_FLOOR {
        return Err(Error::ProbabilityBelowFloor {
            index: ps.success[0],
            probability: p_succ,
        });
    }
    Ok(sym_sum / p_succ - h_t.matrix().trace_product(&rho_t).re + ancilla_energy / p_succ
        - h_a.matrix().trace_product(&rho_a).re
        + ctx.temperature() * (entropy(rho_s.matrix())? - post_entropy / p_succ))
}

/// Internal-power variant: `Σ_{i∈succ} (p_i/p_succ) F(σ_{s,i}) − F(ρ_s)`.
pub fn postselected_total_work_internal_power(
    ps: &PostSelection,
    rho_s: &DensityOperator,
    dims: Bipartition,
    h_t: &Observable,
    h_a: &Observable,
    ctx: ThermalContext,
) -> Result<f64> {
    dims.check(rho_s)?;
    check_same_dim(ps.measurement.dim(), dims.d_t, "measurement target")?;
    let h_s = system_hamiltonian(h_t, h_a)?;
    let t = ctx.temperature();
    let mut p_succ = 0.0;
    let mut free = 0.0;
    for o in ps.success_outcomes() {
        let x_s = apply_outcome_bipartite(o, rho_s.matrix(), dims)?;
        p_succ += x_s.trace().re;
        free += h_s.trace_product(&x_s).re - t * weighted_entropy(&x_s)?.1;
    }
    if p_succ <= P_FLOOR {
        return Err(Error::ProbabilityBelowFloor {
            index: ps.success[0],
            probability: p_succ,
        });
    }
    Ok(free / p_succ - (h_s.trace_product(rho_s.matrix()).re - t * entropy(rho_s.matrix())?))
}

pub fn postselected_total_work_by_mode(
    ps: &PostSelection,
    rho_s: &DensityOperator,
    dims: Bipartition,
    (h_t, h_a): (&Observable, &Observable),
    ctx: ThermalContext,
    mode: AccountingMode,
) -> Result<f64> {
    match mode {
        AccountingMode::BatteryPowered => postselected_total_work(ps, rho_s, dims, h_t, h_a, ctx),
        AccountingMode::InternalPower => postselected_total_work_internal_power(ps, rho_s, dims, h_t, h_a, ctx),
    }
}

/// Eigen-gap of the success operator.
pub fn success_gap(ps: &PostSelection) -> f64 {
    let v = eig_hermitian(&ps.success_operator()).expect("effect is Hermitian").values;
    v.first().copied().unwrap_or(0.0) - v.last().copied().unwrap_or(0.0)
}

/// True iff `λ_max − λ_min > tol` for `M_succ`.
pub fn nontriviality(ps: &PostSelection, tol: f64) -> bool {
    success_gap(ps) > tol
}

/// The state `½|u⟩⟨u| ⊗ |φ⟩⟨φ| + ½|v⟩⟨v| ⊗ I/d_a` and the work bound it certifies.
#[derive(Debug, Clone)]
pub struct UnboundedConstruction {
    /// Eigenvector of `M_succ` with the largest eigenvalue.
    pub u: Vec<Complex64>,
    /// Eigenvector of `M_succ` with the smallest eigenvalue.
    pub v: Vec<Complex64>,
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// `λ_min / (λ_max + λ_min)`
    pub q: f64,
    pub d_a: usize,
    pub rho_s: DensityOperator,
    /// `E_min − E_max + T((½ − q) ln d_a − ln d_t)`
    pub lower_bound: f64,
}

impl UnboundedConstruction {
    pub fn dims(&self) -> Bipartition {
        Bipartition::new(self.u.len(), self.d_a)
    }
}

/// Builds the construction with `|φ⟩ = |0⟩` and a zero ancilla Hamiltonian.
pub fn unbounded_construction(
    ps: &PostSelection,
    h_t: &Observable,
    d_a: usize,
    ctx: ThermalContext,
) -> Result<UnboundedConstruction> {
    let d_t = ps.measurement.dim();
    check_same_dim(h_t.dim(), d_t, "target Hamiltonian")?;
    if d_a == 0 {
        return Err(Error::InvalidArgument("ancilla dimension must be positive".into()));
    }
    if !nontriviality(ps, NONTRIVIALITY_TOL) {
        return Err(Error::TrivialPostSelection);
    }
    let eig = eig_hermitian(&ps.success_operator())?;
    let lambda_max = eig.values[0];
    let lambda_min = eig.values[d_t - 1];
    let u = eig.vector(0);
    let v = eig.vector(d_t - 1);
    let q = lambda_min / (lambda_max + lambda_min);

    let uu = ComplexMatrix::outer(&u, &u);
    let vv = ComplexMatrix::outer(&v, &v);
    let phi = ComplexMatrix::unit(d_a, 0, 0);
    let mixed = ComplexMatrix::identity(d_a).scale(1.0 / d_a as f64);
    let rho = &uu.kron(&phi)?.scale(0.5) + &vv.kron(&mixed)?.scale(0.5);
    let rho_s = DensityOperator::new(rho)?;

    let (e_min, e_max) = h_t.spectral_range();
    let t = ctx.temperature();
    let lower_bound = e_min - e_max + t * ((0.5 - q) * (d_a as f64).ln() - (d_t as f64).ln());
    Ok(UnboundedConstruction {
        u,
        v,
        lambda_max,
        lambda_min,
        q,
        d_a,
        rho_s,
        lower_bound,
    })
}

/// One row of the ancilla-dimension scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub d_a: usize,
    pub ln_da: f64,
    pub w_actual: f64,
    pub w_bound: f64,
    /// Least-squares slope of `w_actual` against `ln d_a` over this and all earlier rows;
    /// NaN for the first row.
    pub slope_running: f64,
}

impl ScalingRow {
    pub const CSV_HEADER: &'static str = "d_a,ln_da,W_actual,W_bound,slope_running";
}

/// Ordinary least-squares slope; NaN with fewer than two distinct abscissae.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return f64::NAN;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return f64::NAN;
    }
    let sxy: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

/// Evaluates the construction's post-selected work for each ancilla dimension.
pub fn scaling_experiment(
    ps: &PostSelection,
    h_t: &Observable,
    ctx: ThermalContext,
    d_a_list: &[usize],
    mode: AccountingMode,
) -> Result<Vec<ScalingRow>> {
    let points: Vec<(usize, f64, f64)> = d_a_list
        .par_iter()
        .map(|&d_a| {
            let c = unbounded_construction(ps, h_t, d_a, ctx)?;
            let h_a = Observable::zero(d_a);
            let w = postselected_total_work_by_mode(ps, &c.rho_s, c.dims(), (h_t, &h_a), ctx, mode)?;
            Ok((d_a, w, c.lower_bound))
        })
        .collect::<Result<_>>()?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    Ok(points
        .into_iter()
        .map(|(d_a, w, bound)| {
            let ln_da = (d_a as f64).ln();
            xs.push(ln_da);
            ys.push(w);
            ScalingRow {
                d_a,
                ln_da,
                w_actual: w,
                w_bound: bound,
                slope_running: least_squares_slope(&xs, &ys),
            }
        })
        .collect())
}
