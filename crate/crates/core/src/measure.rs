//! Measurements as outcome-indexed CP maps: outcome statistics, the average and
//! conditional work of applying them, and their total work benefit.

use serde::{Deserialize, Serialize};

use crate::channels::{
    dilate_with_ancilla, AccountingMode, CpMap, Dilation, KrausChannel, ResetCheck, DILATION_TOL, TOL_TP,
};
use crate::error::{Error, Result};
use crate::optimize::{grid_oracle, maximize_over_states, GridConfig, Maximum, OptimizerConfig};
use crate::qmath::{
    check_same_dim, entropy_from_eigenvalues, partial_trace, psd_eigenvalues, weighted_entropy, ComplexMatrix,
    DensityOperator, Observable,
};
use crate::thermo::ThermalContext;

/// Outcomes at or below this probability have no conditional quantities.
pub const P_FLOOR: f64 = 1e-12;

/// Measurement `{C_i}` on a `dim`-level target.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    dim: usize,
    outcomes: Vec<CpMap>,
}

impl Measurement {
    /// Checks `Σ_i Σ_j K_ij† K_ij = I`.
    pub fn new(outcomes: Vec<CpMap>) -> Result<Self> {
        let first = outcomes
            .first()
            .ok_or_else(|| Error::InvalidArgument("a measurement needs at least one outcome".into()))?;
        let dim = first.dim_in();
        let mut total = ComplexMatrix::zeros(dim, dim);
        for o in &outcomes {
            check_same_dim(o.dim_in(), dim, "measurement outcome input")?;
            check_same_dim(o.dim_out(), dim, "measurement outcome output")?;
            total = &total + &o.effect();
        }
        let deviation = total.max_abs_diff(&ComplexMatrix::identity(dim));
        if deviation > TOL_TP {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self { dim, outcomes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[CpMap] {
        &self.outcomes
    }

    pub fn outcome(&self, i: usize) -> Result<&CpMap> {
        self.outcomes
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("outcome {i} out of range ({})", self.outcomes.len())))
    }

    /// Projective measurement in the computational basis.
    pub fn basis(dim: usize) -> Self {
        let outcomes = (0..dim)
            .map(|i| CpMap::new(vec![ComplexMatrix::unit(dim, i, i)]).expect("projector"))
            .collect();
        Self { dim, outcomes }
    }

    /// Lüders measurement with the given projectors (one Kraus operator each).
    pub fn from_projectors(projectors: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(projectors.into_iter().map(|p| CpMap::new(vec![p])).collect::<Result<_>>()?)
    }

    /// Single-outcome measurement: the channel itself.
    pub fn trivial(c: &KrausChannel) -> Self {
        Self {
            dim: c.dim_in(),
            outcomes: vec![c.as_map().clone()],
        }
    }

    /// Two outcomes with Kraus operators `√½ I`: an unbiased coin that ignores the system.
    pub fn coin(dim: usize) -> Self {
        let k = ComplexMatrix::identity(dim).scale(std::f64::consts::FRAC_1_SQRT_2);
        let o = CpMap::new(vec![k]).expect("coin");
        Self {
            dim,
            outcomes: vec![o.clone(), o],
        }
    }

    /// `C = Σ_i C_i`, the measure-and-forget channel.
    pub fn forgetting_channel(&self) -> KrausChannel {
        KrausChannel::from_map(CpMap::sum(&self.outcomes).expect("same shapes")).expect("measurement is complete")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MeasurementJson {
            dim: self.dim,
            outcomes: self
                .outcomes
                .iter()
                .map(|o| OutcomeJson { kraus: o.kraus().to_vec() })
                .collect(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MeasurementJson = serde_json::from_str(text)?;
        raw.into_measurement()
    }
}

/// On-disk format `{"dim": d, "outcomes": [{"kraus": [matrix, ...]}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementJson {
    pub dim: usize,
    pub outcomes: Vec<OutcomeJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeJson {
    pub kraus: Vec<ComplexMatrix>,
}

impl MeasurementJson {
    pub fn into_measurement(self) -> Result<Measurement> {
        let m = Measurement::new(
            self.outcomes
                .into_iter()
                .map(|o| CpMap::new(o.kraus))
                .collect::<Result<_>>()?,
        )?;
        check_same_dim(m.dim(), self.dim, "declared measurement dimension")?;
        Ok(m)
    }
}

/// Probability and normalised post-measurement state of one outcome.
#[derive(Debug, Clone)]
pub struct OutcomeRecord {
    pub index: usize,
    pub probability: f64,
    /// `None` when `probability ≤ P_FLOOR`.
    pub post_state: Option<DensityOperator>,
}

pub fn outcome_records(m: &Measurement, rho: &DensityOperator) -> Result<Vec<OutcomeRecord>> {
    check_same_dim(rho.dim(), m.dim(), "measurement input")?;
    m.outcomes
        .iter()
        .enumerate()
        .map(|(index, o)| {
            let x = o.apply_matrix(rho.matrix())?;
            let probability = x.trace().re.max(0.0);
            let post_state =
                (probability > P_FLOOR).then(|| DensityOperator::from_matrix_unchecked(x.scale(1.0 / probability)));
            Ok(OutcomeRecord {
                index,
                probability,
                post_state,
            })
        })
        .collect()
}

/// POVM elements `M_i = Σ_j K_ij† K_ij`.
pub fn povm_elements(m: &Measurement) -> Vec<Observable> {
    m.outcomes
        .iter()
        .map(|o| Observable::from_matrix_unchecked(o.effect()))
        .collect()
}

/// Average work of applying the measurement; equal to that of its forgetting channel.
pub fn apply_work_measurement(m: &Measurement, rho: &DensityOperator, h: &Observable) -> Result<f64> {
    crate::channels::apply_work(&m.forgetting_channel(), rho, h)
}

fn entropy(m: &ComplexMatrix) -> Result<f64> {
    Ok(entropy_from_eigenvalues(&psd_eigenvalues(m)?))
}

/// `S(ρ) − Σ_i p_i S(σ_i)` in nats.
pub fn measurement_entropy_gain(m: &Measurement, rho: &ComplexMatrix) -> Result<f64> {
    let mut post = 0.0;
    for o in &m.outcomes {
        post += weighted_entropy(&o.apply_matrix(rho)?)?.1;
    }
    Ok(entropy(rho)? - post)
}

/// `Σ_i p_i F(σ_i) − F(ρ)`.
pub fn measurement_free_energy_gain(
    m: &Measurement,
    h: &Observable,
    ctx: ThermalContext,
    rho: &ComplexMatrix,
) -> Result<f64> {
    let t = ctx.temperature();
    let mut after = 0.0;
    for o in &m.outcomes {
        let x = o.apply_matrix(rho)?;
        after += h.matrix().trace_product(&x).re - t * weighted_entropy(&x)?.1;
    }
    Ok(after - (h.matrix().trace_product(rho).re - t * entropy(rho)?))
}

/// `max_ρ T (S(ρ) − Σ_i p_i S(σ_i))` and its maximiser.
pub fn work_benefit_measurement(m: &Measurement, ctx: ThermalContext, cfg: &OptimizerConfig) -> Result<Maximum> {
    let mut best = maximize_over_states(m.dim(), |rho| measurement_entropy_gain(m, rho), cfg)?;
    best.value *= ctx.temperature();
    Ok(best)
}

/// Grid-search value of the same maximum (`d ≤ 3`).
pub fn work_benefit_measurement_oracle(m: &Measurement, ctx: ThermalContext, grid: &GridConfig) -> Result<f64> {
    if m.dim() > 3 {
        return Err(Error::Unsupported(format!("grid oracle limited to d <= 3, got {}", m.dim())));
    }
    Ok(ctx.temperature() * grid_oracle(m.dim(), |rho| measurement_entropy_gain(m, rho), grid)?)
}

/// `max_ρ (Σ_i p_i F(σ_i) − F(ρ))`: benefit for a device with its own power supply.
pub fn work_benefit_measurement_internal_power(
    m: &Measurement,
    h: &Observable,
    ctx: ThermalContext,
    cfg: &OptimizerConfig,
) -> Result<Maximum> {
    check_same_dim(h.dim(), m.dim(), "internal-power benefit")?;
    maximize_over_states(m.dim(), |rho| measurement_free_energy_gain(m, h, ctx, rho), cfg)
}

pub fn measurement_work_benefit(
    m: &Measurement,
    h: &Observable,
    ctx: ThermalContext,
    mode: AccountingMode,
    cfg: &OptimizerConfig,
) -> Result<Maximum> {
    match mode {
        AccountingMode::BatteryPowered => work_benefit_measurement(m, ctx, cfg),
        AccountingMode::InternalPower => work_benefit_measurement_internal_power(m, h, ctx, cfg),
    }
}

/// `(Hρ + ρH)/2`
pub(crate) fn anticommutator_half(h: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    (&(h * rho) + &(rho * h)).scale(0.5)
}

fn probability_checked(index: usize, p: f64) -> Result<f64> {
    if p <= P_FLOOR {
        return Err(Error::ProbabilityBelowFloor { index, probability: p });
    }
    Ok(p)
}

/// Conditional work of applying the measurement given outcome `i`, broad top-hat weight:
/// `(1/p_i) Tr[C_i[(Hρ + ρH)/2] − H C_i[ρ]]`.
pub fn conditional_apply_work(m: &Measurement, rho: &DensityOperator, h: &Observable, i: usize) -> Result<f64> {
    check_same_dim(rho.dim(), m.dim(), "conditional work")?;
    check_same_dim(h.dim(), m.dim(), "conditional work")?;
    let o = m.outcome(i)?;
    let x = o.apply_matrix(rho.matrix())?;
    let p = probability_checked(i, x.trace().re)?;
    let sym = o.apply_matrix(&anticommutator_half(h.matrix(), rho.matrix()))?;
    Ok((sym.trace().re - h.matrix().trace_product(&x).re) / p)
}

/// Target ⊗ ancilla split of a system state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bipartition {
    pub d_t: usize,
    pub d_a: usize,
}

impl Bipartition {
    pub fn new(d_t: usize, d_a: usize) -> Self {
        Self { d_t, d_a }
    }

    pub(crate) fn check(&self, rho_s: &DensityOperator) -> Result<()> {
        check_same_dim(rho_s.dim(), self.d_t * self.d_a, "bipartite state")
    }

    pub(crate) fn target(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        partial_trace(m, &[self.d_t, self.d_a], &[0])
    }

    pub(crate) fn ancilla(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        partial_trace(m, &[self.d_t, self.d_a], &[1])
    }
}

/// Unnormalised `(C_i ⊗ id)[ρ_s]`.
pub(crate) fn apply_outcome_bipartite(o: &CpMap, rho_s: &ComplexMatrix, dims: Bipartition) -> Result<ComplexMatrix> {
    o.apply_on_left(rho_s, dims.d_a)
}

/// Total conditional work given outcome `i` on a target ⊗ ancilla state `ρ_s`
/// (broad top-hat weight, reversible reset).
#[allow(clippy::too_many_arguments)]
pub fn conditional_total_work(
    m: &Measurement,
    rho_s: &DensityOperator,
    dims: Bipartition,
    h_t: &Observable,
    h_a: &Observable,
    ctx: ThermalContext,
    i: usize,
) -> Result<f64> {
    dims.check(rho_s)?;
    check_same_dim(m.dim(), dims.d_t, "measurement target")?;
    check_same_dim(h_t.dim(), dims.d_t, "target Hamiltonian")?;
    check_same_dim(h_a.dim(), dims.d_a, "ancilla Hamiltonian")?;
    let o = m.outcome(i)?;
    let rho_t = dims.target(rho_s.matrix())?;
    let rho_a = dims.ancilla(rho_s.matrix())?;
    let x_s = apply_outcome_bipartite(o, rho_s.matrix(), dims)?;
    let p = probability_checked(i, x_s.trace().re)?;
    let sigma_s = x_s.scale(1.0 / p);
    let sigma_a = dims.ancilla(&sigma_s)?;
    let sym = o.apply_matrix(&anticommutator_half(h_t.matrix(), &rho_t))?;
    Ok(sym.trace().re / p - h_t.matrix().trace_product(&rho_t).re + h_a.matrix().trace_product(&sigma_a).re
        - h_a.matrix().trace_product(&rho_a).re
        + ctx.temperature() * (entropy(rho_s.matrix())? - entropy(&sigma_s)?))
}

/// `H_t ⊗ I + I ⊗ H_a`
pub(crate) fn system_hamiltonian(h_t: &Observable, h_a: &Observable) -> Result<ComplexMatrix> {
    let a = h_t.matrix().kron(&ComplexMatrix::identity(h_a.dim()))?;
    let b = ComplexMatrix::identity(h_t.dim()).kron(h_a.matrix())?;
    Ok(&a + &b)
}

/// Internal-power variant: `F(σ_{s,i}) − F(ρ_s)`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_total_work_internal_power(
    m: &Measurement,
    rho_s: &DensityOperator,
    dims: Bipartition,
    h_t: &Observable,
    h_a: &Observable,
    ctx: ThermalContext,
    i: usize,
) -> Result<f64> {
    dims.check(rho_s)?;
    check_same_dim(m.dim(), dims.d_t, "measurement target")?;
    let h_s = system_hamiltonian(h_t, h_a)?;
    let x_s = apply_outcome_bipartite(m.outcome(i)?, rho_s.matrix(), dims)?;
    let p = probability_checked(i, x_s.trace().re)?;
    let sigma_s = x_s.scale(1.0 / p);
    let t = ctx.temperature();
    let f = |r: &ComplexMatrix| -> Result<f64> { Ok(h_s.trace_product(r).re - t * entropy(r)?) };
    Ok(f(&sigma_s)? - f(rho_s.matrix())?)
}

pub fn conditional_total_work_by_mode(
    m: &Measurement,
    rho_s: &DensityOperator,
    dims: Bipartition,
    (h_t, h_a): (&Observable, &Observable),
    ctx: ThermalContext,
    mode: AccountingMode,
    i: usize,
) -> Result<f64> {
    match mode {
        AccountingMode::BatteryPowered => conditional_total_work(m, rho_s, dims, h_t, h_a, ctx, i),
        AccountingMode::InternalPower => conditional_total_work_internal_power(m, rho_s, dims, h_t, h_a, ctx, i),
    }
}

/// One row of the per-outcome table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalRow {
    pub index: usize,
    pub probability: f64,
    /// `S(σ_{t,i})`; NaN below the probability floor.
    pub s_post: f64,
    pub w_cond_apply: f64,
    pub w_cond_total: f64,
}

impl ConditionalRow {
    pub const CSV_HEADER: &'static str = "i,p_i,S_post,W_cond_apply,W_cond_total";
}

/// Per-outcome table for a target-only system (`d_a = 1`); conditional columns are NaN
/// for outcomes below the probability floor.
pub fn conditional_table(
    m: &Measurement,
    rho: &DensityOperator,
    h: &Observable,
    ctx: ThermalContext,
    mode: AccountingMode,
) -> Result<Vec<ConditionalRow>> {
    let dims = Bipartition::new(m.dim(), 1);
    let h_a = Observable::zero(1);
    outcome_records(m, rho)?
        .into_iter()
        .map(|r| match &r.post_state {
            None => Ok(ConditionalRow {
                index: r.index,
                probability: r.probability,
                s_post: f64::NAN,
                w_cond_apply: f64::NAN,
                w_cond_total: f64::NAN,
            }),
            Some(sigma) => Ok(ConditionalRow {
                index: r.index,
                probability: r.probability,
                s_post: entropy(sigma.matrix())?,
                w_cond_apply: match mode {
                    AccountingMode::BatteryPowered => conditional_apply_work(m, rho, h, r.index)?,
                    AccountingMode::InternalPower => 0.0,
                },
                w_cond_total: conditional_total_work_by_mode(m, rho, dims, (h, &h_a), ctx, mode, r.index)?,
            }),
        })
        .collect()
}

/// Both sides of `S(ρ_s) − Σ p_i S(σ_{s,i}) ≤ S(ρ_t) − Σ p_i S(σ_{t,i})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargerSystemCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn larger_system_inequality_check(
    m: &Measurement,
    rho_s: &DensityOperator,
    dims: Bipartition,
) -> Result<LargerSystemCheck> {
    dims.check(rho_s)?;
    check_same_dim(m.dim(), dims.d_t, "measurement target")?;
    let rho_t = dims.target(rho_s.matrix())?;
    let mut post_s = 0.0;
    let mut post_t = 0.0;
    for o in &m.outcomes {
        let x_s = apply_outcome_bipartite(o, rho_s.matrix(), dims)?;
        post_s += weighted_entropy(&x_s)?.1;
        post_t += weighted_entropy(&dims.target(&x_s)?)?.1;
    }
    let lhs = entropy(rho_s.matrix())? - post_s;
    let rhs = entropy(&rho_t)? - post_t;
    Ok(LargerSystemCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

/// A dilation of a measurement together with orthogonal ancilla projectors `Π_i`.
#[derive(Debug, Clone)]
pub struct MeasurementDilation {
    pub dilation: Dilation,
    pub projectors: Vec<ComplexMatrix>,
}

impl MeasurementDilation {
    /// `p_i = Tr[V(ρ ⊗ ρ_z)V† (I ⊗ Π_i)]`
    pub fn probabilities(&self, rho_t: &DensityOperator) -> Result<Vec<f64>> {
        let z = self.dilation.ancilla_output(rho_t)?;
        Ok(self.projectors.iter().map(|p| p.trace_product(z.matrix()).re).collect())
    }

    /// Kraus form of outcome `i` as implemented by the dilation.
    pub fn outcome_map(&self, i: usize) -> Result<CpMap> {
        let p = self
            .projectors
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("outcome {i} out of range")))?;
        CpMap::new(self.dilation.kraus_ops(Some(p))?)
    }

    /// Unnormalised post-measurement target state for outcome `i`.
    pub fn outcome_output(&self, rho_t: &DensityOperator, i: usize) -> Result<ComplexMatrix> {
        self.outcome_map(i)?.apply_matrix(rho_t.matrix())
    }

    pub fn measurement(&self) -> Result<Measurement> {
        Measurement::new((0..self.projectors.len()).map(|i| self.outcome_map(i)).collect::<Result<_>>()?)
    }
}

/// Dilation with one ancilla level per Kraus operator (outcome by outcome) and `Π_i`
/// projecting onto the levels of outcome `i`.
pub fn measurement_dilation(m: &Measurement) -> Result<MeasurementDilation> {
    let channel = m.forgetting_channel();
    let d_z = channel.kraus().len();
    let dilation = dilate_with_ancilla(&channel, d_z)?;
    let mut projectors = Vec::with_capacity(m.outcome_count());
    let mut start = 0;
    for o in &m.outcomes {
        let n = o.kraus().len();
        let diag: Vec<f64> = (0..d_z).map(|k| if k >= start && k < start + n { 1.0 } else { 0.0 }).collect();
        projectors.push(ComplexMatrix::diag(&diag));
        start += n;
    }
    Ok(MeasurementDilation { dilation, projectors })
}

/// Reset-cost bookkeeping for a dilated measurement at `ρ_t`:
/// `T(S(ρ_t) − Σ p_i S(σ_{t,i})) − T(S(Σ_i Π_i z' Π_i) − S(ρ_z))`, which must be `≤ 0`.
pub fn measurement_reset_check(
    m: &Measurement,
    md: &MeasurementDilation,
    rho_t: &DensityOperator,
    ctx: ThermalContext,
) -> Result<ResetCheck> {
    let implemented = md.measurement()?;
    let mut deviation = 0.0f64;
    for (a, b) in implemented.outcomes.iter().zip(&m.outcomes) {
        deviation = deviation.max(a.choi().matrix().max_abs_diff(b.choi().matrix()));
    }
    if implemented.outcome_count() != m.outcome_count() || deviation > DILATION_TOL {
        return Err(Error::InconsistentDilation { deviation });
    }
    let t = ctx.temperature();
    let gain = measurement_entropy_gain(m, rho_t.matrix())?;
    let z = md.dilation.ancilla_output(rho_t)?;
    let mut dephased = ComplexMatrix::zeros(z.dim(), z.dim());
    for p in &md.projectors {
        dephased = &dephased + &(&(p * z.matrix()) * p);
    }
    let delta_s_z = entropy(&dephased)? - entropy(md.dilation.ancilla_state().matrix())?;
    let lhs = t * gain - t * delta_s_z;
    Ok(ResetCheck {
        lhs,
        holds: lhs <= 1e-6,
    })
}

/// `Σ_i p_i W_i` over outcomes above the probability floor.
pub fn average_over_outcomes(records: &[OutcomeRecord], values: &[f64]) -> f64 {
    records
        .iter()
        .zip(values)
        .filter(|(r, _)| r.probability > P_FLOOR)
        .map(|(r, v)| r.probability * v)
        .sum()
}
