//! Thermal states, free energies and the stepwise swap protocol that
//! transforms a system state while extracting close to `-ΔF` of work.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{
    check_same_dim, relative_entropy, von_neumann_entropy, ComplexMatrix, DensityOperator, Observable,
};

/// Off-diagonal magnitude below which a state counts as energy-diagonal.
const DIAGONAL_TOL: f64 = 1e-12;

/// Bath temperature (`k_B = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalContext {
    temperature: f64,
}

impl ThermalContext {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::InvalidTemperature(temperature));
        }
        Ok(Self { temperature })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

/// `ln Tr e^{-H/T}`, evaluated stably.
pub fn log_partition_function(h: &Observable, ctx: ThermalContext) -> f64 {
    let t = ctx.temperature();
    let e = h.eigen().values;
    let emin = e.iter().copied().fold(f64::INFINITY, f64::min);
    -emin / t + e.iter().map(|x| (-(x - emin) / t).exp()).sum::<f64>().ln()
}

/// Gibbs state `e^{-H/T} / Z`.
pub fn thermal_state(h: &Observable, ctx: ThermalContext) -> DensityOperator {
    let t = ctx.temperature();
    let eig = h.eigen();
    let emin = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eig.values.iter().map(|x| (-(x - emin) / t).exp()).collect();
    let z: f64 = weights.iter().sum();
    let m = eig.map_values(|x| (-(x - emin) / t).exp() / z);
    DensityOperator::from_matrix_unchecked(m)
}

/// `F = Tr[Hρ] − T S(ρ)`
pub fn free_energy(rho: &DensityOperator, h: &Observable, ctx: ThermalContext) -> Result<f64> {
    check_same_dim(rho.dim(), h.dim(), "free energy")?;
    Ok(rho.expectation(h)? - ctx.temperature() * von_neumann_entropy(rho)?)
}

/// Largest extractable work for `ρ_init → ρ_final`: `F(ρ_init) − F(ρ_final)`.
pub fn optimal_work(
    rho_init: &DensityOperator,
    rho_final: &DensityOperator,
    h: &Observable,
    ctx: ThermalContext,
) -> Result<f64> {
    check_same_dim(rho_init.dim(), rho_final.dim(), "optimal work")?;
    Ok(free_energy(rho_init, h, ctx)? - free_energy(rho_final, h, ctx)?)
}

/// One swap of the system with a bath subsystem prepared in `ρ_k`.
#[derive(Debug, Clone)]
pub struct ProtocolStep {
    pub index: usize,
    /// System state after the swap, `ρ_k`.
    pub system: DensityOperator,
    /// Bath-subsystem Hamiltonian `H_k = −T ln ρ_k`, shifted to a zero ground energy.
    pub bath_hamiltonian: Observable,
    /// Work extracted into the battery.
    pub work: f64,
    /// Change of the system's average energy.
    pub delta_u_system: f64,
    /// Energy deposited in the bath subsystem.
    pub heat: f64,
    /// Free-energy increase of the bath subsystem, `T D(ρ_{k−1} ‖ ρ_k)`.
    pub bath_delta_f: f64,
}

#[derive(Debug, Clone)]
pub struct ProtocolTrace {
    pub steps: Vec<ProtocolStep>,
    pub total_work: f64,
}

impl ProtocolTrace {
    pub const CSV_HEADER: &'static str = "step,work_increment,cumulative_work,bath_dF";

    /// Rows `(step, work_increment, cumulative_work, bath_dF)`.
    pub fn rows(&self) -> Vec<(usize, f64, f64, f64)> {
        let mut cumulative = 0.0;
        self.steps
            .iter()
            .map(|s| {
                cumulative += s.work;
                (s.index, s.work, cumulative, s.bath_delta_f)
            })
            .collect()
    }

    pub fn final_state(&self) -> Option<&DensityOperator> {
        self.steps.last().map(|s| &s.system)
    }
}

fn diagonal_populations(rho: &DensityOperator) -> Result<Vec<f64>> {
    let deviation = rho.matrix().max_off_diagonal();
    if deviation > DIAGONAL_TOL {
        return Err(Error::NotDiagonal { deviation });
    }
    let pops: Vec<f64> = rho.matrix().diagonal().iter().map(|z| z.re).collect();
    let min = pops.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::RankDeficient { min_eigenvalue: min });
    }
    Ok(pops)
}

/// Stepwise swap protocol along the straight line between the population vectors.
///
/// Step `k` swaps the system (in `ρ_{k−1}`) with a bath subsystem in the Gibbs
/// state of `H_k = −T ln ρ_k`. All inputs must be diagonal in the computational
/// basis and both states full rank; rotating into that basis is up to the caller.
pub fn swap_protocol(
    rho_init: &DensityOperator,
    rho_final: &DensityOperator,
    h: &Observable,
    ctx: ThermalContext,
    n_steps: usize,
) -> Result<ProtocolTrace> {
    check_same_dim(rho_init.dim(), rho_final.dim(), "swap protocol")?;
    check_same_dim(rho_init.dim(), h.dim(), "swap protocol")?;
    if n_steps == 0 {
        return Err(Error::InvalidArgument("swap protocol needs at least one step".into()));
    }
    h.energies_if_diagonal(DIAGONAL_TOL)?;
    let p0 = diagonal_populations(rho_init)?;
    let p1 = diagonal_populations(rho_final)?;
    let t = ctx.temperature();

    let population = |k: usize| -> Vec<f64> {
        if k == n_steps {
            return p1.clone();
        }
        let s = k as f64 / n_steps as f64;
        let v: Vec<f64> = p0.iter().zip(&p1).map(|(a, b)| (1.0 - s) * a + s * b).collect();
        let z: f64 = v.iter().sum();
        v.into_iter().map(|x| x / z).collect()
    };

    let mut steps = Vec::with_capacity(n_steps);
    let mut prev = rho_init.clone();
    let mut total = 0.0;
    for k in 1..=n_steps {
        let pk = population(k);
        let next = if k == n_steps {
            rho_final.clone()
        } else {
            DensityOperator::from_matrix_unchecked(ComplexMatrix::diag(&pk))
        };
        let logs: Vec<f64> = pk.iter().map(|x| -t * x.ln()).collect();
        let shift = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let hk = Observable::diagonal(&logs.iter().map(|x| x - shift).collect::<Vec<_>>());

        let delta_u_system = next.expectation(h)? - prev.expectation(h)?;
        let heat = prev.expectation(&hk)? - next.expectation(&hk)?;
        let work = -delta_u_system - heat;
        let bath_delta_f = t * relative_entropy(&prev, &next)?;
        total += work;
        steps.push(ProtocolStep {
            index: k,
            system: next.clone(),
            bath_hamiltonian: hk,
            work,
            delta_u_system,
            heat,
            bath_delta_f,
        });
        prev = next;
    }
    Ok(ProtocolTrace { steps, total_work: total })
}
