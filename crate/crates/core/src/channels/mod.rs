//! Completely positive maps, their thermodynamic classification and the work
//! benefit of a single channel use.

mod choi;
mod dilation;

pub use choi::{ChoiMatrix, KRAUS_CUTOFF};
pub use dilation::{
    catalytic_fixed_point, complete_isometry, dilate, dilate_with_ancilla, mixed_unitary_catalytic,
    reset_inequality_check, Dilation, FixedPointConfig, ResetCheck, DILATION_TOL,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{grid_oracle, maximize_over_states, GridConfig, Maximum, OptimizerConfig};
use crate::qmath::{
    check_same_dim, psd_eigenvalues, entropy_from_eigenvalues, trace_distance, trace_norm, ComplexMatrix,
    DensityOperator, Observable, UnitaryOperator,
};
use crate::thermo::{thermal_state, ThermalContext};

/// Trace-preservation tolerance `max |Σ K†K − I|`.
pub const TOL_TP: f64 = 1e-9;

/// Default tolerance of the analytic unital / Gibbs-preserving checks.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Completely positive map in Kraus form, not necessarily trace preserving.
#[derive(Debug, Clone, PartialEq)]
pub struct CpMap {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl CpMap {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("at least one Kraus operator is required".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        for k in &kraus {
            if k.rows() != dim_out || k.cols() != dim_in {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operators must all be {dim_out}x{dim_in}, found {}x{}",
                    k.rows(),
                    k.cols()
                )));
            }
            if !k.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { dim_in, dim_out, kraus })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `Σ_k K_k X K_k†` for any square input of the right size.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_same_dim(x.rows(), self.dim_in, "map input")?;
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = &out + &k.sandwich(x);
        }
        Ok(out)
    }

    /// `(C ⊗ id)[X]` where `X` lives on input ⊗ (dimension `right_dim`).
    pub fn apply_on_left(&self, x: &ComplexMatrix, right_dim: usize) -> Result<ComplexMatrix> {
        check_same_dim(x.rows(), self.dim_in * right_dim, "map input")?;
        let (di, dout, r) = (self.dim_in, self.dim_out, right_dim);
        let mut out = ComplexMatrix::zeros(dout * r, dout * r);
        for k in &self.kraus {
            // out[(a,α),(c,β)] += Σ_{b,d} K_ab X[(b,α),(d,β)] conj(K_cd)
            let mut left = ComplexMatrix::zeros(dout * r, di * r);
            for a in 0..dout {
                for b in 0..di {
                    let kab = k[(a, b)];
                    if kab == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for alpha in 0..r {
                        for col in 0..di * r {
                            left[(a * r + alpha, col)] += kab * x[(b * r + alpha, col)];
                        }
                    }
                }
            }
            for c in 0..dout {
                for d in 0..di {
                    let kcd = k[(c, d)].conj();
                    if kcd == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for row in 0..dout * r {
                        for beta in 0..r {
                            out[(row, c * r + beta)] += left[(row, d * r + beta)] * kcd;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Σ_k K_k† K_k`
    pub fn effect(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            m = &m + &(&k.adjoint() * k);
        }
        m.hermitian_part()
    }

    pub fn choi(&self) -> ChoiMatrix {
        ChoiMatrix::from_map(self)
    }

    /// Sum of maps: Kraus lists concatenated.
    pub fn sum(maps: &[CpMap]) -> Result<CpMap> {
        CpMap::new(maps.iter().flat_map(|m| m.kraus.iter().cloned()).collect())
    }
}

/// Trace-preserving completely positive map.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    map: CpMap,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::from_map(CpMap::new(kraus)?)
    }

    pub fn from_map(map: CpMap) -> Result<Self> {
        let deviation = map.effect().max_abs_diff(&ComplexMatrix::identity(map.dim_in()));
        if deviation > TOL_TP {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self { map })
    }

    pub fn as_map(&self) -> &CpMap {
        &self.map
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        self.map.kraus()
    }

    pub fn dim_in(&self) -> usize {
        self.map.dim_in()
    }

    pub fn dim_out(&self) -> usize {
        self.map.dim_out()
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator::from_matrix_unchecked(self.map.apply_matrix(rho.matrix())?))
    }

    pub fn choi(&self) -> ChoiMatrix {
        self.map.choi()
    }

    pub fn from_choi(choi: &ChoiMatrix) -> Result<Self> {
        choi.to_channel()
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            map: CpMap::new(vec![ComplexMatrix::identity(dim)]).expect("identity"),
        }
    }

    pub fn unitary(u: &UnitaryOperator) -> Self {
        Self {
            map: CpMap::new(vec![u.matrix().clone()]).expect("unitary"),
        }
    }

    /// `ρ ↦ Σ_i p_i U_i ρ U_i†`
    pub fn mixed_unitary(unitaries: &[UnitaryOperator], probs: &[f64]) -> Result<Self> {
        validate_probabilities(probs)?;
        if unitaries.len() != probs.len() || unitaries.is_empty() {
            return Err(Error::InvalidArgument("need one probability per unitary".into()));
        }
        let kraus = unitaries
            .iter()
            .zip(probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(u, &p)| u.matrix().scale(p.sqrt()))
            .collect();
        Self::new(kraus)
    }

    /// Werner–Holevo channel on a qutrit, `ρ ↦ ½(Tr[ρ] I − ρᵀ)`.
    pub fn werner_holevo() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut kraus = Vec::new();
        for i in 0..3 {
            for j in i + 1..3 {
                let m = &ComplexMatrix::unit(3, i, j) - &ComplexMatrix::unit(3, j, i);
                kraus.push(m.scale(s));
            }
        }
        Self::new(kraus).expect("Werner-Holevo is trace preserving")
    }

    /// `ρ ↦ (1−p) ρ + p Tr[ρ] I/d`
    pub fn depolarizing(dim: usize, p: f64) -> Result<Self> {
        check_unit_interval(p, "depolarizing probability")?;
        let mut kraus = vec![ComplexMatrix::identity(dim).scale((1.0 - p).sqrt())];
        if p > 0.0 {
            let s = (p / dim as f64).sqrt();
            for a in 0..dim {
                for b in 0..dim {
                    kraus.push(ComplexMatrix::unit(dim, a, b).scale(s));
                }
            }
        }
        Self::new(kraus)
    }

    /// `ρ ↦ (1−p) ρ + p diag(ρ)`
    pub fn dephasing(dim: usize, p: f64) -> Result<Self> {
        check_unit_interval(p, "dephasing probability")?;
        let mut kraus = vec![ComplexMatrix::identity(dim).scale((1.0 - p).sqrt())];
        if p > 0.0 {
            for a in 0..dim {
                kraus.push(ComplexMatrix::unit(dim, a, a).scale(p.sqrt()));
            }
        }
        Self::new(kraus)
    }

    /// `ρ ↦ |0⟩⟨0| Tr[ρ]`
    pub fn reset_to_ground(dim: usize) -> Self {
        Self::new((0..dim).map(|b| ComplexMatrix::unit(dim, 0, b)).collect()).expect("reset is trace preserving")
    }

    /// Qubit amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_unit_interval(gamma, "damping probability")?;
        let k0 = ComplexMatrix::diag(&[1.0, (1.0 - gamma).sqrt()]);
        let k1 = ComplexMatrix::unit(2, 0, 1).scale(gamma.sqrt());
        Self::new(vec![k0, k1])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ChannelJson {
            dim_in: self.dim_in(),
            dim_out: self.dim_out(),
            kraus: self.kraus().to_vec(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ChannelJson = serde_json::from_str(text)?;
        raw.into_channel()
    }
}

/// On-disk channel format `{"dim_in", "dim_out", "kraus": [matrix, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<ComplexMatrix>,
}

impl ChannelJson {
    pub fn into_channel(self) -> Result<KrausChannel> {
        let c = KrausChannel::new(self.kraus)?;
        if c.dim_in() != self.dim_in || c.dim_out() != self.dim_out {
            return Err(Error::DimensionMismatch(format!(
                "declared {}->{}, Kraus operators are {}->{}",
                self.dim_in,
                self.dim_out,
                c.dim_in(),
                c.dim_out()
            )));
        }
        Ok(c)
    }
}

/// Mixed-unitary channel file `{"unitaries": [matrix, ...], "probs": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedUnitaryJson {
    pub unitaries: Vec<UnitaryOperator>,
    pub probs: Vec<f64>,
}

pub(crate) fn validate_probabilities(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidProbabilities("empty".into()));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidProbabilities("entries must be finite and non-negative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbabilities(format!("sum is {total}")));
    }
    Ok(())
}

fn check_unit_interval(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("{what} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Who pays for the energy a device changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccountingMode {
    /// Devices draw energy from the same battery as the protocol.
    BatteryPowered,
    /// Devices run on their own supply; only free-energy changes count.
    InternalPower,
}

/// `Σ K ρ K†`
pub fn apply(c: &KrausChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    c.apply(rho)
}

fn require_square(c: &KrausChannel) -> Result<usize> {
    if c.dim_in() != c.dim_out() {
        return Err(Error::Unsupported(format!(
            "cyclic work benefit needs dim_in = dim_out, got {}->{}",
            c.dim_in(),
            c.dim_out()
        )));
    }
    Ok(c.dim_in())
}

/// `‖C[I/d] − I/d‖₁ < tol`
pub fn is_unital(c: &KrausChannel, tol: f64) -> bool {
    if c.dim_in() != c.dim_out() {
        return false;
    }
    let mixed = DensityOperator::maximally_mixed(c.dim_in());
    match c.apply(&mixed) {
        Ok(out) => trace_norm(&(out.matrix() - mixed.matrix())).is_ok_and(|d| d < tol),
        Err(_) => false,
    }
}

/// `‖C[τ] − τ‖₁ < tol` for the Gibbs state of `h`.
pub fn is_gibbs_preserving(c: &KrausChannel, h: &Observable, ctx: ThermalContext, tol: f64) -> bool {
    if c.dim_in() != c.dim_out() || h.dim() != c.dim_in() {
        return false;
    }
    let tau = thermal_state(h, ctx);
    match c.apply(&tau) {
        Ok(out) => trace_norm(&(out.matrix() - tau.matrix())).is_ok_and(|d| d < tol),
        Err(_) => false,
    }
}

/// Energy drawn from the system when the channel acts: `Tr[Hρ] − Tr[H C[ρ]]`.
pub fn apply_work(c: &KrausChannel, rho: &DensityOperator, h: &Observable) -> Result<f64> {
    check_same_dim(rho.dim(), c.dim_in(), "apply work")?;
    check_same_dim(h.dim(), c.dim_out(), "apply work")?;
    check_same_dim(h.dim(), rho.dim(), "apply work")?;
    Ok(rho.expectation(h)? - c.apply(rho)?.expectation(h)?)
}

fn entropy_of(m: &ComplexMatrix) -> Result<f64> {
    Ok(entropy_from_eigenvalues(&psd_eigenvalues(m)?))
}

/// `S(ρ) − S(C[ρ])` in nats.
pub fn entropy_reduction(c: &KrausChannel, rho: &ComplexMatrix) -> Result<f64> {
    Ok(entropy_of(rho)? - entropy_of(&c.as_map().apply_matrix(rho)?)?)
}

/// `F(C[ρ]) − F(ρ)` with `F = Tr[Hρ] − T S(ρ)`.
pub fn free_energy_gain(c: &KrausChannel, h: &Observable, ctx: ThermalContext, rho: &ComplexMatrix) -> Result<f64> {
    let out = c.as_map().apply_matrix(rho)?;
    let t = ctx.temperature();
    let du = h.matrix().trace_product(&out).re - h.matrix().trace_product(rho).re;
    Ok(du - t * (entropy_of(&out)? - entropy_of(rho)?))
}

/// `max_ρ T (S(ρ) − S(C[ρ]))` and its maximiser.
pub fn work_benefit(c: &KrausChannel, ctx: ThermalContext, cfg: &OptimizerConfig) -> Result<Maximum> {
    let d = require_square(c)?;
    let t = ctx.temperature();
    let mut m = maximize_over_states(d, |rho| entropy_reduction(c, rho), cfg)?;
    m.value *= t;
    Ok(m)
}

/// Grid-search value of the same maximum (`d ≤ 3`).
pub fn work_benefit_oracle(c: &KrausChannel, ctx: ThermalContext, grid: &GridConfig) -> Result<f64> {
    let d = require_square(c)?;
    if d > 3 {
        return Err(Error::Unsupported(format!("grid oracle limited to d <= 3, got {d}")));
    }
    Ok(ctx.temperature() * grid_oracle(d, |rho| entropy_reduction(c, rho), grid)?)
}

/// `max_ρ (F(C[ρ]) − F(ρ))`: benefit when the device has its own power supply.
pub fn work_benefit_internal_power(
    c: &KrausChannel,
    h: &Observable,
    ctx: ThermalContext,
    cfg: &OptimizerConfig,
) -> Result<Maximum> {
    let d = require_square(c)?;
    check_same_dim(h.dim(), d, "internal-power benefit")?;
    maximize_over_states(d, |rho| free_energy_gain(c, h, ctx, rho), cfg)
}

/// Work benefit under the chosen accounting.
pub fn channel_work_benefit(
    c: &KrausChannel,
    h: &Observable,
    ctx: ThermalContext,
    mode: AccountingMode,
    cfg: &OptimizerConfig,
) -> Result<Maximum> {
    match mode {
        AccountingMode::BatteryPowered => work_benefit(c, ctx, cfg),
        AccountingMode::InternalPower => work_benefit_internal_power(c, h, ctx, cfg),
    }
}

/// Basis states plus `(|a⟩+|b⟩)/√2` and `(|a⟩+i|b⟩)/√2` for all `a < b`;
/// their span covers every operator, so they separate distinct channels.
pub fn probe_states(dim: usize) -> Vec<DensityOperator> {
    let mut out: Vec<DensityOperator> = (0..dim).map(|i| DensityOperator::basis(dim, i)).collect();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..dim {
        for b in a + 1..dim {
            for phase in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                v[a] = Complex64::new(s, 0.0);
                v[b] = phase * s;
                out.push(DensityOperator::pure(&v).expect("normalised"));
            }
        }
    }
    out
}

/// Largest output trace distance between two maps over [`probe_states`].
pub fn channel_distance(
    dim: usize,
    first: impl Fn(&DensityOperator) -> Result<DensityOperator>,
    second: impl Fn(&DensityOperator) -> Result<DensityOperator>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for probe in probe_states(dim) {
        worst = worst.max(trace_distance(&first(&probe)?, &second(&probe)?)?);
    }
    Ok(worst)
}

/// Evidence about whether a dilation can run catalytically.
#[derive(Debug, Clone)]
pub struct CatalyticEvidence {
    pub fixed_point: Option<DensityOperator>,
    /// Distance between `c` and the channel implemented with the ancilla in the fixed point.
    pub channel_distance: Option<f64>,
}

/// Runs the fixed-point search for `dil` on input `rho_t` and, when a fixed point
/// is found, measures how far the resulting channel is from `c`.
pub fn catalytic_evidence(
    c: &KrausChannel,
    dil: &Dilation,
    rho_t: &DensityOperator,
    cfg: &FixedPointConfig,
) -> Result<CatalyticEvidence> {
    let (d_t, d_z) = dil.dims();
    let fixed_point = catalytic_fixed_point(dil.unitary(), rho_t, d_z, cfg)?;
    let channel_distance = match &fixed_point {
        Some(sigma) => {
            let alt = Dilation::new(dil.unitary().clone(), sigma.clone(), d_t)?;
            Some(channel_distance(d_t, |r| c.apply(r), |r| alt.apply(r))?)
        }
        None => None,
    };
    Ok(CatalyticEvidence {
        fixed_point,
        channel_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::OptimizerConfig;
    use crate::qmath::von_neumann_entropy;
    use crate::sampling::{random_channel, random_density, seeded_rng};

    fn ctx(t: f64) -> ThermalContext {
        ThermalContext::new(t).unwrap()
    }

    fn fast() -> OptimizerConfig {
        OptimizerConfig { restarts: 4, ..Default::default() }
    }

    fn x() -> UnitaryOperator {
        UnitaryOperator::new(ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()).unwrap()
    }

    #[test]
    fn rejects_non_trace_preserving() {
        let bad = vec![ComplexMatrix::diag(&[1.0, 0.5])];
        assert!(matches!(KrausChannel::new(bad), Err(Error::NotTracePreserving { .. })));
        assert!(CpMap::new(vec![]).is_err());
        let mixed = vec![ComplexMatrix::identity(2), ComplexMatrix::identity(3)];
        assert!(matches!(CpMap::new(mixed), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn apply_examples() {
        let mut rng = seeded_rng(1, 0);
        let rho = random_density(&mut rng, 3);
        let out = KrausChannel::identity(3).apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);

        let wh = KrausChannel::werner_holevo();
        let out = wh.apply(&DensityOperator::basis(3, 0)).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::diag(&[0.0, 0.5, 0.5])) < 1e-15);

        let deph = KrausChannel::dephasing(3, 1.0).unwrap();
        let out = deph.apply(&rho).unwrap();
        assert!(out.matrix().max_off_diagonal() < 1e-15);
    }

    #[test]
    fn werner_holevo_matches_formula() {
        let wh = KrausChannel::werner_holevo();
        let mut rng = seeded_rng(2, 0);
        for _ in 0..20 {
            let rho = random_density(&mut rng, 3);
            let expect = (&ComplexMatrix::identity(3) - &rho.matrix().transpose()).scale(0.5);
            assert!(wh.apply(&rho).unwrap().matrix().max_abs_diff(&expect) < 1e-12);
        }
        let out = wh.apply(&DensityOperator::maximally_mixed(3)).unwrap();
        assert!(out.matrix().max_abs_diff(DensityOperator::maximally_mixed(3).matrix()) < 1e-15);
        // eigenvalue multiset changes on a basis projector: not a unitary channel
        let ev = wh.apply(&DensityOperator::basis(3, 1)).unwrap().eigenvalues();
        assert!((ev[0] - 0.5).abs() < 1e-12 && ev[2].abs() < 1e-12);
    }

    #[test]
    fn classification_examples() {
        assert!(is_unital(&KrausChannel::unitary(&x()), CLASSIFY_TOL));
        assert!(is_unital(&KrausChannel::werner_holevo(), CLASSIFY_TOL));
        assert!(!is_unital(&KrausChannel::reset_to_ground(2), CLASSIFY_TOL));

        let h = Observable::diagonal(&[0.0, 1.0]);
        assert!(is_gibbs_preserving(&KrausChannel::identity(2), &h, ctx(1.0), CLASSIFY_TOL));
        let dep = KrausChannel::depolarizing(2, 0.3).unwrap();
        assert!(is_gibbs_preserving(&dep, &Observable::zero(2), ctx(1.0), CLASSIFY_TOL));
        assert!(!is_gibbs_preserving(&KrausChannel::reset_to_ground(2), &h, ctx(1.0), CLASSIFY_TOL));
    }

    #[test]
    fn apply_work_examples() {
        let mut rng = seeded_rng(3, 0);
        let c = random_channel(&mut rng, 2, 3);
        let rho = random_density(&mut rng, 2);
        assert_eq!(apply_work(&c, &rho, &Observable::zero(2)).unwrap(), 0.0);
        let e = 1.7;
        let w = apply_work(
            &KrausChannel::reset_to_ground(2),
            &DensityOperator::maximally_mixed(2),
            &Observable::diagonal(&[0.0, e]),
        )
        .unwrap();
        assert!((w - e / 2.0).abs() < 1e-15);
    }

    #[test]
    fn work_benefit_examples() {
        let reset = work_benefit(&KrausChannel::reset_to_ground(2), ctx(1.0), &fast()).unwrap();
        assert!((reset.value - 2f64.ln()).abs() < 1e-9);
        assert!(reset.state.matrix().max_abs_diff(DensityOperator::maximally_mixed(2).matrix()) < 1e-5);
        let wh = work_benefit(&KrausChannel::werner_holevo(), ctx(1.0), &fast()).unwrap();
        assert!(wh.value.abs() < 1e-6);
        let t = 2.5;
        let reset = work_benefit(&KrausChannel::reset_to_ground(3), ctx(t), &fast()).unwrap();
        assert!((reset.value - t * 3f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn maximally_mixed_witness_is_nonnegative() {
        let mut rng = seeded_rng(4, 0);
        for _ in 0..20 {
            let c = random_channel(&mut rng, 3, 2);
            let mixed = DensityOperator::maximally_mixed(3);
            let gain = entropy_reduction(&c, mixed.matrix()).unwrap();
            assert!(gain >= -1e-12);
        }
    }

    #[test]
    fn internal_power_examples() {
        let e = 1.3;
        let h = Observable::diagonal(&[0.0, e]);
        let raise = KrausChannel::unitary(&x());
        let m = work_benefit_internal_power(&raise, &h, ctx(1.0), &fast()).unwrap();
        assert!((m.value - e).abs() < 1e-8);
        assert!((m.state.matrix()[(0, 0)].re - 1.0).abs() < 1e-4);
        let id = work_benefit_internal_power(&KrausChannel::identity(2), &h, ctx(1.0), &fast()).unwrap();
        assert!(id.value.abs() < 1e-9);
        // thermalising channel ρ ↦ τ Tr ρ is Gibbs preserving
        let tau = thermal_state(&h, ctx(1.0));
        let eig = tau.eigen();
        let mut kraus = Vec::new();
        for k in 0..2 {
            let v = eig.vector(k);
            for b in 0..2 {
                let mut e_b = vec![Complex64::new(0.0, 0.0); 2];
                e_b[b] = Complex64::new(1.0, 0.0);
                kraus.push(ComplexMatrix::outer(&v, &e_b).scale(eig.values[k].sqrt()));
            }
        }
        let thermalise = KrausChannel::new(kraus).unwrap();
        assert!(is_gibbs_preserving(&thermalise, &h, ctx(1.0), CLASSIFY_TOL));
        let m = work_benefit_internal_power(&thermalise, &h, ctx(1.0), &fast()).unwrap();
        assert!(m.value <= 1e-6);
    }

    #[test]
    fn choi_round_trip() {
        let mut rng = seeded_rng(5, 0);
        let c = random_channel(&mut rng, 3, 2);
        let j = c.choi();
        assert!(j.is_cp(1e-12));
        assert!(j.tp_deviation() < 1e-12);
        let back = KrausChannel::from_choi(&j).unwrap();
        assert_eq!(back.kraus().len(), 2);
        let rho = random_density(&mut rng, 3);
        let a = c.apply(&rho).unwrap();
        let b = back.apply(&rho).unwrap();
        let via = j.apply(rho.matrix()).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
        assert!(a.matrix().max_abs_diff(&via) < 1e-12);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let wh = KrausChannel::werner_holevo();
        let text = wh.to_json().unwrap();
        assert_eq!(KrausChannel::from_json(&text).unwrap(), wh);
        let wrong = r#"{"dim_in": 2, "dim_out": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[1,0]]]]}"#;
        assert!(KrausChannel::from_json(wrong).is_ok());
        let lying = r#"{"dim_in": 3, "dim_out": 3, "kraus": [[[[1,0],[0,0]],[[0,0],[1,0]]]]}"#;
        assert!(matches!(KrausChannel::from_json(lying), Err(Error::DimensionMismatch(_))));
        assert!(matches!(KrausChannel::from_json("{"), Err(Error::Json(_))));
    }

    #[test]
    fn dilation_round_trips() {
        let mut rng = seeded_rng(6, 0);
        for _ in 0..10 {
            let c = random_channel(&mut rng, 2, 3);
            let dil = dilate(&c).unwrap();
            assert!(dil.deviation_from(&c).unwrap() < 1e-12);
            let rho = random_density(&mut rng, 2);
            let d = trace_distance(&dil.apply(&rho).unwrap(), &c.apply(&rho).unwrap()).unwrap();
            assert!(d < 1e-9);
        }
        let id = dilate(&KrausChannel::identity(2)).unwrap();
        assert_eq!(id.dims(), (2, 1));
        assert!(id.unitary().matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn werner_holevo_dilation_nine_levels() {
        let wh = KrausChannel::werner_holevo();
        let dil = dilate_with_ancilla(&wh, 9).unwrap();
        assert_eq!(dil.dims(), (3, 9));
        assert!(dil.deviation_from(&wh).unwrap() < 1e-12);
        assert!(dilate_with_ancilla(&wh, 2).is_err());
    }

    #[test]
    fn reset_inequality_examples() {
        let c = ctx(1.0);
        let u = KrausChannel::unitary(&x());
        let dil = dilate(&u).unwrap();
        let r = reset_inequality_check(&u, &dil, &DensityOperator::diagonal(&[0.3, 0.7]).unwrap(), c).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.holds);

        let damp = KrausChannel::amplitude_damping(0.5).unwrap();
        let dil = dilate(&damp).unwrap();
        let r = reset_inequality_check(&damp, &dil, &DensityOperator::maximally_mixed(2), c).unwrap();
        assert!(r.holds && r.lhs < -1e-3, "lhs {}", r.lhs);

        let reset = KrausChannel::reset_to_ground(2);
        let dil = dilate(&reset).unwrap();
        let r = reset_inequality_check(&reset, &dil, &DensityOperator::maximally_mixed(2), c).unwrap();
        assert!(r.holds && r.lhs.abs() < 1e-12);

        let other = dilate(&KrausChannel::identity(2)).unwrap();
        assert!(matches!(
            reset_inequality_check(&reset, &other, &DensityOperator::maximally_mixed(2), c),
            Err(Error::InconsistentDilation { .. })
        ));
    }

    #[test]
    fn catalytic_examples() {
        let rho = DensityOperator::diagonal(&[0.2, 0.8]).unwrap();
        let start = DensityOperator::diagonal(&[0.6, 0.4]).unwrap();
        let cfg = FixedPointConfig { start: Some(start.clone()), ..Default::default() };
        let fp = catalytic_fixed_point(&UnitaryOperator::identity(4), &rho, 2, &cfg).unwrap().unwrap();
        assert!(fp.matrix().max_abs_diff(start.matrix()) < 1e-15);

        let probs = [0.3, 0.7];
        let dil = mixed_unitary_catalytic(&[UnitaryOperator::identity(2), x()], &probs).unwrap();
        let cfg = FixedPointConfig { start: Some(dil.ancilla_state().clone()), ..Default::default() };
        let fp = catalytic_fixed_point(dil.unitary(), &rho, 2, &cfg).unwrap().unwrap();
        assert!(fp.matrix().max_abs_diff(&ComplexMatrix::diag(&probs)) < 1e-12);

        let channel = dil.channel().unwrap();
        assert!(is_unital(&channel, CLASSIFY_TOL));
        let w = work_benefit(&channel, ctx(1.0), &fast()).unwrap();
        assert!(w.value.abs() < 1e-6);
        assert!(matches!(
            mixed_unitary_catalytic(&[x()], &[0.5]),
            Err(Error::InvalidProbabilities(_))
        ));
    }

    #[test]
    fn unital_maps_do_not_lower_entropy() {
        let mut rng = seeded_rng(7, 0);
        let wh = KrausChannel::werner_holevo();
        for _ in 0..30 {
            let rho = random_density(&mut rng, 3);
            let out = wh.apply(&rho).unwrap();
            assert!(von_neumann_entropy(&out).unwrap() >= von_neumann_entropy(&rho).unwrap() - 1e-12);
        }
    }

    #[test]
    fn probe_distance_detects_difference() {
        let id = KrausChannel::identity(2);
        let z = KrausChannel::dephasing(2, 1.0).unwrap();
        let d = channel_distance(2, |r| id.apply(r), |r| z.apply(r)).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        let d = channel_distance(2, |r| id.apply(r), |r| id.apply(r)).unwrap();
        assert!(d.abs() < 1e-15);
    }
}
