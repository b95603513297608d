//! Explicit battery: a weight with Hamiltonian `x̂` and translation operators
//! `Γ_E|x⟩ = |x + E⟩`.
//!
//! The weight never appears as a grid inside a unitary. It enters only through
//! two kernels of its wavefunction `ψ` (taken real):
//!
//! - `overlap(A, B) = ∫ ψ(x−A) ψ(x−B) dx = Tr[Γ_A ρ_w Γ_B†]`
//! - `x_moment(A, B) = ∫ x ψ(x−A) ψ(x−B) dx = Tr[Γ_A ρ_w Γ_B† x̂]`

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channels::{channel_distance, ChoiMatrix, CpMap, Dilation, KrausChannel};
use crate::error::{Error, Result};
use crate::measure::{MeasurementDilation, P_FLOOR};
use crate::qmath::{
    check_same_dim, entropy_from_eigenvalues, psd_eigenvalues, trace_distance, ComplexMatrix, DensityOperator,
    Observable, UnitaryOperator,
};
use crate::quadrature::{adaptive_simpson, simpson, sine_integral, AdaptiveConfig};
use crate::thermo::ThermalContext;

/// Off-diagonal tolerance for Hamiltonians that must be given in their eigenbasis.
const ENERGY_BASIS_TOL: f64 = 1e-12;

/// Finest spacing ratio the quadrature oracle accepts: `Δx ≤ L / ORACLE_RESOLUTION`.
pub const ORACLE_RESOLUTION: f64 = 1e4;

/// Relative tolerance on support edges, so shifted grid points that round just
/// outside the support still count.
const SUPPORT_SLACK: f64 = 1e-12;

/// Real wavefunction on a uniform grid, linearly interpolated and zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWavefunction {
    x0: f64,
    dx: f64,
    amplitudes: Vec<f64>,
}

impl SampledWavefunction {
    /// Normalises the interpolated wavefunction.
    pub fn new(x0: f64, dx: f64, amplitudes: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {dx}")));
        }
        if amplitudes.len() < 2 || amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("need at least two finite samples".into()));
        }
        // exact ∫ψ² for the piecewise-linear interpolant
        let norm2: f64 = amplitudes
            .windows(2)
            .map(|w| dx * (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0)
            .sum();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidArgument("wavefunction is zero".into()));
        }
        let s = norm2.sqrt();
        Ok(Self {
            x0,
            dx,
            amplitudes: amplitudes.into_iter().map(|a| a / s).collect(),
        })
    }

    pub fn spacing(&self) -> f64 {
        self.dx
    }

    fn extent(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.dx * (self.amplitudes.len() - 1) as f64)
    }

    fn eval(&self, x: f64) -> f64 {
        let last = (self.amplitudes.len() - 1) as f64;
        let t = (x - self.x0) / self.dx;
        if t < -SUPPORT_SLACK * last || t > last * (1.0 + SUPPORT_SLACK) {
            return 0.0;
        }
        let t = t.clamp(0.0, last);
        let k = (t.floor() as usize).min(self.amplitudes.len() - 2);
        let f = t - k as f64;
        self.amplitudes[k] * (1.0 - f) + self.amplitudes[k + 1] * f
    }
}

/// Initial state of the weight.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightState {
    /// `1/√(2L)` on `[−L, L]`.
    TopHat { half_width: f64 },
    /// `√(3/L³)(x + 3L/4)` on `[−3L/4, L/4]`: normalised with `⟨x̂⟩ = 0`.
    Triangular { length: f64 },
    Sampled(SampledWavefunction),
}

fn check_length(l: f64) -> Result<f64> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidArgument(format!("weight width must be positive and finite, got {l}")));
    }
    Ok(l)
}

impl WeightState {
    pub fn top_hat(half_width: f64) -> Result<Self> {
        Ok(Self::TopHat {
            half_width: check_length(half_width)?,
        })
    }

    pub fn triangular(length: f64) -> Result<Self> {
        Ok(Self::Triangular {
            length: check_length(length)?,
        })
    }

    pub fn sampled(x0: f64, dx: f64, amplitudes: Vec<f64>) -> Result<Self> {
        Ok(Self::Sampled(SampledWavefunction::new(x0, dx, amplitudes)?))
    }

    /// Gaussian with position standard deviation `sigma`, sampled on `±n_sigma·sigma`
    /// with `points` samples.
    pub fn gaussian(sigma: f64, n_sigma: f64, points: usize) -> Result<Self> {
        let sigma = check_length(sigma)?;
        let half = n_sigma * sigma;
        let points = points.max(3);
        let dx = 2.0 * half / (points - 1) as f64;
        let amps = (0..points)
            .map(|k| {
                let x = -half + k as f64 * dx;
                (-x * x / (4.0 * sigma * sigma)).exp()
            })
            .collect();
        Self::sampled(-half, dx, amps)
    }

    /// Characteristic width `L`: the half-width for the top hat, the support
    /// length for the triangle, and the half extent of a sampled grid.
    pub fn length(&self) -> f64 {
        match self {
            Self::TopHat { half_width } => *half_width,
            Self::Triangular { length } => *length,
            Self::Sampled(s) => {
                let (a, b) = s.extent();
                0.5 * (b - a)
            }
        }
    }

    /// Support `[lo, hi]` of `ψ`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::TopHat { half_width: l } => (-l, *l),
            Self::Triangular { length: l } => (-0.75 * l, 0.25 * l),
            Self::Sampled(s) => s.extent(),
        }
    }

    pub fn wavefunction(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        let slack = SUPPORT_SLACK * (hi - lo);
        if x < lo - slack || x > hi + slack {
            return 0.0;
        }
        match self {
            Self::TopHat { half_width: l } => 1.0 / (2.0 * l).sqrt(),
            Self::Triangular { length: l } => (3.0 / l.powi(3)).sqrt() * (x + 0.75 * l),
            Self::Sampled(s) => s.eval(x),
        }
    }

    pub fn kernel(&self) -> WeightKernel<'_> {
        WeightKernel { state: self }
    }
}

/// Overlap and first-moment kernels of a weight state.
#[derive(Debug, Clone, Copy)]
pub struct WeightKernel<'a> {
    state: &'a WeightState,
}

pub fn kernel(w: &WeightState) -> WeightKernel<'_> {
    w.kernel()
}

/// Intersection of the supports of `ψ(x−A)` and `ψ(x−B)`, if nonempty.
fn shifted_support(w: &WeightState, a: f64, b: f64) -> Option<(f64, f64)> {
    let (lo, hi) = w.support();
    let left = lo + a.max(b);
    let right = hi + a.min(b);
    (right > left).then_some((left, right))
}

impl WeightKernel<'_> {
    pub fn state(&self) -> &WeightState {
        self.state
    }

    /// `Tr[Γ_A ρ_w Γ_B†]`
    pub fn overlap(&self, a: f64, b: f64) -> f64 {
        let delta = (a - b).abs();
        match self.state {
            WeightState::TopHat { half_width: l } => (1.0 - delta / (2.0 * l)).max(0.0),
            WeightState::Triangular { length: l } => {
                let rest = l - delta;
                if rest <= 0.0 {
                    return 0.0;
                }
                3.0 / l.powi(3) * (rest.powi(3) / 3.0 + delta * rest * rest / 2.0)
            }
            WeightState::Sampled(s) => sampled_integral(self.state, s, a, b, false),
        }
    }

    /// `Tr[Γ_A ρ_w Γ_B† x̂]`, exact at finite width.
    pub fn x_moment(&self, a: f64, b: f64) -> f64 {
        let delta = (a - b).abs();
        match self.state {
            WeightState::TopHat { half_width: l } => {
                if delta >= 2.0 * l {
                    0.0
                } else {
                    0.5 * (a + b) * (1.0 - delta / (2.0 * l))
                }
            }
            WeightState::Triangular { length: l } => {
                let rest = l - delta;
                if rest <= 0.0 {
                    return 0.0;
                }
                let c = a.max(b) - 0.75 * l;
                3.0 / l.powi(3)
                    * (rest.powi(4) / 4.0 + (delta + c) * rest.powi(3) / 3.0 + c * delta * rest * rest / 2.0)
            }
            WeightState::Sampled(s) => sampled_integral(self.state, s, a, b, true),
        }
    }

    /// Large-width limit of [`Self::x_moment`], dropping `O(1/L)` terms:
    /// `(A+B)/2` for symmetric states, `(A+B)/2 − 3|A−B|/8` for the triangle.
    pub fn x_moment_truncated(&self, a: f64, b: f64) -> f64 {
        match self.state {
            WeightState::Triangular { .. } => 0.5 * (a + b) - 0.375 * (a - b).abs(),
            _ => 0.5 * (a + b),
        }
    }
}

/// `(A+B)/2 − |A²−B²|/(4L)`: the top-hat moment written with an absolute value.
///
/// Agrees with the exact moment only when `A + B ≥ 0`; kept for comparison.
pub fn top_hat_x_moment_abs_form(half_width: f64, a: f64, b: f64) -> f64 {
    0.5 * (a + b) - (a * a - b * b).abs() / (4.0 * half_width)
}

fn sampled_integral(w: &WeightState, s: &SampledWavefunction, a: f64, b: f64, moment: bool) -> f64 {
    let Some((lo, hi)) = shifted_support(w, a, b) else {
        return 0.0;
    };
    let n = (2.0 * (hi - lo) / s.dx).ceil() as usize;
    simpson(
        |x| {
            let v = s.eval(x - a) * s.eval(x - b);
            if moment {
                x * v
            } else {
                v
            }
        },
        lo,
        hi,
        n.max(2),
    )
}

/// Composite-Simpson evaluation of `(overlap, x_moment)` directly from `ψ` at spacing
/// no coarser than `L / 10⁴`.
pub fn quadrature_oracle(w: &WeightState, a: f64, b: f64) -> Result<(f64, f64)> {
    let required = w.length() / ORACLE_RESOLUTION;
    let Some((lo, hi)) = shifted_support(w, a, b) else {
        return Ok((0.0, 0.0));
    };
    let n = match w {
        WeightState::Sampled(s) => {
            if s.dx > required {
                return Err(Error::ResolutionTooCoarse {
                    spacing: s.dx,
                    required,
                });
            }
            ((hi - lo) / s.dx).ceil() as usize
        }
        _ => ((hi - lo) / required).ceil() as usize,
    };
    let n = n.max(2);
    let overlap = simpson(|x| w.wavefunction(x - a) * w.wavefunction(x - b), lo, hi, n);
    let moment = simpson(|x| x * w.wavefunction(x - a) * w.wavefunction(x - b), lo, hi, n);
    Ok((overlap, moment))
}

/// `δ = 1 − ∫_{−ε}^{ε} μ(p) dp` for the weight's momentum density `μ`.
pub fn momentum_concentration(w: &WeightState, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    if eps.is_infinite() {
        return Ok(0.0);
    }
    let inside = match w {
        WeightState::TopHat { half_width: l } => {
            let u = eps * l;
            2.0 / PI * (sine_integral(2.0 * u) - u.sin().powi(2) / u)
        }
        _ => {
            // ∫_{−ε}^{ε} μ = (2/π) ∫_0^W C(k) sin(εk)/k dk with C(k) = overlap(k, 0)
            let (lo, hi) = w.support();
            let width = hi - lo;
            let k = w.kernel();
            let f = |x: f64| {
                if x == 0.0 {
                    eps
                } else {
                    k.overlap(x, 0.0) * (eps * x).sin() / x
                }
            };
            2.0 / PI * adaptive_simpson(f, 0.0, width, &AdaptiveConfig::default())?
        }
    };
    Ok((1.0 - inside).max(0.0))
}

/// `2/(π c √L)`: bound on `δ` for a top hat at `ε = c/√L`.
pub fn momentum_bound(length: f64, c: f64) -> f64 {
    2.0 / (PI * c * length.sqrt())
}

/// Momentum density `μ(p) = |ψ̃(p)|²`.
pub fn momentum_density(w: &WeightState, p: f64) -> f64 {
    match w {
        WeightState::TopHat { half_width: l } => {
            if p == 0.0 {
                l / PI
            } else {
                (p * l).sin().powi(2) / (PI * l * p * p)
            }
        }
        _ => {
            let (lo, hi) = w.support();
            let n = 4000;
            let re = simpson(|x| w.wavefunction(x) * (p * x).cos(), lo, hi, n);
            let im = simpson(|x| w.wavefunction(x) * (p * x).sin(), lo, hi, n);
            (re * re + im * im) / (2.0 * PI)
        }
    }
}

fn energies(h: &Observable) -> Result<Vec<f64>> {
    h.energies_if_diagonal(ENERGY_BASIS_TOL)
}

/// Choi matrix of `ρ ↦ Σ_K K ρ K†` with each element damped by the weight overlap:
/// `(K_ab ρ_bc K*_dc) · overlap(E_b − E_a, E_c − E_d)`.
fn damped_choi(kraus: &[ComplexMatrix], e: &[f64], k: WeightKernel<'_>) -> Result<ChoiMatrix> {
    let d = e.len();
    let mut j = ComplexMatrix::zeros(d * d, d * d);
    for op in kraus {
        check_same_dim(op.rows(), d, "Kraus operator vs Hamiltonian")?;
        for b in 0..d {
            for a in 0..d {
                let kab = op[(a, b)];
                if kab == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    for dd in 0..d {
                        let kdc = op[(dd, c)];
                        if kdc == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let w = k.overlap(e[b] - e[a], e[c] - e[dd]);
                        j[(b * d + a, c * d + dd)] += kab * kdc.conj() * w;
                    }
                }
            }
        }
    }
    ChoiMatrix::new(d, d, j)
}

/// Channel implemented by the dilation when the energy change is paid from a weight in
/// state `w`: `Tr_zw[Ṽ (ρ ⊗ ρ_z ⊗ ρ_w) Ṽ†]`, `Ṽ = Σ V_{ac,bd} |a⟩⟨b| ⊗ |c⟩⟨d| ⊗ Γ_{E_b−E_a}`.
///
/// `H_t` must be diagonal; its diagonal gives the energies `E_a`.
pub fn explicit_channel(dil: &Dilation, h_t: &Observable, w: &WeightState) -> Result<ChoiMatrix> {
    let e = energies(h_t)?;
    check_same_dim(dil.dims().0, e.len(), "dilation target vs Hamiltonian")?;
    damped_choi(&dil.kraus_ops(None)?, &e, w.kernel())
}

/// The explicit-battery version of outcome `i` of a dilated measurement (CP, not TP).
pub fn explicit_outcome(md: &MeasurementDilation, i: usize, h_t: &Observable, w: &WeightState) -> Result<ChoiMatrix> {
    let e = energies(h_t)?;
    damped_choi(md.outcome_map(i)?.kraus(), &e, w.kernel())
}

/// Probability and conditional weight displacement of one outcome with an explicit weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitConditional {
    pub probability: f64,
    /// `⟨x̂⟩` of the weight given the outcome.
    pub work: f64,
}

/// `p = Σ K_ab ρ_bc K*_ac overlap(E_b−E_a, E_c−E_a)` and
/// `W = (1/p) Σ K_ab ρ_bc K*_ac x_moment(E_b−E_a, E_c−E_a)` for one outcome's Kraus set.
pub fn conditional_apply_work_kraus(
    fragment: &CpMap,
    index: usize,
    rho_t: &DensityOperator,
    h_t: &Observable,
    w: &WeightState,
) -> Result<ExplicitConditional> {
    let e = energies(h_t)?;
    let d = e.len();
    check_same_dim(rho_t.dim(), d, "explicit conditional work")?;
    check_same_dim(fragment.dim_in(), d, "explicit conditional work")?;
    let k = w.kernel();
    let rho = rho_t.matrix();
    let mut p = 0.0;
    let mut moment = 0.0;
    for op in fragment.kraus() {
        for a in 0..d {
            for b in 0..d {
                let kab = op[(a, b)];
                if kab == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    let term = kab * rho[(b, c)] * op[(a, c)].conj();
                    if term == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let (x, y) = (e[b] - e[a], e[c] - e[a]);
                    p += term.re * k.overlap(x, y);
                    moment += term.re * k.x_moment(x, y);
                }
            }
        }
    }
    if p <= P_FLOOR {
        return Err(Error::ProbabilityBelowFloor { index, probability: p });
    }
    Ok(ExplicitConditional {
        probability: p,
        work: moment / p,
    })
}

/// Conditional work of applying a dilated measurement, evaluated with an explicit weight.
pub fn conditional_apply_work_explicit(
    md: &MeasurementDilation,
    i: usize,
    rho_t: &DensityOperator,
    h_t: &Observable,
    w: &WeightState,
) -> Result<ExplicitConditional> {
    conditional_apply_work_kraus(&md.outcome_map(i)?, i, rho_t, h_t, w)
}

/// Explicit conditional apply work plus the reversible reset `F(σ_{t,i}) − F(ρ_t)`,
/// with `σ_{t,i}` the post-measurement state under the explicit battery.
pub fn conditional_total_work_explicit(
    md: &MeasurementDilation,
    i: usize,
    rho_t: &DensityOperator,
    h_t: &Observable,
    ctx: ThermalContext,
    w: &WeightState,
) -> Result<f64> {
    let cond = conditional_apply_work_explicit(md, i, rho_t, h_t, w)?;
    let post = explicit_outcome(md, i, h_t, w)?.apply(rho_t.matrix())?;
    let sigma = post.scale(1.0 / cond.probability);
    let t = ctx.temperature();
    let f = |m: &ComplexMatrix| -> Result<f64> {
        Ok(h_t.matrix().trace_product(m).re - t * entropy_from_eigenvalues(&psd_eigenvalues(m)?))
    };
    Ok(cond.work + f(&sigma)? - f(rho_t.matrix())?)
}

/// `−(3/(8 p_i)) Σ_bc (M_i)_cb |E_b − E_c| ρ_bc`: the extra conditional work a
/// triangular weight produces relative to a top hat.
pub fn triangular_anomaly(
    povm_element: &ComplexMatrix,
    rho_t: &DensityOperator,
    h_t: &Observable,
    probability: f64,
) -> Result<f64> {
    let e = energies(h_t)?;
    let d = e.len();
    check_same_dim(povm_element.rows(), d, "POVM element")?;
    check_same_dim(rho_t.dim(), d, "anomaly state")?;
    let rho = rho_t.matrix();
    let mut s = Complex64::new(0.0, 0.0);
    for b in 0..d {
        for c in 0..d {
            s += povm_element[(c, b)] * (e[b] - e[c]).abs() * rho[(b, c)];
        }
    }
    Ok(-0.375 * s.re / probability)
}

/// Trace-distance gap between the explicit-battery and implicit channels, maximised
/// over the probe states of [`channel_distance`].
pub fn explicit_channel_distance(dil: &Dilation, h_t: &Observable, w: &WeightState) -> Result<f64> {
    let explicit = explicit_channel(dil, h_t, w)?;
    let implicit = dil.channel()?;
    channel_distance(
        dil.dims().0,
        |r| Ok(DensityOperator::from_matrix_unchecked(explicit.apply(r.matrix())?)),
        |r| implicit.apply(r),
    )
}

/// A system-bath unitary extended to act on the weight,
/// `Ũ = Σ U_ij |i⟩⟨j| ⊗ Γ_{E_j−E_i}`.
#[derive(Debug, Clone)]
pub struct ExplicitProtocol {
    u: UnitaryOperator,
    energies: Vec<f64>,
}

pub fn explicit_protocol_unitary(u: &UnitaryOperator, h_sb: &Observable) -> Result<ExplicitProtocol> {
    let energies = energies(h_sb)?;
    check_same_dim(u.dim(), energies.len(), "protocol unitary vs Hamiltonian")?;
    Ok(ExplicitProtocol { u: u.clone(), energies })
}

impl ExplicitProtocol {
    pub fn unitary(&self) -> &UnitaryOperator {
        &self.u
    }

    /// `U(p) = Σ U_ij e^{−i(E_j−E_i)p} |i⟩⟨j|`
    pub fn unitary_at(&self, p: f64) -> ComplexMatrix {
        let e = &self.energies;
        let u = self.u.matrix();
        ComplexMatrix::from_fn(u.rows(), u.cols(), |i, j| u[(i, j)] * Complex64::from_polar(1.0, -(e[j] - e[i]) * p))
    }

    /// `U ρ U†`, the implicit-battery result.
    pub fn apply_implicit(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        self.u.conjugate(rho)
    }

    /// `∫ μ(p) U(p) ρ U(p)† dp`, evaluated exactly through the overlap kernel:
    /// element `(i,k)` is `Σ U_ij ρ_jl U*_kl · overlap((E_j−E_i) − (E_l−E_k), 0)`.
    pub fn apply_kernel(&self, rho: &DensityOperator, w: &WeightState) -> Result<DensityOperator> {
        check_same_dim(rho.dim(), self.u.dim(), "protocol input")?;
        let k = w.kernel();
        let e = &self.energies;
        let u = self.u.matrix();
        let r = rho.matrix();
        let n = e.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for kk in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let uij = u[(i, j)];
                    if uij == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for l in 0..n {
                        let term = uij * r[(j, l)] * u[(kk, l)].conj();
                        if term == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        acc += term * k.overlap((e[j] - e[i]) - (e[l] - e[kk]), 0.0);
                    }
                }
                out[(i, kk)] = acc;
            }
        }
        Ok(DensityOperator::from_matrix_unchecked(out))
    }

    /// The same mixture by Simpson quadrature over `p ∈ [−p_max, p_max]` with
    /// `intervals` intervals, renormalised by the captured momentum mass.
    pub fn apply_quadrature(
        &self,
        rho: &DensityOperator,
        w: &WeightState,
        p_max: f64,
        intervals: usize,
    ) -> Result<DensityOperator> {
        check_same_dim(rho.dim(), self.u.dim(), "protocol input")?;
        let n = (intervals.max(2) + 1) & !1;
        let h = 2.0 * p_max / n as f64;
        let dim = rho.dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        let mut mass = 0.0;
        for s in 0..=n {
            let p = -p_max + s as f64 * h;
            let coef = if s == 0 || s == n {
                1.0
            } else if s % 2 == 1 {
                4.0
            } else {
                2.0
            } * h
                / 3.0;
            let m = momentum_density(w, p) * coef;
            mass += m;
            acc = &acc + &self.unitary_at(p).sandwich(rho.matrix()).scale(m);
        }
        Ok(DensityOperator::from_matrix_unchecked(acc.scale(1.0 / mass)))
    }

    /// `δ + 2ε‖H‖`: first-order bound on the trace distance to `U ρ U†`.
    pub fn distance_bound(&self, w: &WeightState, eps: f64) -> Result<f64> {
        let norm = self.energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        Ok(momentum_concentration(w, eps)? + 2.0 * eps * norm)
    }

    /// Trace distance between the explicit and implicit outputs.
    pub fn distance(&self, rho: &DensityOperator, w: &WeightState) -> Result<f64> {
        trace_distance(&self.apply_kernel(rho, w)?, &self.apply_implicit(rho)?)
    }
}

/// Explicit-battery version of a channel given as a dilation, in Kraus form.
pub fn explicit_kraus_channel(dil: &Dilation, h_t: &Observable, w: &WeightState) -> Result<KrausChannel> {
    explicit_channel(dil, h_t, w)?.to_channel()
}
