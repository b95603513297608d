//! One function per subcommand. Each resolves its settings (recording defaults so the
//! config hash covers them), validates, runs, and checks the invariants of the run.

use qtb_core::channels::{
    apply_work, catalytic_evidence, channel_work_benefit, dilate, entropy_reduction, free_energy_gain, is_gibbs_preserving,
    is_unital, work_benefit, work_benefit_oracle, FixedPointConfig, CLASSIFY_TOL,
};
use qtb_core::measure::{
    apply_work_measurement, conditional_table, measurement_dilation, measurement_work_benefit, povm_elements,
};
use qtb_core::optimize::GridConfig;
use qtb_core::postselect::{scaling_experiment, PostSelection, ScalingRow};
use qtb_core::qmath::{DensityOperator, Observable};
use qtb_core::thermo::{swap_protocol, ProtocolTrace, ThermalContext};
use qtb_core::weight::{
    conditional_apply_work_explicit, explicit_channel_distance, explicit_kraus_channel, momentum_concentration,
    triangular_anomaly, WeightState,
};

use crate::config::{
    ChannelBenefit, Classify, ConditionalWork, MeasureBenefit, Mode, PostselectScan, ProtocolSteps, Settings,
    WeightCompare, WeightConverge,
};
use crate::inputs::{hamiltonian, parse_channel, parse_measurement, parse_state, unit_ladder};
use crate::report::{Cell, Table};
use crate::CliError;

/// Tolerance for identities that hold exactly in exact arithmetic.
const IDENTITY_TOL: f64 = 1e-9;
/// Slack for optimizer-based comparisons.
const OPTIMIZER_TOL: f64 = 1e-6;

fn require(problems: &mut Vec<String>, value: &Option<String>, name: &str) {
    if value.is_none() {
        problems.push(format!("{name} is required"));
    }
}

fn finish(problems: Vec<String>) -> Result<(), CliError> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(problems))
    }
}

fn thermal(t: f64) -> Result<ThermalContext, CliError> {
    Ok(ThermalContext::new(t)?)
}

fn violation(msg: String) -> CliError {
    CliError::Invariant(msg)
}

pub fn channel_benefit(s: &mut ChannelBenefit) -> Result<Table, CliError> {
    let mut c = s.common();
    let mut problems = c.problems();
    let (t, seed, opt) = (c.temp(), c.seed(), c.optimizer());
    require(&mut problems, &s.channel, "channel");
    finish(problems)?;
    let mode = *s.mode.get_or_insert(Mode::BatteryPowered);
    let spec = s.channel.clone().unwrap_or_default();
    let channel = parse_channel(&spec, seed)?;
    let d = channel.dim_in();
    if channel.dim_out() != d {
        return Err(CliError::Validation(vec![format!("channel must map d to d, got {d} -> {}", channel.dim_out())]));
    }
    let h = hamiltonian(s.energies.as_deref(), s.hamiltonian.as_deref(), d, Observable::zero)?;
    let ctx = thermal(t)?;
    let best = channel_work_benefit(&channel, &h, ctx, mode.into(), &opt)?;
    let mixed = DensityOperator::maximally_mixed(d);
    let (witness, oracle) = match mode {
        Mode::BatteryPowered => {
            let oracle = if d <= 3 {
                work_benefit_oracle(&channel, ctx, &GridConfig { seed, ..GridConfig::default() })?
            } else {
                f64::NAN
            };
            (t * entropy_reduction(&channel, mixed.matrix())?, oracle)
        }
        Mode::InternalPower => (free_energy_gain(&channel, &h, ctx, mixed.matrix())?, f64::NAN),
    };
    if best.value < witness - IDENTITY_TOL {
        return Err(violation(format!("benefit {} below the I/d witness {witness}", best.value)));
    }
    if oracle > best.value + 2e-3 * t {
        return Err(violation(format!("grid oracle {oracle} exceeds optimizer {}", best.value)));
    }
    let mut table = Table::new("channel,d,T,mode,W,converged,W_oracle,witness_mixed");
    table.push(vec![
        spec.into(),
        d.into(),
        t.into(),
        mode.label().into(),
        best.value.into(),
        best.converged.into(),
        oracle.into(),
        witness.into(),
    ]);
    Ok(table)
}

pub fn measure_benefit(s: &mut MeasureBenefit) -> Result<Table, CliError> {
    let mut c = s.common();
    let mut problems = c.problems();
    let (t, seed, opt) = (c.temp(), c.seed(), c.optimizer());
    require(&mut problems, &s.measurement, "measurement");
    finish(problems)?;
    let mode = *s.mode.get_or_insert(Mode::BatteryPowered);
    let spec = s.measurement.clone().unwrap_or_default();
    let m = parse_measurement(&spec, seed)?;
    let d = m.dim();
    let h = hamiltonian(s.energies.as_deref(), s.hamiltonian.as_deref(), d, Observable::zero)?;
    let ctx = thermal(t)?;
    let best = measurement_work_benefit(&m, &h, ctx, mode.into(), &opt)?;
    let chan = channel_work_benefit(&m.forgetting_channel(), &h, ctx, mode.into(), &opt)?;
    if mode == Mode::BatteryPowered && best.value < chan.value - OPTIMIZER_TOL {
        return Err(violation(format!(
            "measurement benefit {} below its forgetting channel's {}",
            best.value, chan.value
        )));
    }
    let mut table = Table::new("measurement,d,outcomes,T,mode,W,converged,W_channel");
    table.push(vec![
        spec.into(),
        d.into(),
        m.outcome_count().into(),
        t.into(),
        mode.label().into(),
        best.value.into(),
        best.converged.into(),
        chan.value.into(),
    ]);
    Ok(table)
}

pub fn conditional_work(s: &mut ConditionalWork) -> Result<Table, CliError> {
    let mut c = s.common();
    let problems = c.problems();
    let (t, seed) = (c.temp(), c.seed());
    finish(problems)?;
    let mode = *s.mode.get_or_insert(Mode::BatteryPowered);
    let spec = s.measurement.get_or_insert_with(|| "basis2".into()).clone();
    let m = parse_measurement(&spec, seed)?;
    let d = m.dim();
    let rho = parse_state(s.state.get_or_insert_with(|| "mixed".into()), d)?;
    let h = hamiltonian(s.energies.as_deref(), s.hamiltonian.as_deref(), d, unit_ladder)?;
    let ctx = thermal(t)?;
    let rows = conditional_table(&m, &rho, &h, ctx, mode.into())?;
    if mode == Mode::BatteryPowered {
        let avg: f64 = rows
            .iter()
            .filter(|r| r.w_cond_apply.is_finite())
            .map(|r| r.probability * r.w_cond_apply)
            .sum();
        let total = apply_work_measurement(&m, &rho, &h)?;
        if (avg - total).abs() > IDENTITY_TOL {
            return Err(violation(format!("conditional average {avg} differs from apply work {total}")));
        }
    }
    let mut table = Table::new(qtb_core::measure::ConditionalRow::CSV_HEADER);
    for r in rows {
        table.push(vec![
            r.index.into(),
            r.probability.into(),
            r.s_post.into(),
            r.w_cond_apply.into(),
            r.w_cond_total.into(),
        ]);
    }
    Ok(table)
}

pub fn postselect_scan(s: &mut PostselectScan) -> Result<Table, CliError> {
    let mut c = s.common();
    let mut problems = c.problems();
    let (t, seed) = (c.temp(), c.seed());
    let mode = *s.mode.get_or_insert(Mode::BatteryPowered);
    let spec = s.measurement.get_or_insert_with(|| "basis2".into()).clone();
    let success = s.success.get_or_insert_with(|| vec![0]).clone();
    let das = s.da.get_or_insert_with(|| vec![2, 4, 8, 16, 32, 64]).clone();
    if das.is_empty() || das.contains(&0) {
        problems.push("da must list positive ancilla dimensions".into());
    }
    finish(problems)?;
    let m = parse_measurement(&spec, seed)?;
    let h_t = hamiltonian(s.energies.as_deref(), None, m.dim(), Observable::zero)?;
    let ps = PostSelection::new(m, success)?;
    let rows = scaling_experiment(&ps, &h_t, thermal(t)?, &das, mode.into())?;
    if mode == Mode::BatteryPowered {
        if let Some(r) = rows.iter().find(|r| r.w_actual < r.w_bound - OPTIMIZER_TOL) {
            return Err(violation(format!("d_a = {}: work {} below bound {}", r.d_a, r.w_actual, r.w_bound)));
        }
    }
    let mut table = Table::new(ScalingRow::CSV_HEADER);
    for r in rows {
        table.push(vec![r.d_a.into(), r.ln_da.into(), r.w_actual.into(), r.w_bound.into(), r.slope_running.into()]);
    }
    Ok(table)
}

pub fn weight_converge(s: &mut WeightConverge) -> Result<Table, CliError> {
    let mut c = s.common();
    let mut problems = c.problems();
    let seed = c.seed();
    let lengths = s.lengths.get_or_insert_with(|| vec![1e1, 1e2, 1e3, 1e4]).clone();
    let cc = *s.c.get_or_insert(1.0);
    if lengths.is_empty() || lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        problems.push("lengths must be positive and finite".into());
    }
    if !(cc > 0.0 && cc.is_finite()) {
        problems.push(format!("c must be positive, got {cc}"));
    }
    finish(problems)?;
    let channel = parse_channel(s.channel.get_or_insert_with(|| "random(2,2)".into()), seed)?;
    let d = channel.dim_in();
    let h = hamiltonian(s.energies.as_deref(), None, d, unit_ladder)?;
    let dil = dilate(&channel)?;
    let mut table = Table::new("L,trace_distance,delta_bound,eps");
    for l in lengths {
        let w = WeightState::top_hat(l)?;
        let eps = cc / l.sqrt();
        let distance = explicit_channel_distance(&dil, &h, &w)?;
        let bound = momentum_concentration(&w, eps)? + eps;
        table.push(vec![l.into(), distance.into(), bound.into(), eps.into()]);
    }
    Ok(table)
}

pub fn weight_compare(s: &mut WeightCompare) -> Result<Table, CliError> {
    let mut c = s.common();
    let mut problems = c.problems();
    let seed = c.seed();
    let l = *s.length.get_or_insert(1e4);
    if !(l > 0.0 && l.is_finite()) {
        problems.push(format!("length must be positive, got {l}"));
    }
    finish(problems)?;
    let m = parse_measurement(s.measurement.get_or_insert_with(|| "random(2,2,2)".into()), seed)?;
    let d = m.dim();
    let rho = parse_state(s.state.get_or_insert_with(|| "plus".into()), d)?;
    let h = hamiltonian(s.energies.as_deref(), None, d, unit_ladder)?;
    let md = measurement_dilation(&m)?;
    let (top, tri) = (WeightState::top_hat(l)?, WeightState::triangular(l)?);
    for w in [&top, &tri] {
        let explicit = explicit_kraus_channel(&md.dilation, &h, w)?;
        let mut avg = 0.0;
        for i in 0..m.outcome_count() {
            if let Ok(r) = conditional_apply_work_explicit(&md, i, &rho, &h, w) {
                avg += r.probability * r.work;
            }
        }
        let expect = apply_work(&explicit, &rho, &h)?;
        if (avg - expect).abs() > IDENTITY_TOL {
            return Err(violation(format!("explicit conditional average {avg} differs from {expect}")));
        }
    }
    let povm = povm_elements(&m);
    let mut table = Table::new("outcome,W_tophat,W_triangular,correction_formula,abs_err");
    for (i, e) in povm.iter().enumerate() {
        let p = e.matrix().trace_product(rho.matrix()).re;
        let (a, b) = match (
            conditional_apply_work_explicit(&md, i, &rho, &h, &top),
            conditional_apply_work_explicit(&md, i, &rho, &h, &tri),
        ) {
            (Ok(a), Ok(b)) => (a.work, b.work),
            _ => (f64::NAN, f64::NAN),
        };
        let formula = if p > qtb_core::measure::P_FLOOR {
            triangular_anomaly(e.matrix(), &rho, &h, p)?
        } else {
            f64::NAN
        };
        table.push(vec![i.into(), a.into(), b.into(), formula.into(), Cell::Num((b - a - formula).abs())]);
    }
    Ok(table)
}

pub fn protocol_steps(s: &mut ProtocolSteps) -> Result<Table, CliError> {
    let mut c = s.common();
    let mut problems = c.problems();
    let t = c.temp();
    let dim = *s.dim.get_or_insert(2);
    let steps = *s.steps.get_or_insert(64);
    let eta = *s.eta.get_or_insert(1e-6);
    if dim == 0 {
        problems.push("dim must be positive".into());
    }
    if steps == 0 {
        problems.push("steps must be at least 1".into());
    }
    if !(0.0..=1.0).contains(&eta) {
        problems.push(format!("eta must lie in [0, 1], got {eta}"));
    }
    finish(problems)?;
    let init = parse_state(s.initial.get_or_insert_with(|| "basis:0".into()), dim)?.mix_with_identity(eta);
    let fin = parse_state(s.r#final.get_or_insert_with(|| "mixed".into()), dim)?.mix_with_identity(eta);
    let h = hamiltonian(s.energies.as_deref(), None, dim, Observable::zero)?;
    let trace = swap_protocol(&init, &fin, &h, thermal(t)?, steps)?;
    for st in &trace.steps {
        let residual = st.delta_u_system + st.heat + st.work;
        if residual.abs() > IDENTITY_TOL {
            return Err(violation(format!("first law violated at step {}: residual {residual}", st.index)));
        }
    }
    let mut table = Table::new(ProtocolTrace::CSV_HEADER);
    for (step, dw, w, df) in trace.rows() {
        table.push(vec![step.into(), dw.into(), w.into(), df.into()]);
    }
    Ok(table)
}

pub fn classify(s: &mut Classify) -> Result<Table, CliError> {
    let mut c = s.common();
    let mut problems = c.problems();
    let (t, seed, opt) = (c.temp(), c.seed(), c.optimizer());
    require(&mut problems, &s.channel, "channel");
    finish(problems)?;
    let spec = s.channel.clone().unwrap_or_default();
    let channel = parse_channel(&spec, seed)?;
    let d = channel.dim_in();
    if channel.dim_out() != d {
        return Err(CliError::Validation(vec![format!("channel must map d to d, got {d} -> {}", channel.dim_out())]));
    }
    let h = hamiltonian(s.energies.as_deref(), s.hamiltonian.as_deref(), d, unit_ladder)?;
    let ctx = thermal(t)?;
    let unital = is_unital(&channel, CLASSIFY_TOL);
    let gibbs = is_gibbs_preserving(&channel, &h, ctx, CLASSIFY_TOL);
    let evidence = catalytic_evidence(
        &channel,
        &dilate(&channel)?,
        &DensityOperator::maximally_mixed(d),
        &FixedPointConfig::default(),
    )?;
    let w = work_benefit(&channel, ctx, &opt)?.value;
    if w < -IDENTITY_TOL {
        return Err(violation(format!("negative benefit {w}")));
    }
    let mut table =
        Table::new("channel,d,T,unital,gibbs_preserving,catalytic_fixed_point,catalytic_channel_distance,W");
    table.push(vec![
        spec.into(),
        d.into(),
        t.into(),
        unital.into(),
        gibbs.into(),
        evidence.fixed_point.is_some().into(),
        evidence.channel_distance.unwrap_or(f64::NAN).into(),
        w.into(),
    ]);
    Ok(table)
}

/// Runs `f` on the settings after layering the config file, returning the table and
/// the resolved settings as canonical JSON.
pub fn run_with<S: Settings>(
    settings: S,
    f: impl FnOnce(&mut S) -> Result<Table, CliError>,
) -> Result<(Table, String, Option<std::path::PathBuf>), CliError> {
    let mut s = settings.resolve_file()?;
    let table = f(&mut s)?;
    let canonical = serde_json::to_string(&serde_json::to_value(&s).map_err(|e| CliError::Io(e.to_string()))?)
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok((table, canonical, s.output().cloned()))
}
