//! One function per experiment: payload in, [`Outcome`] out. Nothing here
//! touches the filesystem.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::de::DeserializeOwned;

use virlab_core::ch::{
    ch1_residual, classify, conserved_quantities, evolve_observed, hopf_characteristics_grid, hopf_shock_time, rhs,
    CHParams, VelocityState,
};
use virlab_core::discrete::{
    build_sequence, check_inverse_invariance, discrete_velocity, el2_residual, hs_simple_constant,
    hs_simple_constant_by_bisection, hs_simple_residual, hs_simple_step, hs_simple_trajectory, hs_trajectory,
    stationarity_residual, DiffeoSequence, LagrangianDensityV,
};
use virlab_core::mv::{
    continuous_limit, energy, log_log_slope, momentum, mv_trajectory, solve_omega, BodyTensor, RotationMatrix,
    SkewMatrix,
};
use virlab_core::par;
use virlab_core::random::{substream, trig_diffeo, trig_field, FieldSpec, SeededRng};
use virlab_core::virasoro::{
    bott_cocycle, gelfand_fuchs_bracket, group_inverse, group_product, h1_inner, inertia_apply, pairing,
};
use virlab_core::{
    CircleDiffeo, GridConfig, MetricParams, PeriodicFunction, VirasoroAlgebraElement, VirasoroElement,
};

use crate::error::{module, CliError, CliResult};
use crate::output::{Cell, Outcome, Table, Verdict};
use crate::payloads::{
    ChEvolve, Experiment, HopfOracle, HsSimple, HsStep, InvarianceCheck, MvLimit, MvRun, Plan, VirCheck,
};

pub fn execute(plan: &Plan, seed: u64) -> CliResult<Outcome> {
    match plan {
        Plan::VirCheck(p) => vir_check(p, seed),
        Plan::ChEvolve(p) => ch_evolve(p, seed),
        Plan::HopfOracle(p) => hopf_oracle(p, seed),
        Plan::MvRun(p) => mv_run(p, seed),
        Plan::MvLimit(p) => mv_limit(p, seed),
        Plan::HsStep(p) => hs_step(p, seed),
        Plan::HsSimple(p) => hs_simple(p, seed),
        Plan::InvarianceCheck(p) => invariance_check(p, seed),
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn column_max(rows: &[Vec<f64>], c: usize) -> f64 {
    max_of(rows.iter().map(|r| r[c]))
}

fn grid(n: usize, name: &'static str) -> CliResult<GridConfig> {
    GridConfig::new(n).map_err(module(name))
}

/// Matrices arrive as row arrays and are checked by the core types.
fn matrix<T: DeserializeOwned>(rows: &[Vec<f64>], field: &str) -> CliResult<T> {
    serde_json::from_value(serde_json::json!(rows))
        .map_err(|e| CliError::DescriptorInvalid(format!("{field}: {e}")))
}

fn vir_check(p: &VirCheck, seed: u64) -> CliResult<Outcome> {
    let name = Experiment::VirCheck.name();
    let g = grid(p.n, name)?;
    let metrics: Vec<MetricParams> = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 0.5)]
        .iter()
        .map(|&(a, b)| MetricParams::new(a, b).expect("fixed metrics are valid"))
        .collect();
    let element = |r: &mut SeededRng| {
        let f = trig_diffeo(r, g, p.modes, p.amplitude, 0.5, true);
        VirasoroElement::new(f, r.random_range(-1.0..1.0))
    };
    let field = |r: &mut SeededRng, zero_mean: bool| {
        let spec = FieldSpec {
            modes: p.algebra_modes,
            amplitude: p.amplitude,
            zero_mean,
        };
        trig_field(r, g, spec)
    };
    let rows = par::try_map_tasks(p.trials, |i| -> virlab_core::Result<Vec<f64>> {
        let mut r = substream(seed, i as u64);
        let (x, y, z) = (element(&mut r), element(&mut r), element(&mut r));
        let left = group_product(&group_product(&x, &y)?, &z)?;
        let right = group_product(&x, &group_product(&y, &z)?)?;
        let cocycle = bott_cocycle(&x.f, &y.f)? + bott_cocycle(&x.f.compose(&y.f)?, &z.f)?
            - bott_cocycle(&x.f, &y.f.compose(&z.f)?)?
            - bott_cocycle(&y.f, &z.f)?;
        let inverse = group_product(&x, &group_inverse(&x)?)?.distance(&VirasoroElement::identity(g));

        let alg = |r: &mut SeededRng| {
            let v = field(r, false);
            VirasoroAlgebraElement::new(v, r.random_range(-1.0..1.0))
        };
        let (a, b, c) = (alg(&mut r), alg(&mut r), alg(&mut r));
        let br = |u: &VirasoroAlgebraElement, w: &VirasoroAlgebraElement| gelfand_fuchs_bracket(u, w);
        let ab = br(&a, &b)?;
        let ba = br(&b, &a)?;
        let anti_v = ab.v.add(&ba.v).sup_norm();
        let anti_c = (ab.a + ba.a).abs();
        let t1 = br(&a, &br(&b, &c)?)?;
        let t2 = br(&b, &br(&c, &a)?)?;
        let t3 = br(&c, &br(&a, &b)?)?;
        let jac_v = t1.v.add(&t2.v).add(&t3.v).sup_norm();
        let jac_c = (t1.a + t2.a + t3.a).abs();

        let mut metric = 0.0_f64;
        for m in &metrics {
            let zero_mean = m.alpha() == 0.0;
            let xi = VirasoroAlgebraElement::new(field(&mut r, zero_mean), r.random_range(-1.0..1.0));
            let eta = VirasoroAlgebraElement::new(field(&mut r, zero_mean), r.random_range(-1.0..1.0));
            let lhs = h1_inner(&xi, &eta, *m)?;
            let rhs = pairing(&inertia_apply(&xi, *m), &eta)?;
            metric = metric.max((lhs - rhs).abs());
        }
        Ok(vec![
            left.f.distance(&right.f),
            (left.central - right.central).abs(),
            cocycle.abs(),
            inverse,
            anti_v,
            anti_c,
            jac_v,
            jac_c,
            metric,
        ])
    })
    .map_err(module(name))?;

    let sin = VirasoroAlgebraElement::new(PeriodicFunction::from_fn(g, f64::sin), 0.0);
    let cos = VirasoroAlgebraElement::new(PeriodicFunction::from_fn(g, f64::cos), 0.0);
    let sc = gelfand_fuchs_bracket(&sin, &cos).map_err(module(name))?;
    let sin_cos_central = (sc.a + PI).abs();

    let columns = [
        "associativity_f",
        "associativity_F",
        "cocycle_identity",
        "inverse",
        "antisymmetry_vector",
        "antisymmetry_central",
        "jacobi_vector",
        "jacobi_central",
        "metric_compatibility",
    ];
    let mut table = Table::new(std::iter::once("trial").chain(columns));
    for (i, row) in rows.iter().enumerate() {
        table.push(std::iter::once(Cell::from(i)).chain(row.iter().map(|&v| Cell::from(v))).collect());
    }
    let mut out = Outcome::new(table);
    out.note("n", p.n);
    out.note("trials", p.trials);
    for (c, col) in columns.iter().enumerate() {
        out.note(&format!("max_{col}"), column_max(&rows, c));
    }
    out.note("sin_cos_central", sc.a);
    let tolerances = [
        p.group_tolerance,
        p.group_tolerance,
        p.group_tolerance,
        p.inverse_tolerance,
        p.vector_tolerance,
        p.central_tolerance,
        p.vector_tolerance,
        p.central_tolerance,
        p.metric_tolerance,
    ];
    for (c, col) in columns.iter().enumerate() {
        out.verdicts.push(Verdict::below(col, column_max(&rows, c), tolerances[c]));
    }
    out.verdicts.push(Verdict::below("sin_cos_central_plus_pi", sin_cos_central, 1e-10));
    Ok(out)
}

fn ch_evolve(p: &ChEvolve, seed: u64) -> CliResult<Outcome> {
    let name = Experiment::ChEvolve.name();
    let err = module(name);
    let params = p.params;
    let s0 = VelocityState::new(p.v0.build(seed, 0).map_err(&err)?, 0.0);
    let c0 = conserved_quantities(&s0, params);
    let mut table = Table::new(["step", "t", "momentum", "energy", "sup_norm"]);
    let row = |k: usize, s: &VelocityState, c: virlab_core::ch::Conserved| {
        vec![k.into(), s.t.into(), c.momentum.into(), c.energy.into(), s.v.sup_norm().into()]
    };
    table.push(row(0, &s0, c0));
    let (mut dm, mut de) = (0.0_f64, 0.0_f64);
    let last = evolve_observed(&s0, params, p.dt, p.steps, |k, s| {
        let c = conserved_quantities(s, params);
        dm = dm.max((c.momentum - c0.momentum).abs());
        de = de.max((c.energy - c0.energy).abs());
        if k % p.record_every == 0 || k == p.steps {
            table.push(row(k, s, c));
        }
    })
    .map_err(&err)?;

    let g = s0.v.grid();
    let zero_mean = params.alpha() == 0.0;
    let residuals = par::try_map_tasks(p.residual_trials, |i| -> virlab_core::Result<f64> {
        let spec = FieldSpec {
            zero_mean,
            ..FieldSpec::default()
        };
        let v = trig_field(&mut substream(seed, 1 + i as u64), g, spec);
        let vt = rhs(&VelocityState::new(v.clone(), 0.0), params)?;
        Ok(ch1_residual(&v, &vt, params).sup_norm())
    })
    .map_err(&err)?;

    let mut out = Outcome::new(table);
    out.note("class", classify(params).name());
    out.note("t_final", last.t);
    out.note("momentum_drift", dm);
    out.note("energy_drift", de);
    out.note("final_sup_norm", last.v.sup_norm());
    out.verdicts.push(Verdict::below("momentum_drift", dm, p.tolerance));
    out.verdicts.push(Verdict::below("energy_drift", de, p.tolerance));
    if !residuals.is_empty() {
        let worst = max_of(residuals);
        out.note("max_equation_residual", worst);
        out.verdicts.push(Verdict::below("equation_residual", worst, p.residual_tolerance));
    }
    Ok(out)
}

fn hopf_oracle(p: &HopfOracle, seed: u64) -> CliResult<Outcome> {
    let name = Experiment::HopfOracle.name();
    let err = module(name);
    let v0 = p.v0.build(seed, 0).map_err(&err)?;
    let t_shock = hopf_shock_time(&v0);
    if !t_shock.is_finite() {
        return Err(CliError::DescriptorInvalid(
            "v0: a constant field never steepens, there is no shock time to scale".into(),
        ));
    }
    let t = p.fraction * t_shock;
    let steps = (t / p.dt).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let s0 = VelocityState::new(v0.clone(), 0.0);
    let mut recorded = vec![(0, s0.clone())];
    evolve_observed(&s0, CHParams::hopf(), dt, steps, |k, s| {
        if k % p.record_every == 0 || k == steps {
            recorded.push((k, s.clone()));
        }
    })
    .map_err(&err)?;
    let errors = par::try_map_tasks(recorded.len(), |i| {
        let (_, s) = &recorded[i];
        Ok::<f64, virlab_core::Error>(s.v.sub(&hopf_characteristics_grid(&v0, s.t)?).sup_norm())
    })
    .map_err(&err)?;

    let mut table = Table::new(["step", "t", "sup_error", "sup_norm"]);
    for ((k, s), e) in recorded.iter().zip(&errors) {
        table.push(vec![(*k).into(), s.t.into(), (*e).into(), s.v.sup_norm().into()]);
    }
    let final_error = *errors.last().expect("final state recorded");
    let mut out = Outcome::new(table);
    out.note("t_shock", t_shock);
    out.note("t_final", t);
    out.note("dt", dt);
    out.note("final_sup_error", final_error);
    out.verdicts.push(Verdict::below("sup_error", final_error, p.tolerance));
    Ok(out)
}

fn random_body(r: &mut SeededRng, n: usize) -> virlab_core::Result<BodyTensor> {
    let diag: Vec<f64> = (0..n).map(|_| r.random_range(0.5..3.0)).collect();
    let q = RotationMatrix::cayley(&SkewMatrix::random(r, n, 1.0));
    let j = q.matrix() * DMatrix::from_diagonal(&DVector::from_vec(diag)) * q.matrix().transpose();
    BodyTensor::new((&j + j.transpose()) * 0.5)
}

fn mv_run(p: &MvRun, seed: u64) -> CliResult<Outcome> {
    let name = Experiment::MvRun.name();
    let err = module(name);
    let j: BodyTensor = matrix(&p.j, "J")?;
    let n = j.dim();
    let omega0 = match &p.omega0 {
        Some(w) => matrix(w, "omega0")?,
        None => RotationMatrix::cayley(&SkewMatrix::random(&mut substream(seed, 0), n, p.omega0_scale)),
    };
    let traj = mv_trajectory(&omega0, &j, p.steps).map_err(&err)?;
    let s0 = traj[0].0.spectrum();

    let mut header = vec!["step".to_string()];
    header.extend((1..=n).map(|i| format!("spectrum_{i}")));
    header.extend(["spectrum_drift", "orthogonality", "energy"].map(String::from));
    let mut table = Table::new(header);
    let (mut spec_drift, mut orth) = (0.0_f64, 0.0_f64);
    for (k, (m, w)) in traj.iter().enumerate() {
        let s = m.spectrum();
        let d = max_of(s.iter().zip(&s0).map(|(a, b)| (a - b).abs()));
        let o = w.orthogonality_residual();
        spec_drift = spec_drift.max(d);
        orth = orth.max(o);
        if k % p.record_every == 0 || k == p.steps {
            let mut row: Vec<Cell> = vec![k.into()];
            row.extend(s.iter().map(|&v| Cell::from(v)));
            row.extend([d, o, energy(m, &j)].map(Cell::from));
            table.push(row);
        }
    }

    let roundtrip = par::map_tasks(p.roundtrip_trials, |i| {
        let mut r = substream(seed, 1 + i as u64);
        let dim = 2 + i % (p.roundtrip_max_n - 1);
        let mut attempt = || -> virlab_core::Result<f64> {
            let body = random_body(&mut r, dim)?;
            let w = RotationMatrix::cayley(&SkewMatrix::random(&mut r, dim, p.roundtrip_scale));
            let back = solve_omega(&momentum(&w, &body)?, &body)?;
            Ok((back.matrix() - w.matrix()).norm())
        };
        attempt().unwrap_or(f64::INFINITY)
    });
    let failures = roundtrip.iter().filter(|e| !e.is_finite()).count();

    let mut out = Outcome::new(table);
    out.note("dim", n);
    out.note("spectrum_drift", spec_drift);
    out.note("orthogonality", orth);
    out.note("initial_spectrum", &s0);
    out.verdicts.push(Verdict::below("spectrum_drift", spec_drift, p.spectrum_tolerance));
    out.verdicts.push(Verdict::below("orthogonality", orth, p.orthogonality_tolerance));
    if !roundtrip.is_empty() {
        let worst = max_of(roundtrip.iter().copied());
        out.note("roundtrip_max_error", worst);
        out.note("roundtrip_solver_failures", failures);
        out.verdicts.push(Verdict::below("roundtrip_error", worst, p.roundtrip_tolerance));
    }
    Ok(out)
}

fn mv_limit(p: &MvLimit, seed: u64) -> CliResult<Outcome> {
    let name = Experiment::MvLimit.name();
    let j: BodyTensor = matrix(&p.j, "J")?;
    let m0 = match &p.m0 {
        Some(m) => matrix(m, "M0")?,
        None => SkewMatrix::random(&mut substream(seed, 0), j.dim(), p.m0_scale),
    };
    let points = continuous_limit(&m0, &j, p.t_final, &p.eps, p.dt_for_limit).map_err(module(name))?;
    let slope = log_log_slope(&points);
    let mut table = Table::new(["eps", "steps", "error"]);
    for pt in &points {
        table.push(vec![pt.eps.into(), pt.steps.into(), pt.error.into()]);
    }
    let mut out = Outcome::new(table);
    out.note("slope", slope);
    out.note("points", &points);
    out.verdicts.push(Verdict::at_least("log_log_slope", slope, p.min_slope));
    Ok(out)
}

/// Adds `amplitude sin 2x` to the displacement of the middle element.
fn bend(seq: &DiffeoSequence, amplitude: f64) -> virlab_core::Result<DiffeoSequence> {
    let mut xs = seq.elements().to_vec();
    let mid = xs.len() / 2;
    let g = xs[mid].f.grid();
    let u = xs[mid].f.displacement().add(&PeriodicFunction::from_fn(g, |x| amplitude * (2.0 * x).sin()));
    xs[mid] = VirasoroElement::new(CircleDiffeo::from_displacement(u)?, xs[mid].central);
    DiffeoSequence::new(xs)
}

fn worst_stationarity(vd: &LagrangianDensityV, seq: &DiffeoSequence, dirs: usize, seed: u64) -> virlab_core::Result<f64> {
    (1..seq.len() - 1).try_fold(0.0_f64, |acc, k| Ok(acc.max(stationarity_residual(vd, seq, k, dirs, seed)?)))
}

fn hs_step(p: &HsStep, seed: u64) -> CliResult<Outcome> {
    let name = Experiment::HsStep.name();
    let err = module(name);
    let w1 = p.omega0.build(seed, 0).map_err(&err)?;
    let g = w1.grid();
    let (ws, diags) = hs_trajectory(&w1, p.big_omega, p.mode, p.rotation, p.steps).map_err(&err)?;
    let seq = build_sequence(&VirasoroElement::identity(g), &ws, p.big_omega).map_err(&err)?;
    let vd = LagrangianDensityV::sqrt();

    let mut table = Table::new(["step", "el2_residual", "min_omega_prime", "C", "periodicity_defect", "stationarity"]);
    let (mut el2, mut stat) = (0.0_f64, 0.0_f64);
    for k in 1..=p.steps {
        let e = el2_residual(&ws[k - 1], &ws[k], p.big_omega, p.big_omega).map_err(&err)?;
        let s = stationarity_residual(&vd, &seq, k, p.stationarity_directions, seed).map_err(&err)?;
        el2 = el2.max(e);
        stat = stat.max(s);
        let d = &diags[k - 1];
        table.push(vec![
            k.into(),
            e.into(),
            ws[k].derivative().min().into(),
            d.c.into(),
            d.defect.into(),
            s.into(),
        ]);
    }
    let realized: Vec<f64> = (1..seq.len())
        .map(|l| discrete_velocity(&seq, l).map(|v| v.big_omega))
        .collect::<virlab_core::Result<_>>()
        .map_err(&err)?;
    let hi = realized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = realized.iter().copied().fold(f64::INFINITY, f64::min);

    let mut out = Outcome::new(table);
    out.note("mode", p.mode);
    out.note("constants", diags.iter().map(|d| d.c).collect::<Vec<_>>());
    out.note("omega_spread", hi - lo);
    out.note("max_el2_residual", el2);
    out.note("max_stationarity", stat);
    out.verdicts.push(Verdict::below("stationarity", stat, p.stationarity_tolerance));
    out.verdicts.push(Verdict::below("el2_residual", el2, p.el2_tolerance));
    out.verdicts.push(Verdict::below("omega_spread", hi - lo, p.omega_spread_tolerance));
    if p.negative_control {
        let bent = bend(&seq, p.negative_amplitude).map_err(&err)?;
        let worst = worst_stationarity(&vd, &bent, p.stationarity_directions, seed).map_err(&err)?;
        out.note("negative_control_stationarity", worst);
        out.verdicts.push(Verdict::above("negative_control", worst, p.negative_threshold));
    }
    Ok(out)
}

fn hs_simple(p: &HsSimple, seed: u64) -> CliResult<Outcome> {
    let name = Experiment::HsSimple.name();
    let err = module(name);
    let w1 = p.omega0.build(seed, 0).map_err(&err)?;
    let g = w1.grid();
    let ws = hs_simple_trajectory(&w1, p.rotation, p.steps).map_err(&err)?;
    let seq = build_sequence(&VirasoroElement::identity(g), &ws, 0.0).map_err(&err)?;
    let rev = seq.reversed();
    let vd = LagrangianDensityV::sqrt();

    let mut table = Table::new(["step", "residual", "min_omega_prime", "c", "stationarity", "stationarity_reversed"]);
    let (mut res, mut stat, mut stat_rev) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 1..=p.steps {
        let c = hs_simple_constant(&ws[k - 1]);
        let r = hs_simple_residual(&ws[k - 1], &ws[k], c).map_err(&err)?;
        let s = stationarity_residual(&vd, &seq, k, p.stationarity_directions, seed).map_err(&err)?;
        let sr = stationarity_residual(&vd, &rev, k, p.stationarity_directions, seed).map_err(&err)?;
        res = res.max(r);
        stat = stat.max(s);
        stat_rev = stat_rev.max(sr);
        table.push(vec![k.into(), r.into(), ws[k].derivative().min().into(), c.into(), s.into(), sr.into()]);
    }

    let root_find = par::try_map_tasks(p.root_find_trials, |i| -> virlab_core::Result<f64> {
        let f = trig_diffeo(&mut substream(seed, 1 + i as u64), g, 8, 0.3, 0.5, false);
        Ok((hs_simple_constant(&f) - hs_simple_constant_by_bisection(&f)?).abs())
    })
    .map_err(&err)?;

    let from_id = hs_simple_step(&CircleDiffeo::identity(g), p.rotation).map_err(&err)?;
    let u = from_id.displacement();
    let non_rigid = u.max() - u.min();

    let mut out = Outcome::new(table);
    out.note("max_residual", res);
    out.note("max_stationarity", stat);
    out.note("max_stationarity_reversed", stat_rev);
    out.note("identity_step_shift", u.mean());
    out.note("identity_step_non_rigid", non_rigid);
    out.verdicts.push(Verdict::below("residual", res, p.residual_tolerance));
    out.verdicts.push(Verdict::below("stationarity", stat, p.stationarity_tolerance));
    out.verdicts.push(Verdict::below("stationarity_reversed", stat_rev, p.stationarity_tolerance));
    if !root_find.is_empty() {
        let worst = max_of(root_find);
        out.note("root_find_max_difference", worst);
        out.verdicts.push(Verdict::below("closed_form_vs_root_find", worst, p.root_find_tolerance));
    }
    out.verdicts.push(Verdict::below("identity_is_rotation", non_rigid, p.identity_tolerance));
    if p.negative_control {
        let bent = bend(&seq, p.negative_amplitude).map_err(&err)?;
        let worst = worst_stationarity(&vd, &bent, p.stationarity_directions, seed).map_err(&err)?;
        out.note("negative_control_stationarity", worst);
        out.verdicts.push(Verdict::above("negative_control", worst, p.negative_threshold));
    }
    Ok(out)
}

fn invariance_check(p: &InvarianceCheck, seed: u64) -> CliResult<Outcome> {
    let name = Experiment::InvarianceCheck.name();
    let err = module(name);
    let vd = LagrangianDensityV::by_name(&p.density).map_err(&err)?;
    let g = grid(p.n, name)?;
    let report = check_inverse_invariance(&vd, g, p.trials, seed).map_err(&err)?;
    let mut table = Table::new(["trial", "defect"]);
    for (i, d) in report.trial_defects.iter().enumerate() {
        table.push(vec![i.into(), (*d).into()]);
    }
    let expected = p.expect_invariant.unwrap_or(true);
    let mut out = Outcome::new(table);
    out.note("density", &p.density);
    out.note("h_defect", report.h_defect);
    out.note("cond_u_defect", report.cond_u_defect);
    out.note("invariant", report.invariant);
    out.note("expected_invariant", expected);
    out.verdicts.push(Verdict::holds("matches_expectation", report.invariant == expected));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payloads::plan;
    use virlab_core::ch::OrbitClass;

    #[test]
    fn matrices_are_checked_by_core_types() {
        let bad: CliResult<BodyTensor> = matrix(&[vec![1.0, 2.0], vec![0.0, 1.0]], "J");
        assert!(matches!(bad, Err(CliError::DescriptorInvalid(m)) if m.starts_with("J:")));
    }

    #[test]
    fn constant_hopf_field_is_rejected() {
        let p = plan(Experiment::HopfOracle, &serde_json::json!({"v0": {"n": 32, "mean": 0.5}})).unwrap();
        assert!(matches!(execute(&p, 0), Err(CliError::DescriptorInvalid(_))));
    }

    #[test]
    fn square_density_is_reported_as_violation() {
        let p = plan(
            Experiment::InvarianceCheck,
            &serde_json::json!({"density": "square", "n": 64, "trials": 5, "expect_invariant": false}),
        )
        .unwrap();
        let out = execute(&p, 1).unwrap();
        assert_eq!(out.summary["invariant"], serde_json::json!(false));
        assert!(out.passed());
    }

    #[test]
    fn ch_module_errors_carry_context() {
        let p = plan(
            Experiment::ChEvolve,
            &serde_json::json!({"params": {"alpha": 0.0, "beta": 1.0, "b": 0.0}, "v0": {"n": 32, "mean": 1.0}, "steps": 1}),
        )
        .unwrap();
        let e = execute(&p, 0).unwrap_err();
        assert!(e.to_string().starts_with("ch-evolve:"), "{e}");
    }

    #[test]
    fn orbit_class_is_summarized() {
        let p = plan(
            Experiment::ChEvolve,
            &serde_json::json!({"v0": {"n": 32, "sin": [[1, 0.1]]}, "steps": 5, "residual_trials": 2}),
        )
        .unwrap();
        let out = execute(&p, 0).unwrap();
        assert_eq!(out.summary["class"], serde_json::json!(OrbitClass::KdV.name()));
        assert_eq!(out.table.len(), 2);
    }
}
