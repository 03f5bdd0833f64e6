use std::sync::Arc;

use num_complex::Complex64;
use qnls::diagnostics::diagnose;
use qnls::dynamics::{detect_blowup, run, step, RunStatus, SolverConfig, Stepper};
use qnls::grid::{RadialField, RadialGrid};
use qnls::nonlinearity::{CriticalSign, NonlinearityModel, ScalarFamily};

fn gaussian(g: &Arc<RadialGrid>, amp: f64, width: f64, chirp: f64) -> RadialField {
    RadialField::from_fn(g.clone(), |r| Complex64::from_polar(amp * (-(r * r) / (width * width)).exp(), chirp * r * r))
        .unwrap()
}

fn l2_diff(g: &RadialGrid, a: &RadialField, b: &RadialField) -> f64 {
    let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm_sqr()).collect();
    g.integrate(&d).unwrap().sqrt()
}

fn identity_model(sign: CriticalSign, a: f64) -> NonlinearityModel {
    NonlinearityModel::new(3, ScalarFamily::monomial(1.0, 1.0), ScalarFamily::Zero, ScalarFamily::Zero, a, sign).unwrap()
}

#[test]
fn free_step_preserves_mass() {
    let g = Arc::new(RadialGrid::new(3, 20.0, 1024).unwrap());
    let u = gaussian(&g, 1.0, 1.5, 0.0);
    let free = NonlinearityModel::free(3).unwrap();
    let v = step(&u, &free, 1e-2).unwrap();
    let (m0, m1) = (diagnose(&u, &free, 0.0).unwrap().mass, diagnose(&v, &free, 0.0).unwrap().mass);
    assert!((m1 - m0).abs() <= 1e-12 * m0);
}

#[test]
fn step_rejects_poisoned_field_and_bad_dt() {
    let g = Arc::new(RadialGrid::new(3, 10.0, 128).unwrap());
    let free = NonlinearityModel::free(3).unwrap();
    let mut values = vec![Complex64::new(0.1, 0.0); 128];
    values[7] = Complex64::new(0.0, f64::INFINITY);
    assert!(step(&RadialField::from_raw(g.clone(), values), &free, 1e-3).is_err());
    assert!(step(&gaussian(&g, 1.0, 1.0, 0.0), &free, 0.0).is_err());
}

fn advance(u: &RadialField, model: &NonlinearityModel, dt: f64, steps: usize) -> RadialField {
    let mut u = u.clone();
    for _ in 0..steps {
        u = step(&u, model, dt).unwrap();
    }
    u
}

#[test]
fn defocusing_identity_profile_converges_at_second_order() {
    let g = Arc::new(RadialGrid::new(3, 10.0, 512).unwrap());
    let model = identity_model(CriticalSign::Defocusing, 1.0);
    let u0 = gaussian(&g, 1.0, 1.0, 0.0);
    let horizon = 1e-3;
    let reference = advance(&u0, &model, 1e-5, 100);
    let e1 = l2_diff(&g, &advance(&u0, &model, horizon / 2.0, 2), &reference);
    let e2 = l2_diff(&g, &advance(&u0, &model, horizon / 4.0, 4), &reference);
    let ratio = e1 / e2;
    assert!((3.0..5.0).contains(&ratio), "{e1} / {e2} = {ratio}");
}

#[test]
fn free_flow_is_time_reversible() {
    let g = Arc::new(RadialGrid::new(3, 20.0, 1024).unwrap());
    let free = NonlinearityModel::free(3).unwrap();
    let u = gaussian(&g, 1.0, 1.5, 0.3);
    let mut stepper = Stepper::new(&free, g.clone(), 1e-12, 50);
    let fwd = stepper.step_from(u.values(), u.values(), 0.05).unwrap();
    let back = stepper.step_from(&fwd, &fwd, -0.05).unwrap();
    let back = RadialField::from_raw(g.clone(), back);
    assert!(l2_diff(&g, &back, &u) <= 1e-10);
}

#[test]
fn zero_horizon_gives_initial_record() {
    let g = Arc::new(RadialGrid::new(3, 20.0, 256).unwrap());
    let model = identity_model(CriticalSign::Defocusing, 1.0);
    let u0 = gaussian(&g, 0.5, 2.0, 0.0);
    let cfg = SolverConfig { t_end: 0.0, ..SolverConfig::default() };
    let out = run(&u0, &model, &cfg);
    assert_eq!(out.status, RunStatus::Completed);
    assert_eq!(out.series.len(), 1);
    assert_eq!(out.series[0], diagnose(&u0, &model, 0.0).unwrap());
}

#[test]
fn mass_is_conserved_along_a_run() {
    let g = Arc::new(RadialGrid::new(3, 30.0, 1024).unwrap());
    let model = identity_model(CriticalSign::Defocusing, 2.0);
    let u0 = gaussian(&g, 0.6, 2.0, 0.0);
    let cfg = SolverConfig { dt: 1e-3, t_end: 0.5, ..SolverConfig::default() };
    let out = run(&u0, &model, &cfg);
    assert_eq!(out.status, RunStatus::Completed);
    let m0 = out.series[0].mass;
    let budget = out.accepted_steps as f64 * 10.0 * cfg.picard_tol;
    for r in &out.series {
        assert!((r.mass - m0).abs() / m0 <= budget, "t = {}", r.t);
    }
    let times: Vec<f64> = out.series.iter().map(|r| r.t).collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn absorbing_only_model_keeps_energy_to_t20() {
    // F1 = 0 with an absorbing F2 is the global regime without a source.
    let g = Arc::new(RadialGrid::new(3, 80.0, 2048).unwrap());
    let model = NonlinearityModel::new(
        3,
        ScalarFamily::monomial(1.0, 1.0),
        ScalarFamily::Zero,
        ScalarFamily::monomial(1.0, 1.0),
        1.0,
        CriticalSign::Defocusing,
    )
    .unwrap();
    let u0 = gaussian(&g, 0.5, 3.0, 0.0);
    let cfg = SolverConfig { dt: 1e-3, t_end: 20.0, output_stride: 100, ..SolverConfig::default() };
    let out = run(&u0, &model, &cfg);
    assert_eq!(out.status, RunStatus::Completed);
    let e0 = out.series[0].energy;
    let drift = out.series.iter().map(|r| (r.energy - e0).abs() / e0.abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-4, "{drift}");
}

#[test]
fn detect_blowup_applies_the_threshold() {
    let g = Arc::new(RadialGrid::new(3, 20.0, 256).unwrap());
    let model = identity_model(CriticalSign::Defocusing, 1.0);
    let base = diagnose(&gaussian(&g, 0.5, 2.0, 0.0), &model, 0.0).unwrap();
    let cfg = SolverConfig::default();
    assert!(!detect_blowup(&[base.clone(), base.clone()], &cfg).unwrap());
    let mut last = base.clone();
    last.grad_u_sq = 1e6 * base.blowup_functional();
    last.grad_h_sq = 0.0;
    assert!(detect_blowup(&[base, last], &cfg).unwrap());
    assert!(detect_blowup(&[], &cfg).is_err());
    let zero = RadialField::from_fn(g.clone(), |_| Complex64::new(0.0, 0.0)).unwrap();
    let z = diagnose(&zero, &model, 0.0).unwrap();
    assert!(!detect_blowup(&[z.clone(), z], &cfg).unwrap());
}

#[test]
fn focusing_collapse_shrinks_variance() {
    // Coarse version of the focusing preset: J decreases until detection.
    let g = Arc::new(RadialGrid::new(3, 3.0, 1024).unwrap());
    let model = identity_model(CriticalSign::Focusing, 2.0);
    let model = NonlinearityModel { f1: ScalarFamily::monomial(1.0, 1.0), ..model };
    let u0 = gaussian(&g, 2.0, 1.0, 0.5);
    let cfg = SolverConfig { dt: 1e-5, t_end: 0.3, blowup_factor: 1e3, output_stride: 10, ..SolverConfig::default() };
    let out = run(&u0, &model, &cfg);
    let RunStatus::BlowupDetected { t_star, .. } = out.status else { panic!("{:?}", out.status) };
    assert!(t_star < 0.25);
    assert!(out.series.windows(2).all(|w| w[1].variance < w[0].variance));
    let last = out.series.last().unwrap();
    assert!(last.blowup_functional() >= 1e3 * out.series[0].blowup_functional() || t_star < 0.25);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        SolverConfig { dt_min: 2e-3, ..SolverConfig::default() },
        SolverConfig { picard_tol: 1e-5, ..SolverConfig::default() },
        SolverConfig { blowup_factor: 10.0, ..SolverConfig::default() },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
    assert!(SolverConfig::default().validate().is_ok());
}
