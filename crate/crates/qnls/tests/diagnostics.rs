use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use qnls::diagnostics::{
    decay_fit, diagnose, morawetz_accumulate, pseudoconformal_residual, spacetime_norms, verify_virial,
    DiagnosticsRecord, WeightSpec,
};
use qnls::dynamics::{run, step, RunStatus, SolverConfig};
use qnls::grid::{RadialField, RadialGrid};
use qnls::nonlinearity::{CriticalSign, NonlinearityModel, ScalarFamily};

fn grid(r_max: f64, nodes: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(3, r_max, nodes).unwrap())
}

fn gaussian(g: &Arc<RadialGrid>, amp: f64, chirp: f64) -> RadialField {
    RadialField::from_fn(g.clone(), |r| Complex64::from_polar(amp * (-r * r).exp(), chirp * r * r)).unwrap()
}

fn identity(sign: CriticalSign, a: f64) -> NonlinearityModel {
    NonlinearityModel::new(3, ScalarFamily::monomial(1.0, 1.0), ScalarFamily::Zero, ScalarFamily::Zero, a, sign).unwrap()
}

/// Free evolution of the broad Gaussian `e^{-r^2/16}`.
fn free_run(nodes: usize, t_end: f64, dt: f64) -> Vec<DiagnosticsRecord> {
    let g = grid(40.0, nodes);
    let u0 = RadialField::from_fn(g, |r| Complex64::new((-r * r / 16.0).exp(), 0.0)).unwrap();
    let cfg = SolverConfig { dt, t_end, output_stride: 10, ..SolverConfig::default() };
    let out = run(&u0, &NonlinearityModel::free(3).unwrap(), &cfg);
    assert_eq!(out.status, RunStatus::Completed);
    out.series
}

#[test]
fn gaussian_mass() {
    let g = grid(10.0, 4096);
    let rec = diagnose(&gaussian(&g, 1.0, 0.0), &identity(CriticalSign::Defocusing, 1.0), 0.0).unwrap();
    assert!((rec.mass - (PI / 2.0).powf(1.5)).abs() < 1e-6);
    assert_eq!(rec.momentum, 0.0);
}

#[test]
fn zero_field_gives_zero_record() {
    let g = grid(10.0, 256);
    let zero = RadialField::from_fn(g, |_| Complex64::new(0.0, 0.0)).unwrap();
    let model = NonlinearityModel::new(
        3,
        ScalarFamily::monomial(1.0, 1.0),
        ScalarFamily::monomial(1.0, 2.0),
        ScalarFamily::monomial(1.0, 1.5),
        1.0,
        CriticalSign::Defocusing,
    )
    .unwrap();
    let rec = diagnose(&zero, &model, 0.0).unwrap();
    for v in [rec.mass, rec.energy, rec.variance, rec.momentum, rec.grad_u_sq, rec.grad_h_sq, rec.psi_int, rec.theta] {
        assert_eq!(v, 0.0);
    }
}

#[test]
fn chirp_sets_momentum() {
    let g = grid(10.0, 4096);
    let b = 0.3;
    let rec = diagnose(&gaussian(&g, 1.0, b), &NonlinearityModel::free(3).unwrap(), 0.0).unwrap();
    // J = ∫ r^2 e^{-2r^2} over R^3.
    let j = 3.0 / 4.0 * (PI / 2.0).powf(1.5);
    assert!((rec.variance - j).abs() < 1e-6);
    assert!((rec.momentum - 2.0 * b * j).abs() < 1e-4 * j, "{} vs {}", rec.momentum, 2.0 * b * j);
}

#[test]
fn free_variance_is_quadratic() {
    let series = free_run(8192, 1.0, 1e-3);
    let (j0, grad0) = (series[0].variance, series[0].grad_u_sq);
    for r in &series {
        let exact = j0 + 4.0 * r.t * r.t * grad0;
        assert!((r.variance - exact).abs() <= 1e-4 * exact, "t = {}", r.t);
    }
    let rep = verify_virial(&series, 1e-4).unwrap();
    assert!(rep.virial_pass, "{rep:?}");
}

#[test]
fn static_zero_series_has_no_defect() {
    let g = grid(10.0, 128);
    let zero = RadialField::from_fn(g, |_| Complex64::new(0.0, 0.0)).unwrap();
    let model = identity(CriticalSign::Defocusing, 1.0);
    let series: Vec<_> = (0..5).map(|k| diagnose(&zero, &model, 0.1 * k as f64).unwrap()).collect();
    let rep = verify_virial(&series, 1e-3).unwrap();
    assert_eq!(rep.virial_defect, 0.0);
    assert!(verify_virial(&series[..2], 1e-3).is_err());
}

#[test]
fn virial_defect_is_second_order() {
    let g = grid(10.0, 1024);
    let model = identity(CriticalSign::Defocusing, 1.0);
    let defect = |dt: f64| {
        let cfg = SolverConfig { dt, t_end: 0.5, output_stride: 10, ..SolverConfig::default() };
        let out = run(&gaussian(&g, 1.0, 0.0), &model, &cfg);
        assert_eq!(out.status, RunStatus::Completed);
        verify_virial(&out.series, 1e-3).unwrap().virial_defect
    };
    let (d1, d2) = (defect(1e-3), defect(5e-4));
    assert!((3.0..5.0).contains(&(d1 / d2)), "{d1} / {d2}");
}

#[test]
fn pseudoconformal_residual_free_and_edge_cases() {
    // The discrete commutator identity behind P(t) holds to O(dr^2), so the
    // 1e-6 level needs a fine grid.
    let series = free_run(32768, 5.0, 1e-2);
    let free = NonlinearityModel::free(3).unwrap();
    let res = pseudoconformal_residual(&series, &free).unwrap();
    let p0 = series[0].pseudo_p;
    assert!(series.iter().all(|r| r.theta == 0.0));
    assert!(res.iter().all(|v| v.abs() <= 1e-6 * p0), "{:?}", res.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    assert_eq!(pseudoconformal_residual(&series[..1], &free).unwrap(), vec![0.0]);
    assert!(pseudoconformal_residual(&series, &identity(CriticalSign::Focusing, 1.0)).is_err());
}

fn synthetic(ts: &[f64], psi: impl Fn(f64) -> f64) -> Vec<DiagnosticsRecord> {
    let g = grid(5.0, 64);
    let zero = RadialField::from_fn(g, |_| Complex64::new(0.0, 0.0)).unwrap();
    let base = diagnose(&zero, &NonlinearityModel::free(3).unwrap(), 0.0).unwrap();
    ts.iter()
        .map(|&t| DiagnosticsRecord { t, psi_int: psi(t), g1_abs_int: psi(t), ..base.clone() })
        .collect()
}

#[test]
fn morawetz_weights() {
    let ts: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
    let zero = synthetic(&ts, |_| 0.0);
    assert_eq!(morawetz_accumulate(&zero, WeightSpec::Unit).unwrap(), 0.0);

    let psi = |t: f64| 1.0 / (1.0 + t);
    let upto_one: Vec<f64> = ts.iter().copied().filter(|&t| t <= 1.0).collect();
    let series = synthetic(&upto_one, psi);
    let mut oracle = 0.0;
    for w in upto_one.windows(2) {
        let f = |t: f64| t * t * psi(t);
        oracle += 0.5 * (w[1] - w[0]) * (f(w[0]) + f(w[1]));
    }
    let got = morawetz_accumulate(&series, WeightSpec::PowerOfT { mu: 2.0 }).unwrap();
    assert!((got - oracle).abs() < 1e-15);
    // Close to the exact integral ∫_0^1 t^2/(1+t) dt = ln 2 - 1/2.
    assert!((got - (2f64.ln() - 0.5)).abs() < 1e-3);
    assert!(morawetz_accumulate(&series, WeightSpec::PowerOfT { mu: -1.0 }).is_err());
}

#[test]
fn spacetime_norm_edge_cases() {
    let ts: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
    let free = NonlinearityModel::free(3).unwrap();
    let zero = synthetic(&ts, |_| 0.0);
    assert_eq!(spacetime_norms(&zero, &[], &free, 1.0, 1.0, 1.0).unwrap(), (0.0, 0.0));

    let series = synthetic(&ts, |t| (-t).exp());
    let (h, _) = spacetime_norms(&series, &[], &free, 1.0, 1.0, 1.0).unwrap();
    assert_eq!(h, morawetz_accumulate(&series, WeightSpec::Unit).unwrap());
    assert!(spacetime_norms(&series, &[], &free, 0.5, 1.0, 1.0).is_err());
    assert!(spacetime_norms(&series, &[], &free, 1.0, 1.0, 2.0).is_err());
}

#[test]
fn free_surrogate_decays() {
    let g = grid(60.0, 4096);
    let free = NonlinearityModel::free(3).unwrap();
    let probe = NonlinearityModel::new(3, ScalarFamily::monomial(1.0, 1.0), ScalarFamily::Zero, ScalarFamily::Zero, 0.0, CriticalSign::Absent)
        .unwrap();
    let mut u = gaussian(&g, 1.0, 0.0);
    let dt = 0.01;
    let mut series = vec![diagnose(&u, &probe, 0.0).unwrap()];
    for k in 1..=400 {
        u = step(&u, &free, dt).unwrap();
        if k % 10 == 0 {
            series.push(diagnose(&u, &probe, k as f64 * dt).unwrap());
        }
    }
    let slope = decay_fit(&series, 1.0).unwrap();
    assert!(slope < 0.0, "{slope}");
}
