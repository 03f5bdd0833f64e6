use proptest::prelude::*;
use qnls::cli::{preset, PRESETS};
use qnls::nonlinearity::{
    sample_grid, verify_calculus, verify_tables, CalculusTables, CriticalSign, GPart, NonlinearityModel, ScalarFamily,
    Term,
};

fn model(h: ScalarFamily, f1: ScalarFamily, f2: ScalarFamily) -> NonlinearityModel {
    NonlinearityModel::new(3, h, f1, f2, 1.0, CriticalSign::Defocusing).unwrap()
}

fn mono(p: f64) -> ScalarFamily {
    ScalarFamily::monomial(1.0, p)
}

#[test]
fn h_values_from_closed_forms() {
    let m = model(mono(1.0), ScalarFamily::Zero, ScalarFamily::Zero);
    assert_eq!(m.eval_h(2.0, 0).unwrap(), 2.0);
    let m = model(mono(0.5), ScalarFamily::Zero, ScalarFamily::Zero);
    assert!((m.eval_h(4.0, 1).unwrap() - 0.25).abs() < 1e-15);
    let m = model(ScalarFamily::Exponential { coeff: 1.0, rate: 1.0 }, ScalarFamily::Zero, ScalarFamily::Zero);
    assert!((m.eval_h(0.0, 2).unwrap() - 1.0).abs() < 1e-15);
    assert!(m.eval_h(-1.0, 0).is_err());
    assert!(m.eval_h(1.0, 3).is_err());
}

#[test]
fn g_values_from_closed_forms() {
    let m = model(mono(1.0), mono(1.0), ScalarFamily::Zero);
    assert!((m.eval_g(2.0, GPart::G).unwrap() - 2.0).abs() < 1e-15);
    let m = model(mono(1.0), ScalarFamily::Zero, ScalarFamily::Zero);
    for s in [0.0, 0.3, 7.0, 1e6] {
        assert_eq!(m.eval_g(s, GPart::G).unwrap(), 0.0);
    }
    let m = model(mono(1.0), ScalarFamily::Exponential { coeff: 1.0, rate: 1.0 }, ScalarFamily::Zero);
    // Composite Simpson of ∫_0^1 e^x dx.
    let n = 1000;
    let h = 1.0 / n as f64;
    let simpson: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * (i as f64 * h).exp()
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert!((m.eval_g(1.0, GPart::G1).unwrap() - simpson).abs() < 1e-12);
    assert!((simpson - 1.71828).abs() < 1e-5);
    assert!(m.eval_g(-0.5, GPart::G).is_err());
}

#[test]
fn g_parts_recombine() {
    let m = model(mono(1.0), mono(2.0), mono(0.5));
    for s in [0.0, 0.25, 2.0, 40.0] {
        let g = m.eval_g(s, GPart::G).unwrap();
        let parts = m.eval_g(s, GPart::G1).unwrap() - m.eval_g(s, GPart::G2).unwrap();
        assert!((g - parts).abs() <= 1e-14 * (1.0 + g.abs()));
    }
}

#[test]
fn calculus_passes_for_identity_pair() {
    let m = model(mono(1.0), mono(1.0), ScalarFamily::Zero);
    let r = verify_calculus(&m, 64, 1e-6).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.max_defect_g1 < 1e-6);
}

#[test]
fn calculus_is_exact_for_zero_families() {
    let m = NonlinearityModel::free(3).unwrap();
    let r = verify_calculus(&m, 64, 1e-6).unwrap();
    assert!(r.pass);
    assert_eq!(r.max_defect_h1, 0.0);
    assert_eq!(r.max_defect_g1, 0.0);
    assert!(verify_calculus(&m, 8, 1e-6).is_err());
}

#[test]
fn corrupted_antiderivative_is_reported() {
    let h = |s: f64| [s, 1.0, 0.0];
    let f1 = |s: f64| s;
    let zero = |_: f64| 0.0;
    let g1 = |s: f64| 0.5 * s * s + 0.1;
    let r = verify_tables(&CalculusTables { h: &h, f1: &f1, f2: &zero, g1: &g1, g2: &zero }, 64, 1e-6).unwrap();
    assert!(!r.pass);
    assert!(r.violations.iter().any(|v| v.function == "G1" && v.s == 0.0));
}

#[test]
fn assumption_flag_is_on_for_presets_and_off_for_free_mode() {
    for name in PRESETS {
        let s = preset(name).unwrap();
        assert!(s.model.assumption_floor().holds_on_samples, "{name}");
    }
    assert!(!NonlinearityModel::free(3).unwrap().assumption_floor().holds_on_samples);
}

#[test]
fn invalid_models_are_rejected() {
    assert!(NonlinearityModel::new(2, mono(1.0), ScalarFamily::Zero, ScalarFamily::Zero, 1.0, CriticalSign::Defocusing)
        .is_err());
    assert!(NonlinearityModel::new(3, mono(1.0), ScalarFamily::Zero, ScalarFamily::Zero, 0.0, CriticalSign::Focusing)
        .is_err());
    let decreasing = ScalarFamily::PowerSum(vec![Term::new(1.0, 2.0), Term::new(1.0, 1.0)]);
    assert!(NonlinearityModel::new(3, decreasing, ScalarFamily::Zero, ScalarFamily::Zero, 1.0, CriticalSign::Absent)
        .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_derivative_matches_f(p1 in 0.1..3.0f64, p2 in 0.1..3.0f64, c1 in 0.1..4.0f64, c2 in 0.1..4.0f64) {
        let m = model(mono(1.0), ScalarFamily::monomial(c1, p1), ScalarFamily::monomial(c2, p2));
        for s in [1e-3, 0.1, 1.0, 10.0, 300.0] {
            let d = 1e-5 * s;
            let dg = (m.eval_g(s + d, GPart::G).unwrap() - m.eval_g(s - d, GPart::G).unwrap()) / (2.0 * d);
            let f = m.eval_f(s).unwrap();
            let scale = m.eval_g(s, GPart::G1).unwrap().abs() / s + m.eval_g(s, GPart::G2).unwrap().abs() / s + f.abs();
            prop_assert!((dg - f).abs() <= 1e-6 * (1.0 + scale), "s = {s}: {dg} vs {f}");
        }
    }

    #[test]
    fn h_is_monotone_above_half(a1 in 0.5..1.5f64, gap in 0.01..1.0f64, c in 0.1..3.0f64) {
        let h = ScalarFamily::PowerSum(vec![Term::new(c, a1), Term::new(1.0, a1 + gap)]);
        let m = model(h, ScalarFamily::Zero, ScalarFamily::Zero);
        for s in sample_grid() {
            prop_assert!(m.eval_h(s, 1).unwrap() >= 0.0);
            prop_assert!(m.eval_h(s, 0).unwrap() >= 0.0);
        }
    }
}
