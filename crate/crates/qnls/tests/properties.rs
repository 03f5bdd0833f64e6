use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use qnls::cli::{parse_config, preset, InitialData, Scenario};
use qnls::criteria::{compute_mr, gamma_set, holder_exponents};
use qnls::diagnostics::diagnose;
use qnls::dynamics::{run, RunStatus, SolverConfig};
use qnls::grid::{RadialField, RadialGrid};
use qnls::nonlinearity::{CriticalSign, NonlinearityModel, ScalarFamily};

fn critical_power_model(alpha: f64, c: f64) -> NonlinearityModel {
    NonlinearityModel::new(
        3,
        ScalarFamily::monomial(1.0, alpha),
        ScalarFamily::monomial(c, 2.0 * alpha - 1.0 + 2.0 / 3.0),
        ScalarFamily::Zero,
        1.0,
        CriticalSign::Defocusing,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mass_is_conserved(amp in 0.05..0.8f64, width in 1.0..3.0f64, chirp in -0.3..0.3f64) {
        let g = Arc::new(RadialGrid::new(3, 20.0, 256).unwrap());
        let u0 = RadialField::from_fn(g, |r| {
            Complex64::from_polar(amp * (-(r * r) / (width * width)).exp(), chirp * r * r)
        })
        .unwrap();
        let model = critical_power_model(1.0, 1.0);
        let cfg = SolverConfig { dt: 2e-3, t_end: 0.1, output_stride: 5, ..SolverConfig::default() };
        let out = run(&u0, &model, &cfg);
        prop_assert_eq!(out.status, RunStatus::Completed);
        let m0 = out.series[0].mass;
        for r in &out.series {
            prop_assert!((r.mass - m0).abs() <= 1e-8 * m0);
        }
    }

    #[test]
    fn mr_summands_scale_with_mass(alpha in 0.5..1.5f64, c in 0.1..2.0f64, k in 0.2..5.0f64) {
        let model = critical_power_model(alpha, c);
        let s = Scenario { model: model.clone(), ..preset("ex52").unwrap() };
        let u0 = diagnose(&s.initial_field().unwrap(), &model, 0.0).unwrap();
        let scaled = qnls::diagnostics::DiagnosticsRecord { mass: k * u0.mass, ..u0.clone() };
        let (a, b) = (compute_mr(&model, &u0).unwrap(), compute_mr(&model, &scaled).unwrap());
        for j in 0..2 {
            prop_assert!((b.terms[j] / a.terms[j] - k.powf(2.0 / 3.0)).abs() <= 1e-12 * k.powf(2.0 / 3.0));
        }
        prop_assert!(a.mr >= 0.0);
    }

    #[test]
    fn holder_identities(alpha in 0.5..2.0f64, r_frac in 0.0..1.0f64) {
        let g = gamma_set(&critical_power_model(alpha, 1.0)).unwrap();
        prop_assert!((6.0 * (1.0 - g.gamma1) / (2.0 * (g.gamma2 - g.gamma1)) - 1.0).abs() < 1e-12);
        let r = 1.0 + r_frac * (g.gamma2 - 1.0);
        let h = holder_exponents(&g, r);
        prop_assert!((h.inv_tau1_tilde + h.inv_tau1_tilde_prime - 1.0).abs() < 1e-12);
        prop_assert!((h.inv_tau3 + h.inv_tau4 - 1.0).abs() < 1e-12);
        prop_assert!((g.gamma1 * h.inv_tau3 + g.gamma2 * h.inv_tau4 - r).abs() < 1e-12);
    }

    #[test]
    fn config_text_round_trips(
        amp in 0.0..5.0f64,
        width in 0.01..10.0f64,
        chirp in -2.0..2.0f64,
        dt in 1e-6..1e-2f64,
        t_end in 0.0..50.0f64,
        a in 0.01..4.0f64,
        name in prop::sample::select(&qnls::cli::PRESETS[..]),
    ) {
        let base = preset(name).unwrap();
        let mut model = base.model.clone();
        model.a = a;
        let s = Scenario {
            model,
            initial: InitialData::ChirpedGaussian { amplitude: amp, width, chirp },
            solver: SolverConfig { dt, t_end, ..base.solver },
            ..base
        };
        let text = s.to_config_text();
        prop_assert_eq!(parse_config(&text).unwrap(), s);
    }
}
