use qnls::cli::{preset, InitialData, Scenario};
use qnls::criteria::{
    check_blowup, check_global_existence, classify_case_and_l, compute_mr, default_mu, evaluate, gamma_set, holder_exponents,
    morawetz_bound_constants, spacetime_bound_constants, CaseClass, MorawetzParams, Verdict,
};
use qnls::diagnostics::{diagnose, DiagnosticsRecord};
use qnls::error::Error;
use qnls::nonlinearity::{CriticalSign, NonlinearityModel, ScalarFamily};

fn initial_record(s: &Scenario) -> DiagnosticsRecord {
    diagnose(&s.initial_field().unwrap(), &s.model, 0.0).unwrap()
}

fn with_initial(name: &str, initial: InitialData) -> Scenario {
    Scenario { initial, ..preset(name).unwrap() }
}

fn ex41(q: f64) -> NonlinearityModel {
    NonlinearityModel::new(
        3,
        ScalarFamily::monomial(1.0, 0.5),
        ScalarFamily::monomial(1.0, 2.0 / 3.0),
        ScalarFamily::monomial(1.0, q),
        1.0,
        CriticalSign::Defocusing,
    )
    .unwrap()
}

#[test]
fn identity_source_pair_is_global_by_case_b() {
    let s = preset("ex31A").unwrap();
    let g = check_global_existence(&s.model).unwrap();
    assert_eq!(g.case_b, Verdict::Proved);
    assert!(g.holds());
    assert!(g.m2_bar.unwrap() > 0.0);
}

#[test]
fn vanishing_source_is_case_a() {
    let g = check_global_existence(&preset("ex51").unwrap().model).unwrap();
    assert_eq!((g.case_a, g.m1_bar), (Verdict::Proved, Some(0.0)));
}

#[test]
fn exponential_rates() {
    let g = check_global_existence(&preset("ex33").unwrap().model).unwrap();
    assert_eq!(g.case_b, Verdict::Proved);
    // a/L above A/2*: the rate test no longer applies and sampling decides.
    let m = NonlinearityModel::new(
        3,
        ScalarFamily::Exponential { coeff: 1.0, rate: 1.0 },
        ScalarFamily::Exponential { coeff: 2.0, rate: 1.0 },
        ScalarFamily::Zero,
        1.0,
        CriticalSign::Defocusing,
    )
    .unwrap();
    let g = check_global_existence(&m).unwrap();
    assert_ne!(g.case_b, Verdict::Proved);
    assert_eq!(g.case_b, Verdict::SampledTrue);
}

#[test]
fn focusing_identity_witnesses() {
    let s = preset("ex31B").unwrap();
    let b = check_blowup(&s.model, &initial_record(&s)).unwrap();
    assert_eq!(b.k, Some(0.0));
    // ((2* - 2) α N - 2) / 2* with α = 1, N = 3, 2* = 6.
    assert!((b.m1_tilde.unwrap() - 10.0 / 6.0).abs() < 1e-15);
    assert!(b.holds());
    assert!(b.y0 > 0.0);
}

#[test]
fn real_data_is_inapplicable() {
    let s = with_initial("ex31B", InitialData::ChirpedGaussian { amplitude: 2.0, width: 1.0, chirp: 0.0 });
    let b = check_blowup(&s.model, &initial_record(&s)).unwrap();
    assert_eq!(b.y0, 0.0);
    assert!(!b.holds());
    assert_eq!(b.blowup_time_bound, None);
}

#[test]
fn chirped_gaussian_time_bound() {
    // y(0) = 2b J(0), so J(0)/(4 y(0)) = 1/(8b).
    let s = preset("ex31B").unwrap();
    let b = check_blowup(&s.model, &initial_record(&s)).unwrap();
    assert!((b.blowup_time_bound.unwrap() - 0.25).abs() < 1e-4, "{:?}", b.blowup_time_bound);
}

#[test]
fn mr_zero_small_and_homogeneous() {
    let zero = with_initial("ex41", InitialData::Zero);
    assert_eq!(compute_mr(&zero.model, &initial_record(&zero)).unwrap().mr, 0.0);

    let s = preset("ex41").unwrap();
    let r1 = compute_mr(&s.model, &initial_record(&s)).unwrap();
    assert!(r1.below_one(), "{}", r1.mr);
    let doubled = with_initial("ex41", InitialData::ChirpedGaussian { amplitude: 0.5, width: 3.0, chirp: 0.0 });
    let r2 = compute_mr(&s.model, &initial_record(&doubled)).unwrap();
    for j in 0..2 {
        let ratio = r2.terms[j] / r1.terms[j];
        assert!((ratio - 4f64.powf(2.0 / 3.0)).abs() < 1e-12, "{ratio}");
    }
}

#[test]
fn power_family_classification_in_both_regimes() {
    let c = classify_case_and_l(&ex41(1.0));
    assert_eq!(c.class, CaseClass::Case1);
    assert_eq!(c.case1_signs(), [true; 4]);
    // q < 2/N: only item (iv) fails, by 2 - N q.
    let q = 0.4;
    let c = classify_case_and_l(&ex41(q));
    assert_eq!(&c.k[..3], &[0.0, 0.0, 0.0]);
    assert!((c.k[3] - (2.0 - 3.0 * q)).abs() < 1e-15);
    assert_eq!(c.class.l(), Some(c.k[3]));
    assert!(c.symbolic);
}

#[test]
fn morawetz_constants_at_zero_mr_and_mu_range() {
    let s = preset("ex41").unwrap();
    let u0 = initial_record(&s);
    let c = classify_case_and_l(&s.model);
    let k = morawetz_bound_constants(&c, &u0, 0.0, &MorawetzParams::default()).unwrap();
    assert_eq!(k.m3.unwrap(), 2.0 * u0.energy + u0.variance / 4.0);
    let mu1 = MorawetzParams { mu: 1.0, ..MorawetzParams::default() };
    assert!(matches!(morawetz_bound_constants(&c, &u0, 0.0, &mu1), Err(Error::Hypothesis(_))));
}

#[test]
fn case2_estimate_is_finite() {
    // q = 0.6 gives l = 0.2, below (1 - M_r)/(1 + M_r) for the preset data.
    let m = ex41(0.6);
    let s = Scenario { model: m.clone(), ..preset("ex41").unwrap() };
    let u0 = initial_record(&s);
    let c = classify_case_and_l(&m);
    let mr = compute_mr(&m, &u0).unwrap().mr;
    assert!(c.class.l().unwrap() < (1.0 - mr) / (1.0 + mr));
    let rep = evaluate(&m, &u0, &MorawetzParams { mu: default_mu(&c, mr), ..MorawetzParams::default() }, None).unwrap();
    let k = rep.morawetz.unwrap();
    let m5 = k.m5.unwrap();
    assert!(m5.is_finite() && m5 > 0.0);
    assert!(k.m4.unwrap().is_finite());
}

#[test]
fn spacetime_constants() {
    let s = preset("ex52").unwrap();
    let u0 = initial_record(&s);
    let c = classify_case_and_l(&s.model);
    let mr = compute_mr(&s.model, &u0).unwrap();
    let b = spacetime_bound_constants(&c, &u0, &mr, 1.0, 1.0, 1.0).unwrap();
    let ratio = (1.0 + mr.mr) / (1.0 - mr.mr);
    assert!((b.h_bound - ratio * (2.0 * u0.energy + u0.variance / 4.0)).abs() <= 1e-14 * b.h_bound);
    assert!(b.i_bound.is_finite() && b.i_bound > 0.0);
    match spacetime_bound_constants(&c, &u0, &mr, 0.5, 1.0, 1.0) {
        Err(Error::Inadmissible(msg)) => assert!(msg.contains("p > 1/2"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn holder_identities_for_presets() {
    for name in ["ex41", "ex42", "ex52", "ex53"] {
        let g = gamma_set(&preset(name).unwrap().model).unwrap();
        for r in [1.0, 1.2, 1.5] {
            let h = holder_exponents(&g, r);
            assert!((h.inv_tau1_tilde + h.inv_tau1_tilde_prime - 1.0).abs() < 1e-12);
            assert!((h.inv_tau2_tilde + h.inv_tau2_tilde_prime - 1.0).abs() < 1e-12);
            assert!((h.inv_tau3 + h.inv_tau4 - 1.0).abs() < 1e-12);
            assert!((h.inv_tau3_tilde + h.inv_tau4_tilde - 1.0).abs() < 1e-12);
            assert!((g.gamma1 * h.inv_tau3 + g.gamma2 * h.inv_tau4 - r).abs() < 1e-12);
        }
        assert!((6.0 * (1.0 - g.gamma1) / (2.0 * (g.gamma2 - g.gamma1)) - 1.0).abs() < 1e-12, "{name}");
    }
}

#[test]
fn report_serializes_every_field() {
    let s = preset("ex52").unwrap();
    let rep = evaluate(&s.model, &initial_record(&s), &MorawetzParams::default(), None).unwrap();
    let v = rep.to_json();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["case_a", "case_b", "gamma_set", "mr", "sobolev_cs", "morawetz_constants", "holder_exponents"] {
        assert!(keys.contains(&k), "{k} missing from {keys:?}");
    }
}
