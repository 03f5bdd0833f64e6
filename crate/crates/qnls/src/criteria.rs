//! Sufficient conditions for global existence and blowup, the Morawetz
//! case classification and the closed-form constants of the decay,
//! Morawetz and spacetime estimates.
//!
//! Power-sum families are decided from their exponents. Other families fall
//! back to sampling on the standard grid, which can support but never prove a
//! claim for every `s >= 0`; such results are tagged accordingly.

use serde_json::{json, Map, Number, Value};
use statrs::function::gamma::gamma;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::grid::{sobolev_best_constant, sphere_area};
use crate::nonlinearity::{
    critical_exponent, pow_crit, sample_grid, AssumptionCheck, CriticalSign, NonlinearityModel, ScalarFamily, Term,
};

/// Outcome of one sufficient condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Proved,
    SampledTrue,
    SampledFalse,
    Refuted,
}

impl Verdict {
    pub fn holds(self) -> bool {
        matches!(self, Verdict::Proved | Verdict::SampledTrue)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Proved => "proved",
            Verdict::SampledTrue => "sampled-true",
            Verdict::SampledFalse => "false-at-sample",
            Verdict::Refuted => "refuted",
        }
    }

    /// Conjunction: the weakest of the two.
    pub fn and(self, other: Verdict) -> Verdict {
        self.max(other)
    }

    fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::Proved
        } else {
            Verdict::Refuted
        }
    }
}

/// Global existence: cases (a) and (b) with their witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalExistence {
    pub case_a: Verdict,
    /// Smallest `m̄1` with `|G1| <= m̄1 s + G2`.
    pub m1_bar: Option<f64>,
    pub case_b: Verdict,
    /// Smallest `m̄2` with `|G1| <= m̄2 s + (A/2*) h^{2*}`.
    pub m2_bar: Option<f64>,
}

impl GlobalExistence {
    pub fn holds(&self) -> bool {
        self.case_a.holds() || self.case_b.holds()
    }
}

/// Finite-time blowup: cases (c) and (d).
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupCheck {
    /// Smallest `k` with `s h'' <= k h'`, absent when none exists.
    pub k: Option<f64>,
    pub m1_tilde: Option<f64>,
    pub m2_tilde: Option<f64>,
    /// `2[(2k+1)N+2] E(u0) + M̃2 M(u0)`, which must be `<= 0` in case (d).
    pub energy_condition: Option<f64>,
    pub y0: f64,
    pub case_c: Verdict,
    pub case_d: Verdict,
    /// `J(0)/(4 y(0))` when a case holds.
    pub blowup_time_bound: Option<f64>,
}

impl BlowupCheck {
    pub fn holds(&self) -> bool {
        self.case_c.holds() || self.case_d.holds()
    }
}

/// Exponents and constants of the Hölder split behind `M_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSet {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma1_tilde: f64,
    pub gamma2_tilde: f64,
    pub m1: f64,
    pub m1_prime: f64,
    pub m2: f64,
    pub m2_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrReport {
    pub gammas: GammaSet,
    pub sobolev_cs: f64,
    /// The two summands of `M_r(u0)`.
    pub terms: [f64; 2],
    pub mr: f64,
}

impl MrReport {
    pub fn below_one(&self) -> bool {
        self.mr < 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseClass {
    Case1,
    Case2 { l: f64 },
    Neither,
}

impl CaseClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseClass::Case1 => "case1",
            CaseClass::Case2 { .. } => "case2",
            CaseClass::Neither => "neither",
        }
    }

    pub fn l(&self) -> Option<f64> {
        match self {
            CaseClass::Case2 { l } => Some(*l),
            _ => None,
        }
    }
}

/// The Morawetz classification. `k[j]` is the smallest `k >= 0` with
/// `expr_j >= -k ref_j` for all `s`, infinite when unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub dimension: usize,
    pub class: CaseClass,
    pub k: [f64; 4],
    /// False when any `k_j` came from sampling.
    pub symbolic: bool,
}

impl Classification {
    pub fn case1_signs(&self) -> [bool; 4] {
        self.k.map(|k| k == 0.0)
    }
}

/// Parameters of the weighted estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorawetzParams {
    /// Power of `Ψ` in the weighted spatial estimate (`M1`).
    pub theta: f64,
    /// Time exponent of the weight `t^(-mu)` (`M2` in Case 1, `M4` in Case 2).
    pub mu: f64,
    /// Spatial weight `(1 + |x|)^sigma` of `M1`.
    pub sigma: f64,
    /// Time exponent of the `h`-norm bound, used for `C3`.
    pub p: f64,
}

impl Default for MorawetzParams {
    fn default() -> Self {
        Self { theta: 0.75, mu: 2.0, sigma: 4.0, p: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorawetzConstants {
    /// `C(u0) = ∫ |x u0|^2`.
    pub c_u0: f64,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub m3: Option<f64>,
    pub m4: Option<f64>,
    pub m5: Option<f64>,
    pub c1: f64,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
}

/// Reciprocal Hölder exponents of the splits behind `M_r` and the `L^r` bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderExponents {
    pub inv_tau1_tilde: f64,
    pub inv_tau1_tilde_prime: f64,
    pub inv_tau2_tilde: f64,
    pub inv_tau2_tilde_prime: f64,
    pub r: f64,
    pub inv_tau3: f64,
    pub inv_tau4: f64,
    pub inv_tau3_tilde: f64,
    pub inv_tau4_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeBounds {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub h_bound: f64,
    pub i_bound: f64,
    pub exponents: HolderExponents,
}

// ---------------------------------------------------------------------------
// Small tools

/// `x` with cancellation noise relative to `scale` flushed to zero.
fn snap(x: f64, scale: f64) -> f64 {
    if x.abs() <= 1e-12 * scale.abs().max(1.0) {
        0.0
    } else {
        x
    }
}

/// Power sum as `(coeff, exponent)` pairs, sorted, equal exponents merged and
/// zero coefficients dropped.
fn merge(mut terms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    terms.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for (c, e) in terms {
        match out.last_mut() {
            Some(last) if (last.1 - e).abs() <= 1e-12 * e.abs().max(1.0) => {
                last.0 += c;
                last.2 = last.2.max(c.abs());
            }
            _ => out.push((c, e, c.abs())),
        }
    }
    out.into_iter().filter(|(c, _, m)| snap(*c, *m) != 0.0).map(|(c, e, _)| (c, e)).collect()
}

fn power_terms(f: &ScalarFamily) -> Option<&[Term]> {
    match f {
        ScalarFamily::Zero => Some(&[]),
        ScalarFamily::PowerSum(t) => Some(t),
        ScalarFamily::Exponential { .. } => None,
    }
}

/// Samples of the standard grid with `s > 0`.
fn positive_samples() -> Vec<f64> {
    sample_grid().into_iter().filter(|&s| s > 0.0).collect()
}

/// Sampled supremum of `f` over `s > 0`, clipped below at zero. The verdict
/// is false-at-sample when the maximum sits at the top end of the finite
/// samples, which signals growth beyond the sampled range.
fn sampled_sup(f: impl Fn(f64) -> f64) -> (f64, Verdict) {
    let vals: Vec<f64> = positive_samples().into_iter().map(f).filter(|v| v.is_finite()).collect();
    if vals.is_empty() {
        return (f64::INFINITY, Verdict::SampledFalse);
    }
    let (arg, max) = vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    if max <= 0.0 {
        return (0.0, Verdict::SampledTrue);
    }
    if arg + 8 >= vals.len() {
        (f64::INFINITY, Verdict::SampledFalse)
    } else {
        (max, Verdict::SampledTrue)
    }
}

/// Supremum over `s > 0` of a function known to be bounded above and to tend
/// to a finite limit or minus infinity at both ends. Coarse log grid, then
/// golden-section refinement in `ln s`.
fn refined_sup(f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi, n) = (-40.0f64, 40.0f64, 4001usize);
    let x = |i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let g = |x: f64| {
        let v = f(x.exp());
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let v = g(x(i));
        if v > best.1 {
            best = (i, v);
        }
    }
    let (mut a, mut b) = (x(best.0.saturating_sub(1)), x((best.0 + 1).min(n - 1)));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = g(d);
        }
    }
    best.1.max(fc).max(fd).max(0.0)
}

/// `p >= 0` for every `s >= 0` on a merged power sum: all coefficients
/// non-negative proves it, a negative coefficient at either end refutes it,
/// otherwise the sum is sampled.
fn power_sum_nonnegative(terms: &[(f64, f64)]) -> Verdict {
    let t = merge(terms.to_vec());
    if t.iter().all(|(c, _)| *c >= 0.0) {
        return Verdict::Proved;
    }
    if t.first().map(|x| x.0 < 0.0).unwrap_or(false) || t.last().map(|x| x.0 < 0.0).unwrap_or(false) {
        return Verdict::Refuted;
    }
    let ok = positive_samples().iter().all(|&s| t.iter().map(|(c, e)| c * s.powf(*e)).sum::<f64>() >= 0.0);
    if ok {
        Verdict::SampledTrue
    } else {
        Verdict::SampledFalse
    }
}

fn sampled_nonnegative(f: impl Fn(f64) -> f64) -> Verdict {
    let ok = std::iter::once(0.0).chain(positive_samples()).map(f).filter(|v| v.is_finite()).all(|v| v >= -1e-12 * v.abs().max(1.0));
    if ok {
        Verdict::SampledTrue
    } else {
        Verdict::SampledFalse
    }
}

/// `G1` and `G2` terms as `(coeff, exponent)` of `s^(p+1)`.
fn antiderivative_terms(terms: &[Term]) -> Vec<(f64, f64)> {
    terms.iter().map(|t| (t.coeff / (t.exponent + 1.0), t.exponent + 1.0)).collect()
}

fn h_offset_crit(model: &NonlinearityModel, s: f64) -> f64 {
    let two_star = model.critical_exponent();
    pow_crit(model.h.value(s), two_star) - pow_crit(model.h.value(0.0), two_star)
}

// ---------------------------------------------------------------------------
// Global existence

pub fn check_global_existence(model: &NonlinearityModel) -> Result<GlobalExistence> {
    if model.sign == CriticalSign::Focusing {
        return Err(Error::FocusingSign("check_global_existence"));
    }
    let (case_a, m1_bar) = case_a(model);
    let (case_b, m2_bar) = case_b(model);
    Ok(GlobalExistence { case_a, m1_bar, case_b, m2_bar })
}

fn case_a(model: &NonlinearityModel) -> (Verdict, Option<f64>) {
    if model.f1.is_zero() {
        return (Verdict::Proved, Some(0.0));
    }
    let g = |s: f64| model.f1.antiderivative(s).abs() - model.f2.antiderivative(s);
    if let (Some(f1), Some(f2)) = (power_terms(&model.f1), power_terms(&model.f2)) {
        let mut d = antiderivative_terms(f1);
        d.extend(antiderivative_terms(f2).into_iter().map(|(c, e)| (-c, e)));
        let d = merge(d);
        let bad_low = d.first().map(|&(c, e)| c > 0.0 && e < 1.0).unwrap_or(false);
        let bad_high = d.last().map(|&(c, e)| c > 0.0 && e > 1.0).unwrap_or(false);
        if bad_low || bad_high {
            return (Verdict::Refuted, None);
        }
        return (Verdict::Proved, Some(refined_sup(|s| g(s) / s)));
    }
    let (m, v) = sampled_sup(|s| g(s) / s);
    (v, v.holds().then_some(m))
}

fn case_b(model: &NonlinearityModel) -> (Verdict, Option<f64>) {
    if model.f1.is_zero() {
        return (Verdict::Proved, Some(0.0));
    }
    let a = model.a_eff();
    let two_star = model.critical_exponent();
    let g = |s: f64| model.f1.antiderivative(s).abs() - a / two_star * h_offset_crit(model, s);
    match (&model.h, &model.f1) {
        (ScalarFamily::PowerSum(h), ScalarFamily::PowerSum(f1)) => {
            let g1 = merge(antiderivative_terms(f1));
            let (low, high) = (g1[0], g1[g1.len() - 1]);
            let crit_low = (a / two_star * pow_crit(h[0].coeff, two_star), h[0].exponent * two_star);
            let hm = h[h.len() - 1];
            let crit_high = (a / two_star * pow_crit(hm.coeff, two_star), hm.exponent * two_star);
            // Near zero the competitors are m̄2 s and the lowest critical
            // power; at infinity m̄2 s and the highest.
            let fails = |pos: (f64, f64), neg: (f64, f64), near_zero: bool| -> Option<bool> {
                let neg_active = a > 0.0;
                let beats = |x: f64, y: f64| if near_zero { x < y } else { x > y };
                if !beats(pos.1, 1.0) {
                    return Some(false);
                }
                if !neg_active || beats(pos.1, neg.1) {
                    return Some(true);
                }
                if (pos.1 - neg.1).abs() <= 1e-12 * pos.1 {
                    if pos.0 > neg.0 * (1.0 + 1e-12) {
                        return Some(true);
                    }
                    if pos.0 < neg.0 * (1.0 - 1e-12) {
                        return Some(false);
                    }
                    return None;
                }
                Some(false)
            };
            match (fails(low, crit_low, true), fails(high, crit_high, false)) {
                (Some(false), Some(false)) => (Verdict::Proved, Some(refined_sup(|s| g(s) / s))),
                (Some(true), _) | (_, Some(true)) => (Verdict::Refuted, None),
                _ => {
                    let (m, v) = sampled_sup(|s| g(s) / s);
                    (v, v.holds().then_some(m))
                }
            }
        }
        (ScalarFamily::PowerSum(_), ScalarFamily::Exponential { .. }) => (Verdict::Refuted, None),
        (ScalarFamily::Exponential { coeff: c, rate: k }, ScalarFamily::Exponential { coeff: af, rate: l })
            if *c == 1.0 && a > 0.0 =>
        {
            if *l < k * two_star && af / l < a / two_star {
                (Verdict::Proved, Some(0.0))
            } else if *l > k * two_star {
                (Verdict::Refuted, None)
            } else {
                let (m, v) = sampled_sup(|s| g(s) / s);
                (v, v.holds().then_some(m))
            }
        }
        _ => {
            let (m, v) = sampled_sup(|s| g(s) / s);
            (v, v.holds().then_some(m))
        }
    }
}

// ---------------------------------------------------------------------------
// Blowup

/// Smallest `k` with `s h''(s) <= k h'(s)` for all `s > 0`.
pub fn k_exponent(h: &ScalarFamily) -> Option<f64> {
    match h {
        // s h''/h' is a positive-weight average of alpha_i - 1.
        ScalarFamily::PowerSum(t) => t.last().map(|t| t.exponent - 1.0),
        _ => None,
    }
}

pub fn check_blowup(model: &NonlinearityModel, u0: &DiagnosticsRecord) -> Result<BlowupCheck> {
    if model.sign != CriticalSign::Focusing {
        return Err(Error::DefocusingSign("check_blowup"));
    }
    let n = model.n();
    let two_star = model.critical_exponent();
    let a = model.a_eff();
    let y0 = u0.momentum;
    let y_ok = Verdict::from_bool(y0 > 0.0);
    let k = k_exponent(&model.h).filter(|k| *k >= -0.5);
    let Some(k) = k else {
        return Ok(BlowupCheck {
            k: None,
            m1_tilde: None,
            m2_tilde: None,
            energy_condition: None,
            y0,
            case_c: Verdict::Refuted,
            case_d: Verdict::Refuted,
            blowup_time_bound: None,
        });
    };
    let ck = 2.0 * ((k + 1.0) * n + 1.0);
    let h = power_terms(&model.h).unwrap_or(&[]);
    let f1 = power_terms(&model.f1);
    let f2 = power_terms(&model.f2);

    // Case (c).
    let h_cond: Vec<(f64, f64)> =
        h.iter().map(|t| (t.coeff * snap(n * t.exponent - ck / two_star, n * t.exponent), t.exponent)).collect();
    let h_verdict = power_sum_nonnegative(&h_cond);
    let f_verdict = match (f1, f2) {
        (Some(f1), Some(f2)) => {
            let mut terms: Vec<(f64, f64)> = f1
                .iter()
                .map(|t| (t.coeff * snap(n - ck / (t.exponent + 1.0), n), t.exponent + 1.0))
                .collect();
            terms.extend(f2.iter().map(|t| (-t.coeff * snap(n - ck / (t.exponent + 1.0), n), t.exponent + 1.0)));
            power_sum_nonnegative(&terms)
        }
        _ => sampled_nonnegative(|s| {
            n * (model.f1.value(s) - model.f2.value(s)) * s
                - ck * (model.f1.antiderivative(s) - model.f2.antiderivative(s))
        }),
    };
    let case_c = Verdict::from_bool(u0.energy <= 0.0).and(h_verdict).and(f_verdict).and(y_ok);

    // Case (d): M̃1 from the weakest exponent of h, M̃2 by Young's inequality.
    let m1_tilde = h.iter().map(|t| n * t.exponent).fold(f64::INFINITY, f64::min) - ck / two_star;
    let (m2_tilde, w1) = if m1_tilde > 0.0 && a > 0.0 {
        young_m2(model, k, m1_tilde)
    } else {
        (None, Verdict::Refuted)
    };
    let energy_condition = m2_tilde.map(|m2| 2.0 * ((2.0 * k + 1.0) * n + 2.0) * u0.energy + m2 * u0.mass);
    let case_d = Verdict::from_bool(m1_tilde > 0.0)
        .and(w1)
        .and(Verdict::from_bool(energy_condition.map(|e| e <= 0.0).unwrap_or(false)))
        .and(y_ok);

    let holds = case_c.holds() || case_d.holds();
    Ok(BlowupCheck {
        k: Some(k),
        m1_tilde: (m1_tilde > 0.0).then_some(m1_tilde),
        m2_tilde,
        energy_condition,
        y0,
        case_c,
        case_d,
        blowup_time_bound: holds.then(|| u0.variance / (4.0 * y0)),
    })
}

/// `M̃2` such that `2|(k+1)N+1||G| + N|F|s <= A M̃1 h^{2*} + M̃2 s`.
///
/// Each source term `c s^e` with `1 < e < β = α_max 2*` is split as
/// `ε s^β + C(ε) s` with the optimal `C(ε) = c ((e-1)/(ε(β-1)))^((e-1)/(β-e)) (β-e)/(β-1)`.
/// Half of `A M̃1 a_max^{2*}` is shared evenly among those terms.
fn young_m2(model: &NonlinearityModel, k: f64, m1_tilde: f64) -> (Option<f64>, Verdict) {
    let n = model.n();
    let two_star = model.critical_exponent();
    let (Some(h), Some(f1), Some(f2)) = (power_terms(&model.h), power_terms(&model.f1), power_terms(&model.f2))
    else {
        return (None, Verdict::Refuted);
    };
    let top = h[h.len() - 1];
    let beta = top.exponent * two_star;
    let budget = model.a_eff() * m1_tilde * pow_crit(top.coeff, two_star);
    let ck = 2.0 * ((k + 1.0) * n + 1.0).abs();
    let terms: Vec<(f64, f64)> = f1
        .iter()
        .chain(f2.iter())
        .filter(|t| t.coeff > 0.0)
        .map(|t| (t.coeff * (ck / (t.exponent + 1.0) + n), t.exponent + 1.0))
        .collect();
    let mut m2 = 0.0;
    let split: Vec<&(f64, f64)> = terms.iter().filter(|(_, e)| *e > 1.0 && *e < beta).collect();
    let eps = if split.is_empty() { 0.0 } else { 0.5 * budget / split.len() as f64 };
    let beta_low = h[0].exponent * two_star;
    for (c, e) in &terms {
        if *e > beta || (*e < 1.0 && *e <= beta_low) {
            return (None, Verdict::Refuted);
        }
        if *e < 1.0 {
            // The lowest critical power could still absorb it near zero.
            return (None, Verdict::SampledFalse);
        }
        if *e == 1.0 {
            m2 += c;
        } else if *e == beta {
            if *c > 0.5 * budget {
                return (None, Verdict::Refuted);
            }
        } else {
            let s_star = (c * (e - 1.0) / (eps * (beta - 1.0))).powf(1.0 / (beta - e));
            m2 += c * s_star.powf(e - 1.0) * (beta - e) / (beta - 1.0);
        }
    }
    (Some(m2), Verdict::Proved)
}

// ---------------------------------------------------------------------------
// Smallness hypothesis

/// Witnesses for the Hölder split of `|G1|` when `h = Σ a_i s^α_i` and
/// `F1 = Σ b_j s^p_j` with `2α_1 - 1 + 2/N <= p_j <= 2α_m - 1 + 2/N`.
pub fn gamma_set(model: &NonlinearityModel) -> Result<GammaSet> {
    let n = model.n();
    let two_star = model.critical_exponent();
    let h = match &model.h {
        ScalarFamily::PowerSum(t) => t,
        _ => return Err(Error::NoWitness("h is not a power sum".into())),
    };
    let f1 = power_terms(&model.f1).ok_or_else(|| Error::NoWitness("F1 is not a power sum".into()))?;
    let (lo, hi) = (h[0], h[h.len() - 1]);
    let gam = |alpha: f64| (1.0 / (2.0 * alpha + 2.0 / n), alpha * two_star / (2.0 * alpha + 2.0 / n));
    let (g1, g2) = gam(lo.exponent);
    let (g1t, g2t) = gam(hi.exponent);
    if !(g1 < 1.0 && g2 > 1.0 && g1t < 1.0 && g2t > 1.0) {
        return Err(Error::NoWitness(format!("exponent range of h gives gamma outside (0,1) x (1,inf)")));
    }
    let p_lo = 2.0 * lo.exponent - 1.0 + 2.0 / n;
    let p_hi = 2.0 * hi.exponent - 1.0 + 2.0 / n;
    for t in f1 {
        if t.exponent < p_lo - 1e-12 || t.exponent > p_hi + 1e-12 {
            return Err(Error::NoWitness(format!(
                "F1 exponent {} outside [2α_1 - 1 + 2/N, 2α_m - 1 + 2/N] = [{p_lo}, {p_hi}]",
                t.exponent
            )));
        }
    }
    let b: f64 = f1.iter().map(|t| t.coeff / (t.exponent + 1.0)).sum();
    Ok(GammaSet {
        gamma1: g1,
        gamma2: g2,
        gamma1_tilde: g1t,
        gamma2_tilde: g2t,
        m1: b.powf(g1),
        m1_prime: b.powf(g2) / pow_crit(lo.coeff, two_star),
        m2: b.powf(g1t),
        m2_prime: b.powf(g2t) / pow_crit(hi.coeff, two_star),
    })
}

/// `M_r(u0) = Σ_j (m_j M(u0))^{2/N} (m'_j C_s)^{(N-2)/N}`.
pub fn compute_mr(model: &NonlinearityModel, u0: &DiagnosticsRecord) -> Result<MrReport> {
    let gammas = gamma_set(model)?;
    let n = model.n();
    let cs = sobolev_best_constant(model.dimension)?;
    let term = |m: f64, mp: f64| (m * u0.mass).powf(2.0 / n) * (mp * cs).powf((n - 2.0) / n);
    let terms = [term(gammas.m1, gammas.m1_prime), term(gammas.m2, gammas.m2_prime)];
    Ok(MrReport { gammas, sobolev_cs: cs, terms, mr: terms[0] + terms[1] })
}

pub fn classify_case_and_l(model: &NonlinearityModel) -> Classification {
    let n = model.n();
    let two_star = model.critical_exponent();
    let mut symbolic = true;
    let mut sampled = |e: &dyn Fn(f64) -> f64, r: &dyn Fn(f64) -> f64| -> f64 {
        symbolic = false;
        sampled_k(e, r)
    };

    let k1 = match &model.h {
        ScalarFamily::PowerSum(t) => snap((1.0 - 2.0 * t[0].exponent).max(0.0), 1.0),
        ScalarFamily::Exponential { .. } => 0.0,
        ScalarFamily::Zero => 0.0,
    };
    let k2 = match &model.h {
        ScalarFamily::PowerSum(t) => snap(((n + 2.0) / two_star - n * t[0].exponent).max(0.0), n),
        ScalarFamily::Exponential { .. } => (n + 2.0) / two_star,
        ScalarFamily::Zero => 0.0,
    };
    let k3 = match &model.f1 {
        ScalarFamily::Zero => 0.0,
        ScalarFamily::PowerSum(t) => {
            let top = t.iter().filter(|t| t.coeff > 0.0).map(|t| t.exponent).fold(f64::NEG_INFINITY, f64::max);
            if top.is_finite() {
                snap((n * (top + 1.0) - (n + 2.0)).max(0.0), n)
            } else {
                0.0
            }
        }
        ScalarFamily::Exponential { .. } => sampled(
            &|s| (n + 2.0) * model.f1.antiderivative(s) - n * model.f1.value(s) * s,
            &|s| model.f1.antiderivative(s).abs(),
        ),
    };
    let k4 = match &model.f2 {
        ScalarFamily::Zero => 0.0,
        ScalarFamily::PowerSum(t) => {
            let low = t.iter().filter(|t| t.coeff > 0.0).map(|t| t.exponent).fold(f64::INFINITY, f64::min);
            if low.is_finite() {
                snap(((n + 2.0) - n * (low + 1.0)).max(0.0), n)
            } else {
                0.0
            }
        }
        ScalarFamily::Exponential { .. } => sampled(
            &|s| n * model.f2.value(s) * s - (n + 2.0) * model.f2.antiderivative(s),
            &|s| model.f2.antiderivative(s),
        ),
    };
    let k = [k1, k2, k3, k4];
    let class = if k.iter().any(|k| !k.is_finite()) {
        CaseClass::Neither
    } else if k.iter().all(|&k| k == 0.0) {
        CaseClass::Case1
    } else {
        CaseClass::Case2 { l: (n * k1).max(k2).max(k3).max(k4) }
    };
    Classification { dimension: model.dimension, class, k, symbolic }
}

/// Sampled smallest `k >= 0` with `e >= -k r`; infinite when the ratio keeps
/// growing at the top of the samples.
fn sampled_k(e: &dyn Fn(f64) -> f64, r: &dyn Fn(f64) -> f64) -> f64 {
    sampled_sup(|s| {
        let rv = r(s);
        if rv > 0.0 {
            -e(s) / rv
        } else {
            f64::NAN
        }
    })
    .0
}

// ---------------------------------------------------------------------------
// Constants

fn hypothesis(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}

/// `∫_{R^N} (1 + |x|)^{-kappa} dx = ω Γ(N) Γ(kappa - N) / Γ(kappa)`.
fn weight_integral(dimension: usize, kappa: f64) -> f64 {
    let n = dimension as f64;
    sphere_area(dimension) * gamma(n) * gamma(kappa - n) / gamma(kappa)
}

/// `λ = l (1 + M_r)/(1 - M_r)`, the loss in the Case-2 decay rate.
fn lambda(l: f64, mr: f64) -> f64 {
    l * (1.0 + mr) / (1.0 - mr)
}

pub fn morawetz_bound_constants(
    class: &Classification,
    u0: &DiagnosticsRecord,
    mr: f64,
    params: &MorawetzParams,
) -> Result<MorawetzConstants> {
    if !(0.0..1.0).contains(&mr) {
        return Err(hypothesis(format!("M_r(u0) = {mr} must lie in [0, 1)")));
    }
    if class.class == CaseClass::Neither {
        return Err(hypothesis("neither Case 1 nor Case 2 holds"));
    }
    let MorawetzParams { theta, mu, sigma, p } = *params;
    if !(theta > 0.5 && theta < 1.0) {
        return Err(hypothesis(format!("M1 needs 1/2 < theta < 1, got {theta}")));
    }
    let kappa = sigma / (1.0 - theta);
    let n = class.dimension as f64;
    if kappa <= n {
        return Err(hypothesis(format!("weight not integrable: sigma/(1-theta) = {kappa} <= N = {n}")));
    }
    let e = u0.energy;
    let c = u0.variance;
    let ratio = (1.0 + mr) / (1.0 - mr);
    let c1 = c * (1.0 + mr) / (4.0 * (1.0 - mr));
    match class.class {
        CaseClass::Case1 => {
            if !(mu > 1.0 && mu < 3.0) {
                return Err(hypothesis(format!("M2 needs 1 < mu < 3, got {mu}")));
            }
            Ok(MorawetzConstants {
                c_u0: c,
                m1: Some(m1_constant(class.dimension, e, c, mr, theta, sigma)),
                m2: Some(ratio * (2.0 * e / (3.0 - mu) + c / (4.0 * (mu - 1.0)))),
                m3: Some(ratio * (2.0 * e + c / 4.0)),
                m4: None,
                m5: None,
                c1,
                c2: None,
                c3: None,
            })
        }
        CaseClass::Case2 { l } => {
            let lam = lambda(l, mr);
            if !(mu > 1.0 + lam && mu < 3.0) {
                return Err(hypothesis(format!(
                    "M4 needs 1 + l(1+M_r)/(1-M_r) = {} < mu < 3, got {mu}",
                    1.0 + lam
                )));
            }
            let kk = 4.0 * l * e * (1.0 + mr).powi(2) + c * (1.0 - mr);
            let m4 = ratio
                * (2.0 * e / (3.0 - mu) + c / (4.0 * (mu - 1.0)) + kk / (4.0 * ((mu - 1.0) * (1.0 - mr) - l * (1.0 + mr))));
            let m5 = (l < (1.0 - mr) / (1.0 + mr))
                .then(|| ratio * (2.0 * e + c / 4.0 + kk / (4.0 * ((1.0 - mr) - l * (1.0 + mr)))));
            let c2 = (4.0 * l * e * (1.0 + mr).powi(3) + c * (1.0 - mr * mr)) / (4.0 * (1.0 - mr).powi(2));
            let denom = (2.0 * (1.0 - mr) - l * (1.0 + mr)) * p - (1.0 - mr);
            Ok(MorawetzConstants {
                c_u0: c,
                m1: None,
                m2: None,
                m3: None,
                m4: Some(m4),
                m5,
                c1,
                c2: Some(c2),
                c3: (denom > 0.0).then(|| (1.0 - mr) / denom),
            })
        }
        CaseClass::Neither => unreachable!(),
    }
}

fn m1_constant(dimension: usize, e: f64, c: f64, mr: f64, theta: f64, sigma: f64) -> f64 {
    let ratio = (1.0 + mr) / (1.0 - mr);
    let kappa = sigma / (1.0 - theta);
    ratio.powf(theta)
        * ((2.0 * e).powf(theta) + (c / 4.0).powf(theta) / (2.0 * theta - 1.0))
        * weight_integral(dimension, kappa).powf(1.0 - theta)
}

/// A `mu` inside the admissible range of the time-weighted estimate: 2 in
/// Case 1, the midpoint of `(1 + λ, 3)` in Case 2.
pub fn default_mu(class: &Classification, mr: f64) -> f64 {
    match class.class {
        CaseClass::Case2 { l } => 0.5 * (1.0 + lambda(l, mr) + 3.0),
        _ => 2.0,
    }
}

// ---------------------------------------------------------------------------
// Spacetime bounds

pub fn holder_exponents(g: &GammaSet, r: f64) -> HolderExponents {
    let (g1, g2, g1t, g2t) = (g.gamma1, g.gamma2, g.gamma1_tilde, g.gamma2_tilde);
    HolderExponents {
        inv_tau1_tilde: (1.0 - g1) / (g2 - g1),
        inv_tau1_tilde_prime: (g2 - 1.0) / (g2 - g1),
        inv_tau2_tilde: (1.0 - g1t) / (g2t - g1t),
        inv_tau2_tilde_prime: (g2t - 1.0) / (g2t - g1t),
        r,
        inv_tau3: (g2 - r) / (g2 - g1),
        inv_tau4: (r - g1) / (g2 - g1),
        inv_tau3_tilde: (g2t - r) / (g2t - g1t),
        inv_tau4_tilde: (r - g1t) / (g2t - g1t),
    }
}

fn inadmissible(msg: String) -> Error {
    Error::Inadmissible(msg)
}

/// `(a + b)^(1/x) <= c (a^(1/x) + b^(1/x))` for the constant returned here.
fn root_split(x: f64) -> f64 {
    if x >= 1.0 {
        1.0
    } else {
        2f64.powf((1.0 - x) / x)
    }
}

/// Right-hand sides of the `L^p_t` bound on `∫Ψ dx` and the `L^q_t L^r_x`
/// bound on `G1`.
pub fn spacetime_bound_constants(
    class: &Classification,
    u0: &DiagnosticsRecord,
    mr: &MrReport,
    p: f64,
    q: f64,
    r: f64,
) -> Result<SpacetimeBounds> {
    let m = mr.mr;
    if !(0.0..1.0).contains(&m) {
        return Err(hypothesis(format!("M_r(u0) = {m} must lie in [0, 1)")));
    }
    if !(p > 0.5) {
        return Err(inadmissible(format!("p > 1/2 violated: p = {p}")));
    }
    if !(q > 0.0) {
        return Err(inadmissible(format!("q > 0 violated: q = {q}")));
    }
    let g = &mr.gammas;
    if !(r >= 1.0) {
        return Err(inadmissible(format!("r >= 1 violated: r = {r}")));
    }
    if !(r < g.gamma2) {
        return Err(inadmissible(format!("r < gamma2 violated: r = {r}, gamma2 = {}", g.gamma2)));
    }
    if !(r < g.gamma2_tilde) {
        return Err(inadmissible(format!("r < gamma2~ violated: r = {r}, gamma2~ = {}", g.gamma2_tilde)));
    }
    let e = u0.energy;
    let c = u0.variance;
    let two_star = critical_exponent(class.dimension);
    let ratio = (1.0 + m) / (1.0 - m);
    let c1t = root_split(p);
    let ex = holder_exponents(g, r);
    let cs = mr.sobolev_cs;
    let mass = u0.mass;
    let c3t = if q <= r { 1.0 } else { 2f64.powf((q - r) / r) };
    let c4t = root_split(q);
    // Per Hölder half: (1/tau3, 1/tau4, m, m').
    let halves = [
        (ex.inv_tau3, ex.inv_tau4, g.m1, g.m1_prime, g.gamma1, g.gamma2, "r(gamma2-gamma1)/(2*(r-gamma1))"),
        (ex.inv_tau3_tilde, ex.inv_tau4_tilde, g.m2, g.m2_prime, g.gamma1_tilde, g.gamma2_tilde, "r(gamma2~-gamma1~)/(2*(r-gamma1~))"),
    ];
    match class.class {
        CaseClass::Case1 => {
            let h_bound = c1t * ratio * (2.0 * e + c / (4.0 * (2.0 * p - 1.0).powf(1.0 / p)));
            let mut i_bound = 0.0;
            for (it3, it4, mm, mp, g1, g2, name) in halves {
                let q_min = r * (g2 - g1) / (two_star * (r - g1));
                if !(q > q_min) {
                    return Err(inadmissible(format!("q > {name} = {q_min} violated: q = {q}")));
                }
                let rt4 = r / it4;
                let ee = two_star / (2.0 * rt4);
                let c0 = (mm * mass).powf(it3 / r) * (mp * cs).powf(it4 / r);
                let c4 = c0 * c3t.powf(1.0 / q) * c4t;
                i_bound += c4
                    * c4t
                    * ((2.0 * e * ratio).powf(ee)
                        + (c * ratio / 4.0).powf(ee) * (rt4 / (two_star * q - rt4)).powf(1.0 / q));
            }
            Ok(SpacetimeBounds { p, q, r, h_bound, i_bound, exponents: ex })
        }
        CaseClass::Case2 { l } => {
            let slack = 2.0 * (1.0 - m) - l * (1.0 + m);
            if !(l > 0.0 && slack > 0.0) {
                return Err(inadmissible(format!(
                    "0 < l < 2(1-M_r)/(1+M_r) violated: l = {l}, threshold = {}",
                    2.0 * (1.0 - m) / (1.0 + m)
                )));
            }
            let p_min = (1.0 - m) / slack;
            if !(p > p_min) {
                return Err(inadmissible(format!("p > (1-M_r)/(2(1-M_r)-l(1+M_r)) = {p_min} violated: p = {p}")));
            }
            let c2t = if p < 1.0 { 1.0 } else { 2f64.powf((p - 1.0) / p) };
            let big_c1 = c * (1.0 + m) / (4.0 * (1.0 - m));
            let big_c2 = (4.0 * l * e * (1.0 + m).powi(3) + c * (1.0 - m * m)) / (4.0 * (1.0 - m).powi(2));
            let big_c3 = (1.0 - m) / (slack * p - (1.0 - m));
            let h_bound = 2.0 * e * ratio * c1t
                + c1t * c1t * c2t * big_c1 / (2.0 * p - 1.0).powf(1.0 / p)
                + c1t * c1t * c2t * big_c2 * big_c3.powf(1.0 / p);
            let kk = 4.0 * l * e * (1.0 + m).powi(2) + c * (1.0 - m);
            let mut i_bound = 0.0;
            for (it3, it4, mm, mp, g1, g2, name) in halves {
                let q_min = r * (g2 - g1) / (two_star * (r - g1)) * 2.0 * (1.0 - m) / slack;
                if !(q > q_min) {
                    return Err(inadmissible(format!(
                        "q > {name} * 2(1-M_r)/(2(1-M_r)-l(1+M_r)) = {q_min} violated: q = {q}"
                    )));
                }
                let rt4 = r / it4;
                let ee = two_star / (2.0 * rt4);
                let c0 = (mm * mass).powf(it3 / r) * (mp * cs).powf(it4 / r);
                let c4 = c0 * c3t.powf(1.0 / q) * c4t;
                let c5 = c4 * c4t * ratio.powf(ee);
                let ct = if two_star * q <= 2.0 * rt4 { 1.0 } else { 2f64.powf((two_star * q - 2.0 * rt4) / (2.0 * rt4)) };
                let tail = (2.0 * rt4 * (1.0 - m)
                    / ((2.0 * two_star * q - 2.0 * rt4) * (1.0 - m) - two_star * q * l * (1.0 + m)))
                    .powf(1.0 / q);
                i_bound += c5
                    * ((2.0 * e).powf(ee)
                        + ct.powf(1.0 / q) * c4t * (c / 4.0).powf(ee) * (rt4 / (two_star * q - rt4)).powf(1.0 / q))
                    + c5 * ct.powf(1.0 / q) * c4t * (kk / (4.0 * (1.0 - m))).powf(ee) * tail;
            }
            Ok(SpacetimeBounds { p, q, r, h_bound, i_bound, exponents: ex })
        }
        CaseClass::Neither => Err(hypothesis("neither Case 1 nor Case 2 holds")),
    }
}

// ---------------------------------------------------------------------------
// Report

/// Optional spacetime exponents requested for the report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeParams {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaReport {
    pub dimension: usize,
    pub sign: CriticalSign,
    pub global: Option<GlobalExistence>,
    pub blowup: Option<BlowupCheck>,
    pub mr: std::result::Result<MrReport, String>,
    pub sobolev_cs: f64,
    pub classification: Classification,
    pub morawetz_params: MorawetzParams,
    pub morawetz: std::result::Result<MorawetzConstants, String>,
    pub spacetime: Option<std::result::Result<SpacetimeBounds, String>>,
    pub assumption: AssumptionCheck,
    pub notes: Vec<String>,
}

impl CriteriaReport {
    pub fn mr_value(&self) -> Option<f64> {
        self.mr.as_ref().ok().map(|m| m.mr)
    }

    pub fn blowup_time_bound(&self) -> Option<f64> {
        self.blowup.as_ref().and_then(|b| b.blowup_time_bound)
    }

    pub fn to_json(&self) -> Value {
        let mut o = Map::new();
        o.insert("dimension".into(), json!(self.dimension));
        o.insert("sign".into(), json!(self.sign.as_str()));
        let (ca, m1b, cb, m2b) = match &self.global {
            Some(g) => (Some(g.case_a), g.m1_bar, Some(g.case_b), g.m2_bar),
            None => (None, None, None, None),
        };
        o.insert("case_a".into(), verdict_json(ca));
        o.insert("m1_bar".into(), opt(m1b));
        o.insert("case_b".into(), verdict_json(cb));
        o.insert("m2_bar".into(), opt(m2b));
        let b = self.blowup.as_ref();
        o.insert("case_c".into(), verdict_json(b.map(|b| b.case_c)));
        o.insert("case_d".into(), verdict_json(b.map(|b| b.case_d)));
        o.insert("k".into(), opt(b.and_then(|b| b.k)));
        o.insert("m1_tilde".into(), opt(b.and_then(|b| b.m1_tilde)));
        o.insert("m2_tilde".into(), opt(b.and_then(|b| b.m2_tilde)));
        o.insert("blowup_energy_condition".into(), opt(b.and_then(|b| b.energy_condition)));
        o.insert("y0".into(), opt(b.map(|b| b.y0)));
        match &self.mr {
            Ok(m) => {
                let g = m.gammas;
                o.insert(
                    "gamma_set".into(),
                    obj(&[
                        ("gamma1", g.gamma1),
                        ("gamma2", g.gamma2),
                        ("gamma1_tilde", g.gamma1_tilde),
                        ("gamma2_tilde", g.gamma2_tilde),
                        ("m1", g.m1),
                        ("m1_prime", g.m1_prime),
                        ("m2", g.m2),
                        ("m2_prime", g.m2_prime),
                    ]),
                );
                o.insert("mr".into(), num(m.mr));
                o.insert("mr_below_one".into(), json!(m.below_one()));
            }
            Err(e) => {
                o.insert("gamma_set".into(), Value::Null);
                o.insert("mr".into(), Value::Null);
                o.insert("mr_error".into(), json!(e));
            }
        }
        o.insert("sobolev_cs".into(), num(self.sobolev_cs));
        let c = &self.classification;
        o.insert("case_class".into(), json!(c.class.as_str()));
        o.insert("case1_signs".into(), json!(c.case1_signs()));
        o.insert("case2_bounds".into(), json!(c.k.map(|k| k.is_finite())));
        o.insert("k_values".into(), Value::Array(c.k.iter().map(|&k| num(k)).collect()));
        o.insert("classification_symbolic".into(), json!(c.symbolic));
        o.insert("l_value".into(), opt(c.class.l()));
        let p = self.morawetz_params;
        o.insert(
            "morawetz_params".into(),
            obj(&[("theta", p.theta), ("mu", p.mu), ("sigma", p.sigma), ("p", p.p)]),
        );
        match &self.morawetz {
            Ok(k) => {
                let mut m = Map::new();
                for (name, v) in [
                    ("M1", k.m1),
                    ("M2", k.m2),
                    ("M3", k.m3),
                    ("M4", k.m4),
                    ("M5", k.m5),
                    ("C1", Some(k.c1)),
                    ("C2", k.c2),
                    ("C3", k.c3),
                    ("C_u0", Some(k.c_u0)),
                ] {
                    m.insert(name.into(), opt(v));
                }
                o.insert("morawetz_constants".into(), Value::Object(m));
            }
            Err(e) => {
                o.insert("morawetz_constants".into(), Value::Null);
                o.insert("morawetz_error".into(), json!(e));
            }
        }
        match &self.mr {
            Ok(m) => {
                let h = holder_exponents(&m.gammas, self.spacetime_r());
                o.insert(
                    "holder_exponents".into(),
                    obj(&[
                        ("inv_tau1_tilde", h.inv_tau1_tilde),
                        ("inv_tau1_tilde_prime", h.inv_tau1_tilde_prime),
                        ("inv_tau2_tilde", h.inv_tau2_tilde),
                        ("inv_tau2_tilde_prime", h.inv_tau2_tilde_prime),
                        ("r", h.r),
                        ("inv_tau3", h.inv_tau3),
                        ("inv_tau4", h.inv_tau4),
                        ("inv_tau3_tilde", h.inv_tau3_tilde),
                        ("inv_tau4_tilde", h.inv_tau4_tilde),
                    ]),
                );
            }
            Err(_) => {
                o.insert("holder_exponents".into(), Value::Null);
            }
        }
        match &self.spacetime {
            Some(Ok(s)) => {
                o.insert(
                    "spacetime_constants".into(),
                    obj(&[("p", s.p), ("q", s.q), ("r", s.r), ("H_bound", s.h_bound), ("I_bound", s.i_bound)]),
                );
            }
            Some(Err(e)) => {
                o.insert("spacetime_constants".into(), Value::Null);
                o.insert("spacetime_error".into(), json!(e));
            }
            None => {
                o.insert("spacetime_constants".into(), Value::Null);
            }
        }
        o.insert("blowup_time_bound".into(), opt(self.blowup_time_bound()));
        o.insert(
            "assumption_floor".into(),
            json!({
                "sampled_floor": num(self.assumption.sampled_floor),
                "holds_on_samples": self.assumption.holds_on_samples,
                "holds_exactly": self.assumption.holds_exactly,
            }),
        );
        o.insert("notes".into(), json!(self.notes));
        Value::Object(o)
    }

    fn spacetime_r(&self) -> f64 {
        match &self.spacetime {
            Some(Ok(s)) => s.r,
            _ => 1.0,
        }
    }
}

/// Float as a JSON number with 17 significant digits; non-finite as null.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    text.parse::<Number>().map(Value::Number).unwrap_or(Value::Null)
}

fn opt(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

fn obj(items: &[(&str, f64)]) -> Value {
    Value::Object(items.iter().map(|(k, v)| (k.to_string(), num(*v))).collect())
}

fn verdict_json(v: Option<Verdict>) -> Value {
    match v {
        Some(v) => json!({ "holds": v.holds(), "confidence": v.as_str() }),
        None => Value::Null,
    }
}

/// Evaluates every criterion for `model` at the initial record `u0`.
pub fn evaluate(
    model: &NonlinearityModel,
    u0: &DiagnosticsRecord,
    params: &MorawetzParams,
    spacetime: Option<SpacetimeParams>,
) -> Result<CriteriaReport> {
    let global = match model.sign {
        CriticalSign::Focusing => None,
        _ => Some(check_global_existence(model)?),
    };
    let blowup = match model.sign {
        CriticalSign::Focusing => Some(check_blowup(model, u0)?),
        _ => None,
    };
    let mr = if model.f1.is_zero() {
        Err("F1 vanishes: |G1| = 0 and M_r(u0) = 0 without a Hölder split".to_string())
    } else {
        compute_mr(model, u0).map_err(|e| e.to_string())
    };
    let mr_value = match (&mr, model.f1.is_zero()) {
        (_, true) => Some(0.0),
        (Ok(m), _) => Some(m.mr),
        _ => None,
    };
    let classification = classify_case_and_l(model);
    let morawetz = match mr_value {
        Some(m) => morawetz_bound_constants(&classification, u0, m, params).map_err(|e| e.to_string()),
        None => Err("no M_r(u0) witness".to_string()),
    };
    let spacetime = spacetime.map(|sp| match &mr {
        Ok(m) => spacetime_bound_constants(&classification, u0, m, sp.p, sp.q, sp.r).map_err(|e| e.to_string()),
        Err(e) => Err(e.clone()),
    });
    let mut notes = Vec::new();
    if spacetime.is_some() {
        notes.push("I_bound uses (m3, m3', m4, m4') = (m1, m1', m2, m2'); interpretive".to_string());
    }
    if !classification.symbolic {
        notes.push("classification sampled on the standard grid".to_string());
    }
    Ok(CriteriaReport {
        dimension: model.dimension,
        sign: model.sign,
        global,
        blowup,
        mr,
        sobolev_cs: sobolev_best_constant(model.dimension)?,
        classification,
        morawetz_params: *params,
        morawetz,
        spacetime,
        assumption: model.assumption_floor(),
        notes,
    })
}
