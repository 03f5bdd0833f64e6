//! Nonlinearity families: the profile `h`, the source `F = F1 - F2`, their
//! antiderivatives and the critical term `A h^(2*-1) h'`.
//!
//! Every family is closed form, so values, first and second derivatives and
//! antiderivatives are exact up to floating point rounding.

use crate::error::{Error, Result};

/// One term `coeff * s^exponent` of a power sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub exponent: f64,
}

impl Term {
    pub fn new(coeff: f64, exponent: f64) -> Self {
        Self { coeff, exponent }
    }
}

/// A scalar function of `s >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFamily {
    Zero,
    /// `sum coeff_i s^exponent_i` with strictly increasing exponents.
    PowerSum(Vec<Term>),
    /// `coeff * exp(rate * s)`.
    Exponential { coeff: f64, rate: f64 },
}

impl ScalarFamily {
    pub fn monomial(coeff: f64, exponent: f64) -> Self {
        ScalarFamily::PowerSum(vec![Term::new(coeff, exponent)])
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ScalarFamily::Zero => true,
            ScalarFamily::PowerSum(terms) => terms.iter().all(|t| t.coeff == 0.0),
            ScalarFamily::Exponential { coeff, .. } => *coeff == 0.0,
        }
    }

    pub fn terms(&self) -> &[Term] {
        match self {
            ScalarFamily::PowerSum(terms) => terms,
            _ => &[],
        }
    }

    fn validate(&self, what: &str, strictly_positive: bool) -> Result<()> {
        match self {
            ScalarFamily::Zero => Ok(()),
            ScalarFamily::PowerSum(terms) => {
                if terms.is_empty() {
                    return Err(Error::InvalidModel(format!("{what}: empty power sum")));
                }
                for t in terms {
                    if !t.coeff.is_finite() || !t.exponent.is_finite() {
                        return Err(Error::InvalidModel(format!("{what}: non-finite term")));
                    }
                    if t.exponent <= 0.0 {
                        return Err(Error::InvalidModel(format!(
                            "{what}: exponent {} must be positive",
                            t.exponent
                        )));
                    }
                    if t.coeff < 0.0 || (strictly_positive && t.coeff == 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "{what}: coefficient {} must be {}",
                            t.coeff,
                            if strictly_positive { "positive" } else { "non-negative" }
                        )));
                    }
                }
                if terms.windows(2).any(|w| w[1].exponent <= w[0].exponent) {
                    return Err(Error::InvalidModel(format!(
                        "{what}: exponents must be strictly increasing"
                    )));
                }
                Ok(())
            }
            ScalarFamily::Exponential { coeff, rate } => {
                if !coeff.is_finite() || !rate.is_finite() || *rate <= 0.0 {
                    return Err(Error::InvalidModel(format!("{what}: exponential rate must be positive")));
                }
                if *coeff < 0.0 || (strictly_positive && *coeff == 0.0) {
                    return Err(Error::InvalidModel(format!("{what}: exponential coefficient sign")));
                }
                Ok(())
            }
        }
    }

    /// Value at `s`.
    pub fn value(&self, s: f64) -> f64 {
        match self {
            ScalarFamily::Zero => 0.0,
            ScalarFamily::PowerSum(terms) => terms.iter().map(|t| power(t.coeff, t.exponent, s)).sum(),
            ScalarFamily::Exponential { coeff, rate } => coeff * (rate * s).exp(),
        }
    }

    /// Value, first and second derivative at `s`.
    pub fn eval3(&self, s: f64) -> [f64; 3] {
        match self {
            ScalarFamily::Zero => [0.0; 3],
            ScalarFamily::PowerSum(terms) => {
                let mut out = [0.0; 3];
                for t in terms {
                    let [v, d1, d2] = power3(t.coeff, t.exponent, s);
                    out[0] += v;
                    out[1] += d1;
                    out[2] += d2;
                }
                out
            }
            ScalarFamily::Exponential { coeff, rate } => {
                let v = coeff * (rate * s).exp();
                [v, rate * v, rate * rate * v]
            }
        }
    }

    /// Value and first derivative at `s`.
    pub fn eval2(&self, s: f64) -> [f64; 2] {
        let [v, d1, _] = self.eval3(s);
        [v, d1]
    }

    /// `int_0^s f`.
    pub fn antiderivative(&self, s: f64) -> f64 {
        match self {
            ScalarFamily::Zero => 0.0,
            ScalarFamily::PowerSum(terms) => terms
                .iter()
                .map(|t| power(t.coeff / (t.exponent + 1.0), t.exponent + 1.0, s))
                .sum(),
            ScalarFamily::Exponential { coeff, rate } => coeff / rate * (rate * s).exp_m1(),
        }
    }
}

fn power(c: f64, e: f64, s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        c * spow(s, e)
    }
}

/// `s^e` for `s > 0` with fast paths for the exponents the presets use.
#[inline]
fn spow(s: f64, e: f64) -> f64 {
    if e == 1.0 {
        s
    } else if e == 0.5 {
        s.sqrt()
    } else if e.fract() == 0.0 && e.abs() < 32.0 {
        s.powi(e as i32)
    } else {
        s.powf(e)
    }
}

fn power3(c: f64, e: f64, s: f64) -> [f64; 3] {
    if s > 0.0 {
        let v = c * spow(s, e);
        let d1 = e * v / s;
        let d2 = (e - 1.0) * d1 / s;
        return [v, d1, d2];
    }
    let d1 = if e < 1.0 {
        f64::INFINITY * c.signum()
    } else if e == 1.0 {
        c
    } else {
        0.0
    };
    let d2 = if e == 1.0 || e > 2.0 {
        0.0
    } else if e == 2.0 {
        2.0 * c
    } else if e < 1.0 {
        -f64::INFINITY * c.signum()
    } else {
        f64::INFINITY * c.signum()
    };
    [0.0, d1, d2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriticalSign {
    /// Critical term `-A h^(2*-1) h' u`.
    Defocusing,
    /// Critical term `+A h^(2*-1) h' u`.
    Focusing,
    /// No critical term.
    Absent,
}

impl CriticalSign {
    pub fn as_str(&self) -> &'static str {
        match self {
            CriticalSign::Defocusing => "defocusing",
            CriticalSign::Focusing => "focusing",
            CriticalSign::Absent => "absent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GPart {
    G1,
    G2,
    G,
}

/// Smallest density used when evaluating derivatives that are singular at
/// zero. Below it the nonlinear coefficients are frozen at this value.
pub const RHO_FLOOR: f64 = 1e-120;

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearityModel {
    pub dimension: usize,
    pub h: ScalarFamily,
    pub f1: ScalarFamily,
    pub f2: ScalarFamily,
    pub a: f64,
    pub sign: CriticalSign,
}

impl NonlinearityModel {
    pub fn new(
        dimension: usize,
        h: ScalarFamily,
        f1: ScalarFamily,
        f2: ScalarFamily,
        a: f64,
        sign: CriticalSign,
    ) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::InvalidModel(format!("dimension {dimension} < 3")));
        }
        h.validate("h", true)?;
        f1.validate("f1", false).map_err(mixed_sign)?;
        f2.validate("f2", false)?;
        if !a.is_finite() || a < 0.0 || (sign != CriticalSign::Absent && a == 0.0) {
            return Err(Error::InvalidModel(format!("A = {a} must be positive")));
        }
        Ok(Self { dimension, h, f1, f2, a, sign })
    }

    /// The linear equation `i u_t = Δu`.
    pub fn free(dimension: usize) -> Result<Self> {
        Self::new(
            dimension,
            ScalarFamily::Zero,
            ScalarFamily::Zero,
            ScalarFamily::Zero,
            0.0,
            CriticalSign::Absent,
        )
    }

    pub fn n(&self) -> f64 {
        self.dimension as f64
    }

    /// `2* = 2N/(N-2)`.
    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.dimension)
    }

    /// +1 for defocusing, -1 for focusing, 0 when the term is absent.
    pub fn sigma(&self) -> f64 {
        match self.sign {
            CriticalSign::Defocusing => 1.0,
            CriticalSign::Focusing => -1.0,
            CriticalSign::Absent => 0.0,
        }
    }

    /// `A`, or zero when the critical term is absent.
    pub fn a_eff(&self) -> f64 {
        if self.sign == CriticalSign::Absent {
            0.0
        } else {
            self.a
        }
    }

    pub fn is_linear(&self) -> bool {
        self.h.is_zero() && self.f1.is_zero() && self.f2.is_zero() && self.a_eff() == 0.0
    }

    pub fn eval_h(&self, s: f64, order: u8) -> Result<f64> {
        check_domain(s)?;
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(self.h.eval3(s)[order as usize])
    }

    pub fn eval_f(&self, s: f64) -> Result<f64> {
        check_domain(s)?;
        Ok(self.f1.value(s) - self.f2.value(s))
    }

    pub fn eval_g(&self, s: f64, part: GPart) -> Result<f64> {
        check_domain(s)?;
        Ok(match part {
            GPart::G1 => self.f1.antiderivative(s),
            GPart::G2 => self.f2.antiderivative(s),
            GPart::G => self.f1.antiderivative(s) - self.f2.antiderivative(s),
        })
    }

    /// `h(s)^(2*)`.
    pub fn h_crit(&self, s: f64) -> f64 {
        pow_crit(self.h.value(s), self.critical_exponent())
    }

    /// `h^(2*-1) h'`, the factor multiplying `∓A u` in the equation.
    pub fn crit_factor(&self, s: f64) -> f64 {
        let [h, hp, _] = self.h.eval3(s.max(RHO_FLOOR));
        pow_crit(h, self.critical_exponent() - 1.0) * hp
    }

    /// The real potential `W(ρ) = F(ρ) - σ A h^(2*-1) h'` without the
    /// quasilinear part, which needs the Laplacian of `h(ρ)`.
    pub fn local_potential(&self, s: f64) -> f64 {
        let f = self.f1.value(s) - self.f2.value(s);
        let a = self.a_eff();
        if a == 0.0 {
            f
        } else {
            f - self.sigma() * a * self.crit_factor(s)
        }
    }

    /// Inf of `h(s)/sqrt(s)` over the standard sample grid, and whether a
    /// positive lower bound holds for every `s > 0`.
    pub fn assumption_floor(&self) -> AssumptionCheck {
        let floor = sample_grid()
            .into_iter()
            .filter(|&s| s > 0.0)
            .map(|s| self.h.value(s) / s.sqrt())
            .filter(|v| !v.is_nan())
            .fold(f64::INFINITY, f64::min);
        let holds_exactly = match &self.h {
            ScalarFamily::Zero => false,
            ScalarFamily::Exponential { .. } => true,
            ScalarFamily::PowerSum(terms) => {
                terms.first().map(|t| t.exponent <= 0.5).unwrap_or(false)
                    && terms.last().map(|t| t.exponent >= 0.5).unwrap_or(false)
            }
        };
        let floor = if self.h.is_zero() { 0.0 } else { floor };
        AssumptionCheck {
            sampled_floor: floor,
            holds_on_samples: floor > 0.0 && floor.is_finite(),
            holds_exactly,
        }
    }

    /// Sampled checks of the structural sign conditions on `h`, `h'` and `F2`.
    pub fn check_signs(&self) -> Result<()> {
        for s in sample_grid() {
            let [h, hp, _] = self.h.eval3(s);
            if h < 0.0 || hp < 0.0 {
                return Err(Error::InvalidModel(format!("h or h' negative at s = {s:e}")));
            }
            if self.f2.value(s) < 0.0 {
                return Err(Error::InvalidModel(format!("F2 negative at s = {s:e}")));
            }
        }
        Ok(())
    }
}

fn mixed_sign(e: Error) -> Error {
    match e {
        Error::InvalidModel(msg) if msg.contains("coefficient") => {
            Error::Unsupported(format!("sign-changing F1 ({msg})"))
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionCheck {
    pub sampled_floor: f64,
    pub holds_on_samples: bool,
    pub holds_exactly: bool,
}

pub fn critical_exponent(dimension: usize) -> f64 {
    let n = dimension as f64;
    2.0 * n / (n - 2.0)
}

/// `x^p` with integer fast paths; `2*` is an integer for N = 3, 4, 6.
pub fn pow_crit(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() < 64.0 {
        x.powi(p as i32)
    } else if x == 0.0 {
        0.0
    } else {
        x.powf(p)
    }
}

fn check_domain(s: f64) -> Result<()> {
    if s < 0.0 || s.is_nan() {
        Err(Error::Domain(s))
    } else {
        Ok(())
    }
}

/// 512 log-spaced points on `[1e-8, 1e8]` plus `s = 0`.
pub fn sample_grid() -> Vec<f64> {
    log_grid(512, 1e-8, 1e8, true)
}

pub fn log_grid(count: usize, lo: f64, hi: f64, with_zero: bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    if with_zero {
        out.push(0.0);
    }
    let (a, b) = (lo.ln(), hi.ln());
    for i in 0..count {
        let x = a + (b - a) * i as f64 / (count - 1).max(1) as f64;
        out.push(x.exp());
    }
    out
}

/// Function tables checked by [`verify_tables`].
pub struct CalculusTables<'a> {
    pub h: &'a dyn Fn(f64) -> [f64; 3],
    pub f1: &'a dyn Fn(f64) -> f64,
    pub f2: &'a dyn Fn(f64) -> f64,
    pub g1: &'a dyn Fn(f64) -> f64,
    pub g2: &'a dyn Fn(f64) -> f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub function: &'static str,
    pub s: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub pass: bool,
    pub max_defect_h1: f64,
    pub max_defect_h2: f64,
    pub max_defect_g1: f64,
    pub max_defect_g2: f64,
    pub violations: Vec<Violation>,
}

pub fn verify_calculus(model: &NonlinearityModel, sample_count: usize, tol: f64) -> Result<ConsistencyReport> {
    let h = |s: f64| model.h.eval3(s);
    let f1 = |s: f64| model.f1.value(s);
    let f2 = |s: f64| model.f2.value(s);
    let g1 = |s: f64| model.f1.antiderivative(s);
    let g2 = |s: f64| model.f2.antiderivative(s);
    verify_tables(&CalculusTables { h: &h, f1: &f1, f2: &f2, g1: &g1, g2: &g2 }, sample_count, tol)
}

/// Centered-difference consistency of `h -> h' -> h''` and `G_i' = F_i`,
/// plus `G_i(0) = 0`.
pub fn verify_tables(t: &CalculusTables, sample_count: usize, tol: f64) -> Result<ConsistencyReport> {
    if sample_count < 16 {
        return Err(Error::InsufficientSeries { needed: 16, got: sample_count });
    }
    let mut report = ConsistencyReport {
        pass: true,
        max_defect_h1: 0.0,
        max_defect_h2: 0.0,
        max_defect_g1: 0.0,
        max_defect_g2: 0.0,
        violations: Vec::new(),
    };
    for (name, g) in [("G1", t.g1), ("G2", t.g2)] {
        let g0 = g(0.0);
        if g0 != 0.0 {
            report.violations.push(Violation { function: name, s: 0.0, defect: g0.abs() });
        }
    }
    for s in log_grid(sample_count, 1e-8, 1e8, false) {
        let step = 1e-4 * s;
        let (lo, hi) = (s - step, s + step);
        let [_, h1, h2] = (t.h)(s);
        let checks = [
            ("h'", ((t.h)(hi)[0] - (t.h)(lo)[0]) / (2.0 * step), h1),
            ("h''", ((t.h)(hi)[1] - (t.h)(lo)[1]) / (2.0 * step), h2),
            ("G1", ((t.g1)(hi) - (t.g1)(lo)) / (2.0 * step), (t.f1)(s)),
            ("G2", ((t.g2)(hi) - (t.g2)(lo)) / (2.0 * step), (t.f2)(s)),
        ];
        for (name, numeric, exact) in checks {
            if !numeric.is_finite() || !exact.is_finite() {
                continue;
            }
            let defect = (numeric - exact).abs() / (1.0 + exact.abs());
            let slot = match name {
                "h'" => &mut report.max_defect_h1,
                "h''" => &mut report.max_defect_h2,
                "G1" => &mut report.max_defect_g1,
                _ => &mut report.max_defect_g2,
            };
            *slot = slot.max(defect);
            if defect > tol {
                report.violations.push(Violation { function: name, s, defect });
            }
        }
    }
    report.pass = report.violations.is_empty();
    Ok(report)
}
