//! Conserved quantities, virial and pseudoconformal identities, and the
//! time-integrated Morawetz and spacetime quantities.
//!
//! The radial reduction uses `x·∇u = r ∂_r u` and `|x|^2 = r^2`. For an
//! exponential profile `h(0) = 1`, so the critical integrand `h^{2*}` is
//! measured relative to its value at zero density; otherwise the integrals
//! over `R^N` would diverge.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::nonlinearity::{pow_crit, CriticalSign, NonlinearityModel, RHO_FLOOR};

/// One time slice of every functional the criteria are stated in.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// `J = ∫ |x|^2 |u|^2`.
    pub variance: f64,
    /// `y = Im ∫ ū x·∇u`.
    pub momentum: f64,
    pub grad_u_sq: f64,
    pub grad_h_sq: f64,
    pub g1_int: f64,
    pub g2_int: f64,
    pub g1_abs_int: f64,
    pub g2_abs_int: f64,
    pub hcrit_int: f64,
    pub psi_int: f64,
    /// `θ(t)` in the form stated alongside the pseudoconformal law.
    pub theta: f64,
    /// `θ(t)` with `|∇ρ|^2` in place of `4ρ|∇u|^2`; the two agree when the
    /// phase of `u` is constant in space.
    pub theta_corrected: f64,
    pub pseudo_p: f64,
    /// Right side of the `dy/dt` identity as stated.
    pub dy_dt_stated: f64,
    /// Right side of the `dy/dt` identity with `|∇ρ|^2` kept exact.
    pub dy_dt_corrected: f64,
    /// `∫ Ψ^θ / ñ` when requested.
    pub psi_weighted: Option<f64>,
    /// `(r, ∫ |G1|^r)` when requested.
    pub g1_lr: Option<(f64, f64)>,
}

impl DiagnosticsRecord {
    /// The blowup functional `∫ |∇u|^2 + |∇h(|u|^2)|^2`.
    pub fn blowup_functional(&self) -> f64 {
        self.grad_u_sq + self.grad_h_sq
    }
}

/// Radial weight `ñ(x) = (1 + |x|)^sigma` paired with the power `θ` of `Ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialWeight {
    pub theta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DiagnoseOptions {
    /// `E(u0)` used in `P(t)`; the record's own energy when absent.
    pub reference_energy: Option<f64>,
    pub psi_weight: Option<SpatialWeight>,
    pub g1_power: Option<f64>,
}

/// Pointwise nonlinear quantities at one density value.
struct Local {
    h: f64,
    hp: f64,
    hpp: f64,
    f: f64,
    g1: f64,
    g2: f64,
    /// `h^{2*} - h(0)^{2*}`.
    crit: f64,
    /// `h^{2*-1} h'`.
    crit_factor: f64,
}

impl Local {
    fn new(model: &NonlinearityModel, rho: f64, h0: f64, h0_crit: f64) -> Self {
        let two_star = model.critical_exponent();
        let [h, _, _] = model.h.eval3(rho);
        let [_, hp, hpp] = model.h.eval3(rho.max(RHO_FLOOR));
        let f = model.f1.value(rho) - model.f2.value(rho);
        Self {
            h: h - h0,
            hp,
            hpp,
            f,
            g1: model.f1.antiderivative(rho),
            g2: model.f2.antiderivative(rho),
            crit: pow_crit(h, two_star) - h0_crit,
            crit_factor: pow_crit(h, two_star - 1.0) * hp,
        }
    }
}

pub fn diagnose(field: &RadialField, model: &NonlinearityModel, t: f64) -> Result<DiagnosticsRecord> {
    diagnose_with(field, model, t, &DiagnoseOptions::default())
}

pub fn diagnose_with(
    field: &RadialField,
    model: &NonlinearityModel,
    t: f64,
    opts: &DiagnoseOptions,
) -> Result<DiagnosticsRecord> {
    field.check()?;
    let grid = field.grid().as_ref();
    if grid.dimension() != model.dimension {
        return Err(Error::InvalidModel(format!(
            "grid dimension {} differs from model dimension {}",
            grid.dimension(),
            model.dimension
        )));
    }
    let u = field.values();
    let n = model.n();
    let two_star = model.critical_exponent();
    let a = model.a_eff();
    let sigma = model.sigma();
    let h0 = model.h.value(0.0);
    let h0_crit = pow_crit(h0, two_star);

    let rho: Vec<f64> = u.iter().map(|v| v.norm_sqr()).collect();
    let local: Vec<Local> = rho.iter().map(|&s| Local::new(model, s, h0, h0_crit)).collect();
    let w = grid.weights();
    let sum = |f: &dyn Fn(usize) -> f64| -> f64 { (0..rho.len()).map(|j| f(j) * w[j]).sum() };

    let mass = sum(&|j| rho[j]);
    let variance = sum(&|j| grid.nodes()[j].powi(2) * rho[j]);
    let momentum = grid.momentum(u);
    let grad_u_sq = grid.gradient_sq_complex(u);
    let hvals: Vec<f64> = local.iter().map(|l| l.h).collect();
    let grad_h_sq = grid.gradient_sq_real(&hvals);
    let g1_int = sum(&|j| local[j].g1);
    let g2_int = sum(&|j| local[j].g2);
    let g1_abs_int = sum(&|j| local[j].g1.abs());
    let g2_abs_int = sum(&|j| local[j].g2.abs());
    let hcrit_int = sum(&|j| local[j].crit);
    let psi_int = grad_h_sq + g1_abs_int + g2_abs_int + a / two_star * hcrit_int;
    let ghost = match (u.last(), hvals.last()) {
        (Some(v), Some(h)) => grid.ghost_face_sq(v.norm_sqr()) + grid.ghost_face_sq(h * h),
        _ => 0.0,
    };
    let energy = 0.5 * (grad_u_sq + grad_h_sq + ghost - (g1_int - g2_int) + sigma * a / two_star * hcrit_int);

    // Quasilinear weights, written so that a vanishing density never
    // multiplies a clamped singular derivative into NaN.
    let bracket: Vec<f64> = local
        .iter()
        .zip(&rho)
        .map(|(l, &s)| 2.0 * l.hpp * l.hp * s.max(RHO_FLOOR) + l.hp * l.hp)
        .collect();
    let stated_theta_weight: Vec<f64> = bracket.iter().zip(&rho).map(|(b, &s)| b * s).collect();
    let stated_virial_weight: Vec<f64> =
        local.iter().zip(&rho).map(|(l, &s)| l.hpp * l.hp * s * s).collect();
    let corrected_virial_weight: Vec<f64> =
        local.iter().zip(&rho).map(|(l, &s)| l.hpp * l.hp * s.max(RHO_FLOOR)).collect();
    let rho_c: Vec<Complex64> = rho.iter().map(|&s| Complex64::new(s, 0.0)).collect();

    let source_term = sum(&|j| (n + 2.0) * local[j].g1 - (n + 2.0) * local[j].g2 - n * local[j].f * rho[j]);
    let crit_theta = sum(&|j| n * local[j].crit_factor * rho[j] - (n + 2.0) / two_star * local[j].crit);
    let theta_common = -source_term - sigma * a * crit_theta;
    let theta = -4.0 * n * grid.weighted_gradient_sq(u, &stated_theta_weight) + theta_common;
    let theta_corrected = -n * grid.weighted_gradient_sq(&rho_c, &bracket) + theta_common;

    let virial_common = -2.0 * grad_u_sq - (n + 2.0) * grad_h_sq
        + n * sum(&|j| rho[j] * local[j].f - (local[j].g1 - local[j].g2))
        - sigma * a * n * sum(&|j| local[j].crit_factor * rho[j] - local[j].crit / two_star);
    let dy_dt_stated = virial_common - 8.0 * n * grid.weighted_gradient_sq(u, &stated_virial_weight);
    let dy_dt_corrected =
        virial_common - 2.0 * n * grid.weighted_gradient_sq(&rho_c, &corrected_virial_weight);

    let e_ref = opts.reference_energy.unwrap_or(energy);
    let pseudo_p = variance + 4.0 * t * momentum + 8.0 * t * t * e_ref;

    let psi_weighted = opts.psi_weight.map(|sw| {
        let psi = psi_density_from(grid, &local, a / two_star);
        grid.nodes()
            .iter()
            .zip(&psi)
            .zip(w)
            .map(|((r, p), wj)| p.powf(sw.theta) * (1.0 + r).powf(-sw.sigma) * wj)
            .sum()
    });
    let g1_lr = opts.g1_power.map(|r| (r, sum(&|j| local[j].g1.abs().powf(r))));

    Ok(DiagnosticsRecord {
        t,
        mass,
        energy,
        variance,
        momentum,
        grad_u_sq,
        grad_h_sq,
        g1_int,
        g2_int,
        g1_abs_int,
        g2_abs_int,
        hcrit_int,
        psi_int,
        theta,
        theta_corrected,
        pseudo_p,
        dy_dt_stated,
        dy_dt_corrected,
        psi_weighted,
        g1_lr,
    })
}

/// Pointwise `Ψ(u)` at the nodes. `|∇h|^2` at a node is the mean of the
/// squared difference quotients on its two faces, with zero slope at the
/// origin.
pub fn psi_density(field: &RadialField, model: &NonlinearityModel) -> Result<Vec<f64>> {
    field.check()?;
    let two_star = model.critical_exponent();
    let h0 = model.h.value(0.0);
    let h0_crit = pow_crit(h0, two_star);
    let local: Vec<Local> =
        field.values().iter().map(|v| Local::new(model, v.norm_sqr(), h0, h0_crit)).collect();
    Ok(psi_density_from(field.grid(), &local, model.a_eff() / two_star))
}

fn psi_density_from(grid: &RadialGrid, local: &[Local], crit_coeff: f64) -> Vec<f64> {
    let n = local.len();
    let dr = grid.dr();
    let face_sq: Vec<f64> = (0..n - 1).map(|j| ((local[j + 1].h - local[j].h) / dr).powi(2)).collect();
    (0..n)
        .map(|j| {
            let left = if j == 0 { 0.0 } else { face_sq[j - 1] };
            let right = if j + 1 < n { face_sq[j] } else { left };
            let l = &local[j];
            0.5 * (left + right) + l.g1.abs() + l.g2.abs() + crit_coeff * l.crit
        })
        .collect()
}

/// Trapezoid rule on possibly non-uniform abscissae.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(tw, yw)| 0.5 * (tw[1] - tw[0]) * (yw[0] + yw[1])).sum()
}

fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..t.len() {
        acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
        out.push(acc);
    }
    out
}

/// Three-point derivative at interior sample `i` on a non-uniform mesh.
fn centered_derivative(t: &[f64], y: &[f64], i: usize) -> f64 {
    let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
    (-h1 / (h0 * (h0 + h1))) * y[i - 1]
        + ((h1 - h0) / (h0 * h1)) * y[i]
        + (h0 / (h1 * (h0 + h1))) * y[i + 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    /// `max |dJ/dt + 4y|` over interior records.
    pub virial_defect: f64,
    /// `max |J|` over the series.
    pub virial_scale: f64,
    /// `max |dy/dt - rhs|` with the right side as stated.
    pub momentum_defect_stated: f64,
    /// The same with the phase-exact quasilinear term.
    pub momentum_defect_corrected: f64,
    /// `max |rhs|` over interior records.
    pub momentum_scale: f64,
    pub virial_pass: bool,
    pub momentum_pass: bool,
}

pub fn verify_virial(series: &[DiagnosticsRecord], tol: f64) -> Result<IdentityReport> {
    if series.len() < 3 {
        return Err(Error::InsufficientSeries { needed: 3, got: series.len() });
    }
    let t: Vec<f64> = series.iter().map(|r| r.t).collect();
    let j: Vec<f64> = series.iter().map(|r| r.variance).collect();
    let y: Vec<f64> = series.iter().map(|r| r.momentum).collect();
    let mut report = IdentityReport {
        virial_defect: 0.0,
        virial_scale: j.iter().fold(0.0, |m, v| m.max(v.abs())),
        momentum_defect_stated: 0.0,
        momentum_defect_corrected: 0.0,
        momentum_scale: 0.0,
        virial_pass: false,
        momentum_pass: false,
    };
    for i in 1..series.len() - 1 {
        let dj = centered_derivative(&t, &j, i);
        report.virial_defect = report.virial_defect.max((dj + 4.0 * y[i]).abs());
        let dy = centered_derivative(&t, &y, i);
        let rec = &series[i];
        report.momentum_defect_stated = report.momentum_defect_stated.max((dy - rec.dy_dt_stated).abs());
        report.momentum_defect_corrected =
            report.momentum_defect_corrected.max((dy - rec.dy_dt_corrected).abs());
        report.momentum_scale = report.momentum_scale.max(rec.dy_dt_corrected.abs());
    }
    report.virial_pass = report.virial_defect <= tol * report.virial_scale;
    report.momentum_pass = report.momentum_defect_corrected <= tol * report.momentum_scale.max(f64::MIN_POSITIVE);
    Ok(report)
}

/// Which `θ` enters the pseudoconformal residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaForm {
    Stated,
    Corrected,
}

/// `R(t) = P(t) - P(0) - 4 ∫_0^t τ θ(τ) dτ` with the stated `θ`.
pub fn pseudoconformal_residual(series: &[DiagnosticsRecord], model: &NonlinearityModel) -> Result<Vec<f64>> {
    pseudoconformal_residual_with(series, model, ThetaForm::Stated)
}

pub fn pseudoconformal_residual_with(
    series: &[DiagnosticsRecord],
    model: &NonlinearityModel,
    form: ThetaForm,
) -> Result<Vec<f64>> {
    if model.sign == CriticalSign::Focusing {
        return Err(Error::FocusingSign("the pseudoconformal law holds for the defocusing problem"));
    }
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    let t: Vec<f64> = series.iter().map(|r| r.t).collect();
    let integrand: Vec<f64> = series
        .iter()
        .map(|r| {
            r.t * match form {
                ThetaForm::Stated => r.theta,
                ThetaForm::Corrected => r.theta_corrected,
            }
        })
        .collect();
    let acc = cumulative_trapezoid(&t, &integrand);
    Ok(series.iter().zip(acc).map(|(r, a)| r.pseudo_p - first.pseudo_p - 4.0 * a).collect())
}

/// Space-time weights for the Morawetz accumulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSpec {
    /// `∫∫ Ψ dx dt`.
    Unit,
    /// `∫ t^mu (∫ Ψ dx) dt`; `mu > -1`.
    PowerOfT { mu: f64 },
    /// `∫∫ Ψ^θ / ñ(x) dx dt` from the per-record weighted integrals.
    SpatialProfile(SpatialWeight),
}

pub fn morawetz_accumulate(series: &[DiagnosticsRecord], weight: WeightSpec) -> Result<f64> {
    let t: Vec<f64> = series.iter().map(|r| r.t).collect();
    let psi: Vec<f64> = series.iter().map(|r| r.psi_int).collect();
    match weight {
        WeightSpec::Unit => Ok(trapezoid(&t, &psi)),
        WeightSpec::PowerOfT { mu } if mu >= 0.0 => {
            let y: Vec<f64> = t.iter().zip(&psi).map(|(t, p)| t.powf(mu) * p).collect();
            Ok(trapezoid(&t, &y))
        }
        WeightSpec::PowerOfT { mu } if mu > -1.0 => {
            // Integrable singularity at t = 0: integrate t^mu exactly against
            // the interval mean of ∫Ψ.
            Ok(t.windows(2)
                .zip(psi.windows(2))
                .map(|(tw, pw)| {
                    (tw[1].powf(mu + 1.0) - tw[0].powf(mu + 1.0)) / (mu + 1.0) * 0.5 * (pw[0] + pw[1])
                })
                .sum())
        }
        WeightSpec::PowerOfT { mu } => {
            Err(Error::Unsupported(format!("time weight t^{mu} is not integrable at t = 0")))
        }
        WeightSpec::SpatialProfile(sw) => {
            if !(sw.theta > 0.5 && sw.theta < 1.0) {
                return Err(Error::Unsupported(format!("θ = {} outside (1/2, 1)", sw.theta)));
            }
            let y: Vec<f64> = series
                .iter()
                .map(|r| r.psi_weighted.ok_or(Error::MissingCheckpoint("weighted Ψ integrals".into())))
                .collect::<Result<_>>()?;
            Ok(trapezoid(&t, &y))
        }
    }
}

/// A full field saved alongside the series.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub field: RadialField,
}

/// `(‖∫Ψ dx‖_{L^p_t}, ‖G1(|u|^2)‖_{L^q_t L^r_x})` over the recorded horizon.
///
/// For `r = 1` the spatial integrals come from the records. Otherwise they
/// come from per-record values of the same `r` when present, and from the
/// checkpointed fields failing that.
pub fn spacetime_norms(
    series: &[DiagnosticsRecord],
    checkpoints: &[Checkpoint],
    model: &NonlinearityModel,
    p: f64,
    q: f64,
    r: f64,
) -> Result<(f64, f64)> {
    if !(p > 0.5) {
        return Err(Error::Inadmissible(format!("p > 1/2 violated (p = {p})")));
    }
    if !(r >= 1.0) {
        return Err(Error::Inadmissible(format!("r >= 1 violated (r = {r})")));
    }
    if !(q > 0.0) {
        return Err(Error::Inadmissible(format!("q > 0 violated (q = {q})")));
    }
    let t: Vec<f64> = series.iter().map(|s| s.t).collect();
    let psi_p: Vec<f64> = series.iter().map(|s| s.psi_int.powf(p)).collect();
    let h_norm = trapezoid(&t, &psi_p).powf(1.0 / p);

    let (ts, spatial): (Vec<f64>, Vec<f64>) = if r == 1.0 {
        (t.clone(), series.iter().map(|s| s.g1_abs_int).collect())
    } else if series.iter().all(|s| matches!(s.g1_lr, Some((rr, _)) if rr == r)) {
        (t.clone(), series.iter().map(|s| s.g1_lr.map(|(_, v)| v).unwrap_or(0.0)).collect())
    } else if checkpoints.len() >= 2 {
        let mut ts = Vec::with_capacity(checkpoints.len());
        let mut vals = Vec::with_capacity(checkpoints.len());
        for c in checkpoints {
            c.field.check()?;
            let g: Vec<f64> =
                c.field.values().iter().map(|v| model.f1.antiderivative(v.norm_sqr()).abs().powf(r)).collect();
            ts.push(c.t);
            vals.push(c.field.grid().integrate(&g)?);
        }
        (ts, vals)
    } else {
        return Err(Error::MissingCheckpoint(format!("L^{r} norms need checkpointed fields")));
    };
    let integrand: Vec<f64> = spatial.iter().map(|v| v.powf(q / r)).collect();
    let i_norm = trapezoid(&ts, &integrand).powf(1.0 / q);
    Ok((h_norm, i_norm))
}

/// Least-squares slope of `log ∫Ψ` against `log t` over records with
/// `t >= t_min`.
pub fn decay_fit(series: &[DiagnosticsRecord], t_min: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|r| r.t >= t_min && r.t > 0.0 && r.psi_int > 0.0)
        .map(|r| (r.t.ln(), r.psi_int.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::InsufficientSeries { needed: 10, got: pts.len() });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
