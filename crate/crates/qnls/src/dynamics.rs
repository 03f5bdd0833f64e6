//! Crank–Nicolson time stepping for
//! `i u_t = Δu + 2u h'(ρ) Δh(ρ) + F(ρ) u ∓ A h(ρ)^{2*-1} h'(ρ) u`, `ρ = |u|^2`.
//!
//! All nonlinear terms are collected in the real potential
//! `W[u] = 2h'(ρ) Δh(ρ) + F(ρ) - σ A h^{2*-1} h'` evaluated at the midpoint
//! `m = (uⁿ + uⁿ⁺¹)/2`. Because `W` is real and the discrete Laplacian is
//! symmetric in the quadrature weights, the converged step conserves the
//! discrete mass exactly. The midpoint equation is solved by Newton's method
//! with a block-tridiagonal Jacobian; a plain fixed point on `W` diverges
//! whenever `4h'(ρ)^2 ρ` exceeds one, independent of the step size.

use std::sync::Arc;

use num_complex::Complex64;

use crate::diagnostics::{diagnose_with, Checkpoint, DiagnoseOptions, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::nonlinearity::{pow_crit, NonlinearityModel, RHO_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub dt_min: f64,
    pub t_end: f64,
    /// Relative Newton update size at which a step is accepted.
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub blowup_factor: f64,
    /// Accepted steps between records.
    pub output_stride: usize,
    /// Records between saved full fields.
    pub checkpoint_every: usize,
    /// Density shift `ε` used by the stepper for profiles with a singular
    /// derivative at zero: it advances `h_ε(s) = h(s + ε) - h(ε)`.
    pub density_shift: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            dt_min: 1e-9,
            t_end: 1.0,
            picard_tol: 1e-10,
            picard_max_iters: 100,
            blowup_factor: 1e6,
            output_stride: 10,
            checkpoint_every: 100,
            density_shift: 1e-14,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail(format!("dt = {} must be positive", self.dt));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt) {
            return fail(format!("dt_min = {} must lie in (0, dt)", self.dt_min));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return fail(format!("t_end = {} must be non-negative", self.t_end));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol <= 1e-6) {
            return fail(format!("picard_tol = {} must lie in (0, 1e-6]", self.picard_tol));
        }
        if self.picard_max_iters == 0 {
            return fail("picard_max_iters must be positive".into());
        }
        if !(self.blowup_factor >= 1e3) {
            return fail(format!("blowup_factor = {} must be at least 1e3", self.blowup_factor));
        }
        if !(self.density_shift >= 0.0 && self.density_shift < 1e-6) {
            return fail(format!("density_shift = {} must lie in [0, 1e-6)", self.density_shift));
        }
        if self.output_stride == 0 || self.checkpoint_every == 0 {
            return fail("output_stride and checkpoint_every must be positive".into());
        }
        Ok(())
    }
}

/// What ended a run early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupTrigger {
    /// The gradient functional crossed `blowup_factor` times its initial value.
    Threshold,
    /// Step halving went below `dt_min`.
    StepCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Completed,
    BlowupDetected { t_star: f64, trigger: BlowupTrigger },
    IterationFailure { t: f64 },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowupDetected { .. } => "blowup_detected",
            RunStatus::IterationFailure { .. } => "iteration_failure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub series: Vec<DiagnosticsRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub final_field: RadialField,
    pub accepted_steps: usize,
    pub halvings: usize,
    pub newton_iterations: usize,
    pub final_dt: f64,
    /// First time the field exceeded `1e-6 ‖u‖∞` on `r >= 0.9 r_max`.
    pub domain_warning: Option<f64>,
}

/// Relative amplitude below which nodes are left out of the Newton
/// convergence test.
pub const TAIL_CUT: f64 = 1e-6;

/// Accepted steps at a reduced step size before it is doubled again.
const REGROW_AFTER: usize = 20;

/// Midpoint-rule stepper with cached stencil and work arrays.
pub struct Stepper<'a> {
    model: &'a NonlinearityModel,
    grid: Arc<RadialGrid>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    tol: f64,
    max_iters: usize,
    h0: f64,
    shift: f64,
    work: Work,
    /// Newton iterations spent so far.
    pub iterations: usize,
}

#[derive(Default)]
struct Work {
    hs: Vec<f64>,
    hp: Vec<f64>,
    lap_h: Vec<f64>,
    d: Vec<f64>,
    dloc: Vec<f64>,
    w: Vec<f64>,
    rhs: Vec<[f64; 2]>,
    cprime: Vec<[[f64; 2]; 2]>,
    dprime: Vec<[f64; 2]>,
}

pub type Block = [[f64; 2]; 2];

impl<'a> Stepper<'a> {
    pub fn new(model: &'a NonlinearityModel, grid: Arc<RadialGrid>, tol: f64, max_iters: usize) -> Self {
        let (lower, upper) = grid.laplacian_coefficients();
        let n = grid.node_count();
        let work = Work {
            hs: vec![0.0; n],
            hp: vec![0.0; n],
            lap_h: vec![0.0; n],
            d: vec![0.0; n],
            dloc: vec![0.0; n],
            w: vec![0.0; n],
            rhs: vec![[0.0; 2]; n],
            cprime: vec![[[0.0; 2]; 2]; n],
            dprime: vec![[0.0; 2]; n],
        };
        let h0 = model.h.value(0.0);
        Self { model, grid, lower, upper, tol, max_iters, h0, shift: 0.0, work, iterations: 0 }
    }

    /// Advances `h_ε(s) = h(s + ε) - h(ε)` in place of `h` when `h` has a
    /// term with exponent below one. Such profiles make `h(|u|^2)` non-smooth
    /// in `u` wherever `u` nearly vanishes, which stalls Newton in the far
    /// tail; below `ε` the shifted profile is linear in `s`.
    pub fn with_density_shift(mut self, eps: f64) -> Self {
        if self.model.h.terms().iter().any(|t| t.exponent < 1.0) {
            self.shift = eps;
            self.h0 = self.model.h.value(eps);
        }
        self
    }

    /// Evaluates `W` and the density derivative `D` of its local part at `m`.
    fn potentials(&mut self, m: &[Complex64]) {
        let model = self.model;
        let two_star = model.critical_exponent();
        let sa = model.sigma() * model.a_eff();
        let quasilinear = !model.h.is_zero();
        let offset = self.h0 - model.h.value(0.0);
        let wk = &mut self.work;
        for (j, v) in m.iter().enumerate() {
            let rho = v.norm_sqr();
            let rc = rho.max(RHO_FLOOR);
            let mut vloc = 0.0;
            let mut dloc = 0.0;
            if quasilinear || sa != 0.0 {
                let rs = rho + self.shift;
                let [h, hp, hpp] = model.h.eval3(rs.max(RHO_FLOOR));
                wk.hs[j] = h - self.h0;
                let h = h - offset;
                wk.hp[j] = hp;
                if sa != 0.0 {
                    let hc2 = pow_crit(h, two_star - 2.0);
                    vloc -= sa * hc2 * h * hp;
                    dloc -= sa * hc2 * ((two_star - 1.0) * hp * hp + h * hpp);
                }
                // 2 h'' Δh is added below once Δh is known; stash h'' in d.
                wk.d[j] = hpp;
            } else {
                wk.hs[j] = 0.0;
                wk.hp[j] = 0.0;
                wk.d[j] = 0.0;
            }
            if !model.f1.is_zero() {
                let [f, fp, _] = model.f1.eval3(rc);
                vloc += f;
                dloc += fp;
            }
            if !model.f2.is_zero() {
                let [f, fp, _] = model.f2.eval3(rc);
                vloc -= f;
                dloc -= fp;
            }
            wk.w[j] = vloc;
            wk.dloc[j] = dloc;
        }
        if quasilinear {
            self.grid.laplacian_real(&wk.hs, &mut wk.lap_h);
            for j in 0..m.len() {
                wk.w[j] += 2.0 * wk.hp[j] * wk.lap_h[j];
                wk.d[j] = 2.0 * wk.d[j] * wk.lap_h[j] + wk.dloc[j];
            }
        } else {
            for j in 0..m.len() {
                wk.d[j] = wk.dloc[j];
            }
        }
    }

    /// One Crank–Nicolson step from `u` with step `dt`, starting Newton from
    /// `guess`.
    pub fn step_from(&mut self, u: &[Complex64], guess: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
        let n = u.len();
        let a = 0.5 * dt;
        let linear = self.model.is_linear();
        let mut v = guess.to_vec();
        let mut m = vec![Complex64::new(0.0, 0.0); n];
        let mut last = f64::INFINITY;
        for iter in 0..self.max_iters {
            self.iterations += 1;
            for j in 0..n {
                m[j] = 0.5 * (u[j] + v[j]);
            }
            self.potentials(&m);
            let wk = &mut self.work;
            // Residual R = v - u + 2ia (L m + W m).
            for j in 0..n {
                let left = if j > 0 { m[j - 1] } else { Complex64::new(0.0, 0.0) };
                let right = if j + 1 < n { m[j + 1] } else { Complex64::new(0.0, 0.0) };
                let lm = self.lower[j] * (left - m[j]) + self.upper[j] * (right - m[j]);
                let z = lm + wk.w[j] * m[j];
                let dv = v[j] - u[j];
                wk.rhs[j] = [-(dv.re - 2.0 * a * z.im), -(dv.im + 2.0 * a * z.re)];
            }
            self.solve_newton(&m, a);
            let wk = &self.work;
            // Update and iterate sizes in the mass norm, restricted to nodes
            // above TAIL_CUT times the peak amplitude. Far out in the tail
            // the quasilinear coefficients of singular profiles such as
            // h = s^(1/2) are not smooth in u and Newton stalls near the
            // round-off floor there, while those nodes carry no mass.
            let weights = self.grid.weights();
            let mut peak: f64 = 0.0;
            for j in 0..n {
                v[j] += Complex64::new(wk.dprime[j][0], wk.dprime[j][1]);
                peak = peak.max(v[j].norm());
            }
            let cut = TAIL_CUT * peak;
            let mut delta = 0.0;
            let mut scale = 0.0;
            for j in 0..n {
                if v[j].norm() >= cut {
                    delta += weights[j] * (wk.dprime[j][0].powi(2) + wk.dprime[j][1].powi(2));
                    scale += weights[j] * v[j].norm_sqr();
                }
            }
            let (delta, scale): (f64, f64) = (delta.sqrt(), scale.sqrt());
            if !delta.is_finite() || !scale.is_finite() {
                return Err(Error::IterationFailure { iterations: iter + 1, defect: f64::NAN });
            }
            if linear || delta <= self.tol * scale.max(f64::MIN_POSITIVE) {
                return Ok(v);
            }
            // A growing update after the first few iterations means Newton
            // has left its basin; the caller retries with a smaller step.
            if iter >= 6 && delta > 4.0 * last {
                return Err(Error::IterationFailure { iterations: iter + 1, defect: delta / scale });
            }
            last = delta;
        }
        Err(Error::IterationFailure { iterations: self.max_iters, defect: last })
    }

    /// Solves the Newton system for the update, leaving it in `dprime`.
    fn solve_newton(&mut self, m: &[Complex64], a: f64) {
        let n = m.len();
        let Work { hp, d: dd, w, rhs, cprime, dprime, .. } = &mut self.work;
        let (hp, dd, w) = (&*hp, &*dd, &*w);
        let lower = &self.lower;
        let upper = &self.upper;
        let block = |j: usize, k: usize| -> Block {
            let lj = if k + 1 == j {
                lower[j]
            } else if k == j + 1 {
                upper[j]
            } else {
                -(lower[j] + upper[j])
            };
            let kjk = 2.0 * hp[j] * lj * hp[k] + if j == k { dd[j] } else { 0.0 };
            let hjk = lj + if j == k { w[j] } else { 0.0 };
            let g = 2.0 * a * kjk;
            let (pj, qj, pk, qk) = (m[j].re, m[j].im, m[k].re, m[k].im);
            let id = if j == k { 1.0 } else { 0.0 };
            [[id - g * qj * pk, -a * hjk - g * qj * qk], [a * hjk + g * pj * pk, id + g * pj * qk]]
        };
        // Block Thomas sweep.
        let mut prev_c: Block = [[0.0; 2]; 2];
        let mut prev_d = [0.0; 2];
        for j in 0..n {
            let mut b = block(j, j);
            let mut d = rhs[j];
            if j > 0 {
                let al = block(j, j - 1);
                b = sub(b, mul(al, prev_c));
                let ad = mulv(al, prev_d);
                d = [d[0] - ad[0], d[1] - ad[1]];
            }
            let bi = inv(b);
            let c = if j + 1 < n { mul(bi, block(j, j + 1)) } else { [[0.0; 2]; 2] };
            let dp = mulv(bi, d);
            cprime[j] = c;
            dprime[j] = dp;
            prev_c = c;
            prev_d = dp;
        }
        for j in (0..n - 1).rev() {
            let cx = mulv(cprime[j], dprime[j + 1]);
            dprime[j] = [dprime[j][0] - cx[0], dprime[j][1] - cx[1]];
        }
    }
}

fn mul(a: Block, b: Block) -> Block {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn mulv(a: Block, x: [f64; 2]) -> [f64; 2] {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

fn sub(a: Block, b: Block) -> Block {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

fn inv(a: Block) -> Block {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// One Crank–Nicolson step with default Newton settings.
pub fn step(field: &RadialField, model: &NonlinearityModel, dt: f64) -> Result<RadialField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Validation(format!("dt = {dt} must be positive")));
    }
    field.check()?;
    let cfg = SolverConfig::default();
    let mut stepper = Stepper::new(model, field.grid().clone(), cfg.picard_tol, cfg.picard_max_iters)
        .with_density_shift(cfg.density_shift);
    let v = stepper.step_from(field.values(), field.values(), dt)?;
    let out = RadialField::from_raw(field.grid().clone(), v);
    out.check()?;
    Ok(out)
}

/// Cheap evaluation of `∫ |∇u|^2 + |∇h(|u|^2)|^2`.
fn gradient_functional(grid: &RadialGrid, model: &NonlinearityModel, u: &[Complex64], scratch: &mut Vec<f64>) -> f64 {
    let h0 = model.h.value(0.0);
    scratch.clear();
    scratch.extend(u.iter().map(|v| model.h.value(v.norm_sqr()) - h0));
    grid.gradient_sq_complex(u) + grid.gradient_sq_real(scratch)
}

fn outer_ratio(grid: &RadialGrid, u: &[Complex64]) -> f64 {
    let cut = 0.9 * grid.r_max();
    let mut outer: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for (r, v) in grid.nodes().iter().zip(u) {
        let a = v.norm();
        peak = peak.max(a);
        if *r >= cut {
            outer = outer.max(a);
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        outer / peak
    }
}

pub fn run(u0: &RadialField, model: &NonlinearityModel, cfg: &SolverConfig) -> RunOutcome {
    run_with(u0, model, cfg, &DiagnoseOptions::default())
}

pub fn run_with(u0: &RadialField, model: &NonlinearityModel, cfg: &SolverConfig, opts: &DiagnoseOptions) -> RunOutcome {
    let grid = u0.grid().clone();
    let fail = |field: RadialField| RunOutcome {
        status: RunStatus::IterationFailure { t: 0.0 },
        series: Vec::new(),
        checkpoints: Vec::new(),
        final_field: field,
        accepted_steps: 0,
        halvings: 0,
        newton_iterations: 0,
        final_dt: cfg.dt,
        domain_warning: None,
    };
    let first = match diagnose_with(u0, model, 0.0, opts) {
        Ok(r) => r,
        Err(_) => return fail(u0.clone()),
    };
    let opts = DiagnoseOptions { reference_energy: Some(first.energy), ..*opts };
    let initial_functional = first.blowup_functional();
    let mut series = vec![first];
    let mut checkpoints = vec![Checkpoint { t: 0.0, field: u0.clone() }];

    let mut stepper = Stepper::new(model, grid.clone(), cfg.picard_tol, cfg.picard_max_iters)
        .with_density_shift(cfg.density_shift);
    let mut u = u0.values().to_vec();
    let mut prev: Option<(Vec<Complex64>, f64)> = None;
    let mut t = 0.0;
    let mut dt = cfg.dt;
    let mut accepted = 0usize;
    let mut halvings = 0usize;
    let mut streak = 0usize;
    let mut since_record = 0usize;
    let mut domain_warning = None;
    let mut scratch = Vec::new();
    let mut status = RunStatus::Completed;
    let t_eps = 1e-12 * cfg.t_end.max(1.0);

    let push_record = |t: f64, u: &[Complex64], series: &mut Vec<DiagnosticsRecord>, checkpoints: &mut Vec<Checkpoint>| {
        let field = RadialField::from_raw(grid.clone(), u.to_vec());
        if let Ok(rec) = diagnose_with(&field, model, t, &opts) {
            series.push(rec);
            if (series.len() - 1) % cfg.checkpoint_every == 0 {
                checkpoints.push(Checkpoint { t, field });
            }
        }
    };

    while t < cfg.t_end - t_eps {
        let h = dt.min(cfg.t_end - t);
        let guess: Vec<Complex64> = match &prev {
            Some((p, pdt)) if *pdt == h => u.iter().zip(p).map(|(a, b)| 2.0 * a - b).collect(),
            _ => u.clone(),
        };
        match stepper.step_from(&u, &guess, h) {
            Ok(v) => {
                if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    status = RunStatus::IterationFailure { t };
                    break;
                }
                prev = Some((std::mem::replace(&mut u, v), h));
                t += h;
                accepted += 1;
                streak += 1;
                if dt < cfg.dt && streak >= REGROW_AFTER {
                    dt = (2.0 * dt).min(cfg.dt);
                    streak = 0;
                }
                since_record += 1;
                if domain_warning.is_none() && outer_ratio(&grid, &u) >= 1e-6 {
                    domain_warning = Some(t);
                }
                let functional = gradient_functional(&grid, model, &u, &mut scratch);
                if initial_functional > 0.0 && functional >= cfg.blowup_factor * initial_functional {
                    push_record(t, &u, &mut series, &mut checkpoints);
                    status = RunStatus::BlowupDetected { t_star: t, trigger: BlowupTrigger::Threshold };
                    break;
                }
                if since_record == cfg.output_stride || t >= cfg.t_end - t_eps {
                    push_record(t, &u, &mut series, &mut checkpoints);
                    since_record = 0;
                }
            }
            Err(_) => {
                dt *= 0.5;
                halvings += 1;
                streak = 0;
                prev = None;
                if dt < cfg.dt_min {
                    if since_record > 0 {
                        push_record(t, &u, &mut series, &mut checkpoints);
                    }
                    status = RunStatus::BlowupDetected { t_star: t, trigger: BlowupTrigger::StepCollapse };
                    break;
                }
            }
        }
    }
    let final_field = RadialField::from_raw(grid.clone(), u);
    if checkpoints.last().map(|c| c.t) != series.last().map(|r| r.t) {
        if let Some(last) = series.last() {
            checkpoints.push(Checkpoint { t: last.t, field: final_field.clone() });
        }
    }
    RunOutcome {
        status,
        series,
        checkpoints,
        final_field,
        accepted_steps: accepted,
        halvings,
        newton_iterations: stepper.iterations,
        final_dt: dt,
        domain_warning,
    }
}

/// True when the last gradient functional reaches `blowup_factor` times the
/// first. A vanishing initial functional means zero data, which stays zero.
pub fn detect_blowup(series: &[DiagnosticsRecord], cfg: &SolverConfig) -> Result<bool> {
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(Error::InsufficientSeries { needed: 1, got: 0 });
    };
    let base = first.blowup_functional();
    Ok(base > 0.0 && last.blowup_functional() >= cfg.blowup_factor * base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_inverse_round_trip() {
        let a: Block = [[2.0, 1.0], [-0.5, 3.0]];
        let p = mul(a, inv(a));
        assert!((p[0][0] - 1.0).abs() < 1e-15 && p[0][1].abs() < 1e-15);
        assert!(p[1][0].abs() < 1e-15 && (p[1][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_bounds() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig { picard_tol: 1e-3, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SolverConfig { blowup_factor: 10.0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SolverConfig { dt_min: 1.0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
    }
}
