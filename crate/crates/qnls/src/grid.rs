//! Cell-centered radial grid on `[0, r_max]` for radially symmetric fields
//! in `R^N`.
//!
//! Nodes sit at `r_j = (j + 1/2) dr`. Integrals use the midpoint rule
//! `∫ f dx = ω_{N-1} Σ f_j r_j^{N-1} dr`. The Laplacian is a three-point flux
//! stencil that is symmetric with respect to those quadrature weights, so
//! summation by parts holds exactly on the grid. Its face coefficients are
//! chosen so that `r^2` is mapped to `2N` at every interior node.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dimension: usize,
    r_max: f64,
    dr: f64,
    nodes: Vec<f64>,
    /// `r_j^{N-1}`.
    metric: Vec<f64>,
    /// Quadrature weights `ω r_j^{N-1} dr`.
    weights: Vec<f64>,
    /// Face coefficients `c_{j+1/2}`; the last entry couples to the
    /// Dirichlet ghost at `r_max`.
    faces: Vec<f64>,
    sphere_area: f64,
}

impl RadialGrid {
    pub fn new(dimension: usize, r_max: f64, node_count: usize) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::InvalidGrid(format!("dimension {dimension} < 3")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("r_max = {r_max} must be positive")));
        }
        if node_count < 64 {
            return Err(Error::InvalidGrid(format!("node_count = {node_count} < 64")));
        }
        let n = dimension as f64;
        let dr = r_max / node_count as f64;
        let nodes: Vec<f64> = (0..node_count).map(|j| (j as f64 + 0.5) * dr).collect();
        let metric: Vec<f64> = nodes.iter().map(|r| r.powi(dimension as i32 - 1)).collect();
        let area = sphere_area(dimension);
        let weights = metric.iter().map(|m| area * m * dr).collect();
        let mut faces = Vec::with_capacity(node_count);
        let mut cumulative = 0.0;
        for (j, m) in metric.iter().enumerate() {
            cumulative += m;
            let r_face = (j as f64 + 1.0) * dr;
            faces.push(n * dr * cumulative / r_face);
        }
        Ok(Self { dimension, r_max, dr, nodes, metric, weights, faces, sphere_area: area })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    /// Midpoint-rule integral of radial samples over `R^N`.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.nodes.len() {
            return Err(Error::LengthMismatch { expected: self.nodes.len(), got: samples.len() });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(self.integrate_unchecked(samples))
    }

    pub(crate) fn integrate_unchecked(&self, samples: &[f64]) -> f64 {
        samples.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    /// Integral of `f(r_j)` for a closure, without building a sample vector.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(r, w)| f(*r) * w).sum()
    }

    /// Off-diagonal Laplacian coefficients: `(lower_j, upper_j)` multiply
    /// `f_{j-1}` and `f_{j+1}`; the diagonal is `-(lower_j + upper_j)`.
    pub fn laplacian_coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        let inv = 1.0 / (self.dr * self.dr);
        let n = self.nodes.len();
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for j in 0..n {
            let scale = inv / self.metric[j];
            lower[j] = if j == 0 { 0.0 } else { self.faces[j - 1] * scale };
            upper[j] = self.faces[j] * scale;
        }
        (lower, upper)
    }

    /// Radial Laplacian of real samples, written into `out`.
    pub fn laplacian_real(&self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        let inv = 1.0 / (self.dr * self.dr);
        for j in 0..n {
            let right = if j + 1 < n { f[j + 1] } else { 0.0 };
            let flux_right = self.faces[j] * (right - f[j]);
            let flux_left = if j == 0 { 0.0 } else { self.faces[j - 1] * (f[j] - f[j - 1]) };
            out[j] = (flux_right - flux_left) * inv / self.metric[j];
        }
    }

    /// Radial Laplacian of complex samples, written into `out`.
    pub fn laplacian_complex(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = f.len();
        let inv = 1.0 / (self.dr * self.dr);
        for j in 0..n {
            let right = if j + 1 < n { f[j + 1] } else { Complex64::new(0.0, 0.0) };
            let flux_right = (right - f[j]) * self.faces[j];
            let flux_left =
                if j == 0 { Complex64::new(0.0, 0.0) } else { (f[j] - f[j - 1]) * self.faces[j - 1] };
            out[j] = (flux_right - flux_left) * (inv / self.metric[j]);
        }
    }

    /// `∫ |∂_r f|^2 dx` from face differences over interior faces.
    pub fn gradient_sq_real(&self, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..f.len().saturating_sub(1) {
            let d = f[j + 1] - f[j];
            acc += self.faces[j] * d * d;
        }
        acc * self.sphere_area / self.dr
    }

    /// Contribution of the face between the last node and the zero
    /// Dirichlet ghost, for a last sample of squared modulus `last_sq`. The
    /// gradient integrals leave it out so constants map to zero; the energy
    /// adds it back, which makes it the quadratic form the stepper conserves.
    pub fn ghost_face_sq(&self, last_sq: f64) -> f64 {
        self.faces.last().map_or(0.0, |c| c * last_sq) * self.sphere_area / self.dr
    }

    /// `∫ g |∂_r u|^2 dx` with `g` averaged onto interior faces.
    pub fn weighted_gradient_sq(&self, u: &[Complex64], g: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..u.len().saturating_sub(1) {
            let d = (u[j + 1] - u[j]).norm_sqr();
            acc += self.faces[j] * d * 0.5 * (g[j] + g[j + 1]);
        }
        acc * self.sphere_area / self.dr
    }

    /// `∫ |∂_r u|^2 dx` for complex samples.
    pub fn gradient_sq_complex(&self, u: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..u.len().saturating_sub(1) {
            acc += self.faces[j] * (u[j + 1] - u[j]).norm_sqr();
        }
        acc * self.sphere_area / self.dr
    }

    /// `Im ∫ ū (x·∇u) dx`, discretized so that `d/dt ∫|x|^2|u|^2 = -4·this`
    /// holds exactly for the semi-discrete free flow.
    pub fn momentum(&self, u: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..u.len().saturating_sub(1) {
            let r_face = (j as f64 + 1.0) * self.dr;
            acc += self.faces[j] * r_face * (u[j].conj() * u[j + 1]).im;
        }
        acc * self.sphere_area
    }
}

/// `ω_{N-1} = 2π^{N/2} / Γ(N/2)`.
pub fn sphere_area(dimension: usize) -> f64 {
    let n = dimension as f64;
    2.0 * PI.powf(n / 2.0) / gamma(n / 2.0)
}

/// Complex samples `u_j ≈ u(r_j)` on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::LengthMismatch { expected: grid.node_count(), got: values.len() });
        }
        let field = Self { grid, values };
        field.check()?;
        Ok(field)
    }

    /// Builds a field without checking finiteness.
    pub fn from_raw(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.node_count());
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().iter().map(|r| f(*r)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.node_count();
        Self { grid, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Fails with the first non-finite node.
    pub fn check(&self) -> Result<()> {
        match self.values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            Some(i) => Err(Error::PoisonedField(i)),
            None => Ok(()),
        }
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub fn integrate(grid: &RadialGrid, samples: &[f64]) -> Result<f64> {
    grid.integrate(samples)
}

pub fn radial_laplacian(field: &RadialField) -> Result<RadialField> {
    field.check()?;
    let mut out = vec![Complex64::new(0.0, 0.0); field.values.len()];
    field.grid.laplacian_complex(&field.values, &mut out);
    Ok(RadialField { grid: field.grid.clone(), values: out })
}

pub fn radial_gradient_sq_integral(field: &RadialField) -> Result<f64> {
    field.check()?;
    Ok(field.grid.gradient_sq_complex(&field.values))
}

/// Sharp constant `S` in `∫|∇w|^2 >= S ‖w‖_{2*}^2`.
pub fn sharp_sobolev_s(dimension: usize) -> Result<f64> {
    if dimension < 3 {
        return Err(Error::InvalidModel(format!("dimension {dimension} < 3")));
    }
    let n = dimension as f64;
    Ok(PI * n * (n - 2.0) * (gamma(n / 2.0) / gamma(n)).powf(2.0 / n))
}

/// `C_s` with `∫ w^{2*} <= C_s (∫|∇w|^2)^{2*/2}`, i.e. `S^{-2*/2}`.
pub fn sobolev_best_constant(dimension: usize) -> Result<f64> {
    let s = sharp_sobolev_s(dimension)?;
    let n = dimension as f64;
    let crit = 2.0 * n / (n - 2.0);
    Ok(s.powf(-crit / 2.0))
}

/// The extremal profile `(1 + r^2/(N(N-2)))^{-(N-2)/2}`.
pub fn bubble(dimension: usize, r: f64) -> f64 {
    let n = dimension as f64;
    (1.0 + r * r / (n * (n - 2.0))).powf(-(n - 2.0) / 2.0)
}

/// `∫ w^{2*} / (∫|∇w|^2)^{2*/2}` for real samples on `grid`.
pub fn sobolev_quotient(grid: &RadialGrid, w: &[f64]) -> f64 {
    let n = grid.dimension() as f64;
    let crit = 2.0 * n / (n - 2.0);
    let num = grid.integrate_unchecked(&w.iter().map(|v| v.abs().powf(crit)).collect::<Vec<_>>());
    let den = grid.gradient_sq_real(w).powf(crit / 2.0);
    num / den
}
