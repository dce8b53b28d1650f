//! Conformal weights `W^M_ρ`, the modified family `Ŵ^n_{M,ρ}`, Gaussian kernels
//! and their closed-form log-Hessians.

mod constants;

pub use constants::{
    alpha_mass, ball_volume, c_const, c_const_sphere_form, c_hat, lattice_bound, ln_c_hat,
    ln_sphere_area, sphere_area, sphere_entropy_exact,
};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `W^M_ρ` as a function of the squared distance to its center.
#[inline]
pub fn conformal_weight_r2(exponent: f64, rho: f64, r2: f64) -> f64 {
    (rho / (1.0 + 0.25 * rho * rho * r2)).powf(exponent)
}

/// `Ŵ^n_{M,ρ}` as a function of the squared distance to its center.
#[inline]
pub fn modified_weight_r2(n: f64, exponent: f64, rho: f64, r2: f64) -> f64 {
    (4.0 * PI * rho).powf(-0.5 * n) * (-exponent * (r2 / (4.0 * exponent * rho)).ln_1p()).exp()
}

/// Gaussian kernel `(4πt)^{-n/2} e^{-r²/4t}`.
#[inline]
pub fn gaussian_r2(n: f64, t: f64, r2: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5 * n) * (-r2 / (4.0 * t)).exp()
}

/// `W^M_ρ(x − x₀) = ρ^M (1 + ¼ρ²|x−x₀|²)^{−M}`.
pub fn weight_eval(exponent: f64, rho: f64, x0: &[f64], x: &[f64]) -> f64 {
    conformal_weight_r2(exponent, rho, dist2(x, x0))
}

/// `Ŵ^n_{n+m,ρ}(x − x₀)`.
pub fn what_eval(n: usize, m: usize, rho: f64, x0: &[f64], x: &[f64]) -> f64 {
    modified_weight_r2(n as f64, (n + m) as f64, rho, dist2(x, x0))
}

/// `(4πt)^{-n/2} e^{-|x−x₀|²/4t}`; `n` is a dimension exponent and may differ from `x.len()`.
pub fn gaussian_eval(n: usize, t: f64, x0: &[f64], x: &[f64]) -> f64 {
    gaussian_r2(n as f64, t, dist2(x, x0))
}

/// `∂_ρ W^M_ρ = −(M/ρ) W^M_ρ + (2M/ρ²) W^{M+1}_ρ`.
pub fn weight_scale_derivative(exponent: f64, rho: f64, x0: &[f64], x: &[f64]) -> f64 {
    let r2 = dist2(x, x0);
    -exponent / rho * conformal_weight_r2(exponent, rho, r2)
        + 2.0 * exponent / (rho * rho) * conformal_weight_r2(exponent + 1.0, rho, r2)
}

/// Closed-form `∇² log W^M_ρ` at `x` (weight centered at the origin).
pub fn log_hessian_weight(exponent: f64, rho: f64, x: &[f64]) -> DMatrix<f64> {
    let dim = x.len();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let q = 1.0 + 0.25 * rho * rho * r2;
    let diag = -0.5 * exponent * rho * rho / q;
    let outer = 0.25 * exponent * rho.powi(4) / (q * q);
    DMatrix::from_fn(dim, dim, |i, j| outer * x[i] * x[j] + if i == j { diag } else { 0.0 })
}

/// The weight families whose virtual time is known in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightKind {
    /// `W^M_ρ`
    Conformal { exponent: f64, rho: f64 },
    /// `Ŵ^n_{n+m,ρ}`
    Modified { n: usize, m: usize, rho: f64 },
    /// heat kernel at time `t`
    Gaussian { t: f64 },
}

/// Virtual time `sup{τ : 2τ∇² log u + g ≥ 0}` of a weight family.
pub fn virtual_time_closed(kind: WeightKind) -> f64 {
    match kind {
        WeightKind::Conformal { exponent, rho } => 1.0 / (exponent * rho * rho),
        WeightKind::Modified { rho, .. } => rho,
        WeightKind::Gaussian { t } => t,
    }
}

/// A conformal weight with its center.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalWeight {
    pub exponent: f64,
    pub rho: f64,
    pub center: Vec<f64>,
}

impl ConformalWeight {
    pub fn eval(&self, x: &[f64]) -> f64 {
        weight_eval(self.exponent, self.rho, &self.center, x)
    }
}

/// A modified weight `Ŵ^n_{n+m,ρ}` with its center.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedWeight {
    pub n: usize,
    pub m: usize,
    pub rho: f64,
    pub center: Vec<f64>,
}

impl ModifiedWeight {
    pub fn eval(&self, x: &[f64]) -> f64 {
        what_eval(self.n, self.m, self.rho, &self.center, x)
    }
}

/// Heat kernel with dimension exponent `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    pub n: usize,
    pub t: f64,
    pub center: Vec<f64>,
}

impl GaussianKernel {
    pub fn eval(&self, x: &[f64]) -> f64 {
        gaussian_eval(self.n, self.t, &self.center, x)
    }
}
