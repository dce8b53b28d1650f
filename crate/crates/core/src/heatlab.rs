//! Positive densities on uniform grids in `ℝ^N` (`N ≤ 2`), heat-kernel
//! convolution, and numerical checks of log-concavity under the heat flow.

use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta, beta_reg};
use statrs::function::erf::{erf, erfc};

use crate::error::{ensure, Error, Result};
use crate::quadrature::Rule1d;
use crate::weights::{ball_volume, c_hat};

/// Nodes below this fraction of the peak are ignored by Hessian scans.
pub const LOG_FLOOR: f64 = 1e-12;
/// Heat kernels are truncated at this many standard deviations `√(2t)`.
pub const KERNEL_RADII: f64 = 12.0;
/// Default bound on the mass a weight density loses outside the grid.
pub const DEFAULT_TAIL_TOL: f64 = 1e-4;

/// The uniform grid `{−L + i h}^N`, `i = 0..nodes`, with `h = 2L / (nodes − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub extent: f64,
    pub nodes: usize,
}

impl GridSpec {
    pub fn new(dim: usize, extent: f64, nodes: usize) -> Result<Self> {
        ensure!(dim == 1 || dim == 2, "grid dimension must be 1 or 2, got {dim}");
        ensure!(extent > 0.0, "extent must be positive, got {extent}");
        ensure!(nodes >= 8, "need at least 8 nodes per axis, got {nodes}");
        Ok(Self { dim, extent, nodes })
    }

    /// Grid with spacing `h` covering `[−L, L]`, `L = h (nodes − 1) / 2`.
    pub fn with_spacing(dim: usize, nodes: usize, h: f64) -> Result<Self> {
        ensure!(h > 0.0, "spacing must be positive");
        Self::new(dim, 0.5 * h * (nodes - 1) as f64, nodes)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / (self.nodes - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Per-axis indices of flat node `k` (last axis fastest).
    pub fn index(&self, k: usize) -> [usize; 2] {
        if self.dim == 1 {
            [k, 0]
        } else {
            [k / self.nodes, k % self.nodes]
        }
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        let idx = self.index(k);
        (0..self.dim).map(|d| self.coord(idx[d])).collect()
    }

    /// Distance from node `k` to the nearest face of the grid box.
    pub fn boundary_distance(&self, k: usize) -> f64 {
        let idx = self.index(k);
        (0..self.dim)
            .map(|d| idx[d].min(self.nodes - 1 - idx[d]) as f64 * self.spacing())
            .fold(f64::INFINITY, f64::min)
    }
}

/// A positive density sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub spec: GridSpec,
    values: Vec<f64>,
    mass: f64,
    /// Width of the band along the boundary where convolution lost mass to the
    /// outside; scans skip it.
    trusted_margin: f64,
}

impl GridDensity {
    /// Wrap raw values without normalizing.
    ///
    /// Values that underflow to zero far from the bulk are accepted; they sit
    /// below [`LOG_FLOOR`] and are skipped by every log-Hessian scan.
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        ensure!(values.len() == spec.len(), "expected {} values, got {}", spec.len(), values.len());
        ensure!(values.iter().all(|v| *v >= 0.0 && v.is_finite()), "density values must be non-negative and finite");
        let mass = values.iter().sum::<f64>() * spec.cell_volume();
        ensure!(mass > 0.0, "density has zero mass");
        Ok(Self { spec, values, mass, trusted_margin: 0.0 })
    }

    /// Sample `f` and renormalize to discrete mass one.
    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync>(spec: GridSpec, f: F) -> Result<Self> {
        let values: Vec<f64> = (0..spec.len()).into_par_iter().map(|k| f(&spec.point(k))).collect();
        Ok(Self::from_values(spec, values)?.normalized())
    }

    pub fn normalized(mut self) -> Self {
        let s = 1.0 / self.mass;
        self.values.iter_mut().for_each(|v| *v *= s);
        self.mass = 1.0;
        self
    }

    /// The heat kernel `H(t, ·, x₀)`.
    pub fn gaussian(spec: GridSpec, t: f64, x0: &[f64]) -> Result<Self> {
        ensure!(t > 0.0, "t must be positive");
        ensure!(x0.len() == spec.dim, "center has wrong dimension");
        Self::from_fn(spec, |x| heat_kernel(spec.dim, t, x0, x))
    }

    /// Weighted sum of heat kernels `Σ w_k H(t_k, ·, c_k)`.
    pub fn gaussian_mixture(spec: GridSpec, components: &[(f64, f64, Vec<f64>)]) -> Result<Self> {
        ensure!(!components.is_empty(), "mixture needs a component");
        for (w, t, c) in components {
            ensure!(*w > 0.0 && *t > 0.0 && c.len() == spec.dim, "invalid mixture component");
        }
        Self::from_fn(spec, |x| components.iter().map(|(w, t, c)| w * heat_kernel(spec.dim, *t, c, x)).sum())
    }

    /// Indicator of the cube `[−a, a]^N` run through the heat flow for time `eps`.
    pub fn bump(spec: GridSpec, half_width: f64, eps: f64) -> Result<Self> {
        ensure!(half_width > 0.0 && eps > 0.0, "bump needs positive half-width and mollifier time");
        let s = 2.0 * eps.sqrt();
        let profile = move |x: f64| {
            let (lo, hi) = ((x + half_width) / s, (x - half_width) / s);
            if x > half_width {
                0.5 * (erfc(hi) - erfc(lo))
            } else if x < -half_width {
                0.5 * (erfc(-lo) - erfc(-hi))
            } else {
                0.5 * (erf(lo) - erf(hi))
            }
        };
        Self::from_fn(spec, |x| x.iter().map(|&v| profile(v)).product())
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn trusted_margin(&self) -> f64 {
        self.trusted_margin
    }

    /// Whether node `k` lies at least three cells inside the trusted region.
    fn interior(&self, k: usize) -> bool {
        self.spec.boundary_distance(k) >= self.trusted_margin + 3.0 * self.spec.spacing() - 1e-12
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Largest boundary value relative to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let worst = (0..self.spec.len())
            .filter(|&k| self.spec.boundary_distance(k) == 0.0)
            .map(|k| self.values[k])
            .fold(0.0, f64::max);
        worst / self.peak()
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.nodes.pow(self.spec.dim as u32 - 1) + if self.spec.dim == 2 { j } else { 0 }]
    }

    /// Discrete mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        let mut total = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            for (d, x) in self.spec.point(k).iter().enumerate() {
                m[d] += v * x;
            }
            total += v;
        }
        m.iter().map(|x| x / total).collect()
    }

    /// Centered second moment `∫ |x − mean|² u / ∫ u`.
    pub fn second_moment(&self) -> f64 {
        let mean = self.mean();
        let mut acc = 0.0;
        let mut total = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            let r2: f64 = self.spec.point(k).iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum();
            acc += v * r2;
            total += v;
        }
        acc / total
    }

    /// Catmull-Rom interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let spec = &self.spec;
        let h = spec.spacing();
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for d in 0..spec.dim {
            let s = (x[d] + spec.extent) / h;
            if !(0.0..=(spec.nodes - 1) as f64).contains(&s) {
                return None;
            }
            let i = (s.floor() as usize).min(spec.nodes - 2);
            base[d] = i;
            frac[d] = s - i as f64;
        }
        let weights = |f: f64| {
            let f2 = f * f;
            let f3 = f2 * f;
            [-0.5 * f3 + f2 - 0.5 * f, 1.5 * f3 - 2.5 * f2 + 1.0, -1.5 * f3 + 2.0 * f2 + 0.5 * f, 0.5 * f3 - 0.5 * f2]
        };
        let clamp = |i: isize| i.clamp(0, spec.nodes as isize - 1) as usize;
        let wx = weights(frac[0]);
        if spec.dim == 1 {
            let mut v = 0.0;
            for (a, w) in wx.iter().enumerate() {
                v += w * self.at(clamp(base[0] as isize + a as isize - 1), 0);
            }
            return Some(v);
        }
        let wy = weights(frac[1]);
        let mut v = 0.0;
        for (a, w1) in wx.iter().enumerate() {
            let i = clamp(base[0] as isize + a as isize - 1);
            for (b, w2) in wy.iter().enumerate() {
                v += w1 * w2 * self.at(i, clamp(base[1] as isize + b as isize - 1));
            }
        }
        Some(v)
    }

    /// `∫_{B_R(x₀)} u` with the interpolant and Gauss-Legendre (polar in 2D).
    pub fn ball_integral(&self, x0: &[f64], radius: f64) -> Result<f64> {
        ensure!(x0.len() == self.dim(), "center has wrong dimension");
        ensure!(radius > 0.0, "radius must be positive");
        let reach = self.spec.extent - 2.0 * self.spec.spacing();
        if x0.iter().any(|c| c.abs() + radius > reach) {
            return Err(Error::BallOutsideGrid { center: x0.to_vec(), radius });
        }
        let cells = (2.0 * radius / self.spec.spacing()).ceil() as usize;
        let n = (4 * cells).clamp(32, 2048);
        if self.dim() == 1 {
            let rule = Rule1d::gauss(x0[0] - radius, x0[0] + radius, n);
            return Ok(rule.nodes.iter().zip(&rule.weights).map(|(&x, w)| w * self.interpolate(&[x]).unwrap_or(0.0)).sum());
        }
        let radial = Rule1d::gauss(0.0, radius, n / 2);
        let angular = Rule1d::periodic(0.0, 2.0 * PI, n);
        let mut acc = 0.0;
        for (&r, wr) in radial.nodes.iter().zip(&radial.weights) {
            for (&th, wt) in angular.nodes.iter().zip(&angular.weights) {
                let p = [x0[0] + r * th.cos(), x0[1] + r * th.sin()];
                acc += wr * wt * r * self.interpolate(&p).unwrap_or(0.0);
            }
        }
        Ok(acc)
    }
}

/// `(4πt)^{−N/2} e^{−|x−x₀|²/4t}` with `N = x.len()`.
pub fn heat_kernel(dim: usize, t: f64, x0: &[f64], x: &[f64]) -> f64 {
    let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
    (4.0 * PI * t).powf(-0.5 * dim as f64) * (-r2 / (4.0 * t)).exp()
}

/// Mass of `Ĉ_{N,m} Ŵ^N_{N+m,ρ}` outside `[−L, L]^N` (for `N = 2`, outside the inscribed disk).
pub fn weight_tail_mass(dim: usize, m: usize, rho: f64, extent: f64) -> Result<f64> {
    let big_m = (dim + m) as f64;
    let a = 4.0 * big_m * rho;
    let norm = c_hat(dim, m)? * (4.0 * PI * rho).powf(-0.5 * dim as f64);
    let q = a / (a + extent * extent);
    Ok(match dim {
        1 => {
            let s = big_m - 0.5;
            norm * a.sqrt() * beta(s, 0.5) * beta_reg(s, 0.5, q)
        }
        _ => norm * PI * a / (big_m - 1.0) * q.powf(big_m - 1.0),
    })
}

/// `Ĉ_{N,m} Ŵ^N_{N+m,ρ}` on the grid, renormalized to discrete mass one.
pub fn density_from_weight(spec: GridSpec, m: usize, rho: f64, tail_tol: f64) -> Result<GridDensity> {
    ensure!(rho > 0.0, "rho must be positive");
    let h = spec.spacing();
    if h > rho.sqrt() / 10.0 {
        return Err(Error::Resolution(format!("spacing {h} exceeds sqrt(rho)/10 = {}", rho.sqrt() / 10.0)));
    }
    let tail = weight_tail_mass(spec.dim, m, rho, spec.extent)?;
    if tail > tail_tol {
        return Err(Error::TailMass { tail, tol: tail_tol });
    }
    let big_m = (spec.dim + m) as f64;
    let norm = c_hat(spec.dim, m)? * (4.0 * PI * rho).powf(-0.5 * spec.dim as f64);
    let c = 1.0 / (4.0 * big_m * rho);
    GridDensity::from_fn(spec, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        norm * (-big_m * (c * r2).ln_1p()).exp()
    })
}

fn convolve_axis(spec: &GridSpec, values: &[f64], kernel: &[f64], axis: usize) -> Vec<f64> {
    let n = spec.nodes as isize;
    let half = (kernel.len() / 2) as isize;
    let stride = if spec.dim == 2 && axis == 0 { spec.nodes } else { 1 };
    (0..values.len())
        .into_par_iter()
        .map(|k| {
            let idx = spec.index(k)[axis] as isize;
            let lo = (-half).max(idx - n + 1);
            let hi = half.min(idx);
            let mut acc = 0.0;
            for j in lo..=hi {
                let src = (k as isize - j * stride as isize) as usize;
                acc += kernel[(j + half) as usize] * values[src];
            }
            acc
        })
        .collect()
}

/// `U(t) = H(t) * u₀` by direct separable summation; the sampled kernel has unit discrete mass.
pub fn heat_at(u0: &GridDensity, t: f64) -> Result<GridDensity> {
    ensure!(t > 0.0, "t must be positive, got {t}");
    let spec = u0.spec;
    let h = spec.spacing();
    let sigma = (2.0 * t).sqrt();
    if sigma < h {
        return Err(Error::Resolution(format!("heat kernel width {sigma} below grid spacing {h}")));
    }
    if t.sqrt() > spec.extent / 6.0 {
        return Err(Error::Resolution(format!("sqrt(t) = {} exceeds L/6 = {}", t.sqrt(), spec.extent / 6.0)));
    }
    let half = (KERNEL_RADII * sigma / h).ceil() as usize;
    let mut kernel: Vec<f64> =
        (0..=2 * half).map(|j| (-((j as f64 - half as f64) * h).powi(2) / (4.0 * t)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);
    let mut values = u0.values.clone();
    for axis in 0..spec.dim {
        values = convolve_axis(&spec, &values, &kernel, axis);
    }
    let mut u = GridDensity::from_values(spec, values)?;
    u.trusted_margin = u0.trusted_margin + half as f64 * h;
    if u.trusted_margin + 3.0 * h >= spec.extent {
        return Err(Error::Resolution(format!(
            "kernel reach {} leaves no trusted interior in extent {}",
            u.trusted_margin, spec.extent
        )));
    }
    Ok(u)
}

/// The log-Hessian scan of a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualTimeEstimate {
    /// `−1/(2λ_min)`, or `+∞` when `λ_min ≥ 0`.
    pub tau: f64,
    pub min_eigenvalue: f64,
    pub argmin_node: usize,
    pub boundary_margin: f64,
    pub scanned: usize,
}

/// Smallest eigenvalue of the central-difference Hessian of `log u` at every
/// node above [`LOG_FLOOR`] at least three cells inside the trusted region, in scan order.
fn log_hessian_scan(u: &GridDensity) -> Vec<(usize, f64)> {
    let spec = u.spec;
    let n = spec.nodes;
    let h2 = spec.spacing().powi(2);
    let floor = LOG_FLOOR * u.peak();
    let logs: Vec<f64> = u.values.iter().map(|v| v.ln()).collect();
    let above = |k: usize| u.values[k] >= floor;
    let scan = |k: usize| -> Option<(usize, f64)> {
        if !u.interior(k) || !above(k) {
            return None;
        }
        if spec.dim == 1 {
            if !above(k - 1) || !above(k + 1) {
                return None;
            }
            return Some((k, (logs[k + 1] - 2.0 * logs[k] + logs[k - 1]) / h2));
        }
        let nb = [k - n, k + n, k - 1, k + 1, k - n - 1, k - n + 1, k + n - 1, k + n + 1];
        if nb.iter().any(|&j| !above(j)) {
            return None;
        }
        let fxx = (logs[k + n] - 2.0 * logs[k] + logs[k - n]) / h2;
        let fyy = (logs[k + 1] - 2.0 * logs[k] + logs[k - 1]) / h2;
        let fxy = (logs[k + n + 1] - logs[k + n - 1] - logs[k - n + 1] + logs[k - n - 1]) / (4.0 * h2);
        let mean = 0.5 * (fxx + fyy);
        let disc = (0.25 * (fxx - fyy).powi(2) + fxy * fxy).sqrt();
        Some((k, mean - disc))
    };
    (0..spec.len()).into_par_iter().filter_map(scan).collect()
}

/// Virtual time `sup{τ : 2τ ∇² log u + I ≥ 0}` from a finite-difference eigenvalue scan.
pub fn estimate_virtual_time(u: &GridDensity) -> Result<VirtualTimeEstimate> {
    let scan = log_hessian_scan(u);
    let (argmin, min_eigenvalue) = scan
        .iter()
        .copied()
        .fold(None, |acc: Option<(usize, f64)>, (k, v)| match acc {
            Some((_, best)) if best <= v => acc,
            _ => Some((k, v)),
        })
        .ok_or(Error::EmptyScan { floor: LOG_FLOOR })?;
    let tau = if min_eigenvalue < 0.0 { -0.5 / min_eigenvalue } else { f64::INFINITY };
    Ok(VirtualTimeEstimate {
        tau,
        min_eigenvalue,
        argmin_node: argmin,
        boundary_margin: u.spec.boundary_distance(argmin),
        scanned: scan.len(),
    })
}

/// `min (λ_min(∇² log U(t)) + 1/(2t))` over the scanned nodes of `U(t) = H(t) * u₀`.
pub fn check_harnack(u0: &GridDensity, t: f64) -> Result<f64> {
    let est = estimate_virtual_time(&heat_at(u0, t)?)?;
    Ok(est.min_eigenvalue + 0.5 / t)
}

/// `C₀ = ω_N^{−1} e^{1/(4(N+2))}`.
pub fn mean_value_constant(dim: usize) -> f64 {
    (0.25 / (dim as f64 + 2.0)).exp() / ball_volume(dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanValueReport {
    /// `min (C₀ T^{−N/2} ∫_{B_√T(x₀)} u − u(x₀))`.
    pub margin: f64,
    /// `min (C₀ T^{−N/2} − u(x₀))`.
    pub peak_margin: f64,
}

/// Mean-value inequality for a density with virtual time at least `T`.
pub fn check_meanvalue_bound(u: &GridDensity, big_t: f64, samples: &[Vec<f64>]) -> Result<MeanValueReport> {
    ensure!(big_t > 0.0, "T must be positive");
    ensure!(!samples.is_empty(), "no sample points");
    let c0 = mean_value_constant(u.dim()) * big_t.powf(-0.5 * u.dim() as f64);
    let mut margin = f64::INFINITY;
    let mut peak_margin = f64::INFINITY;
    for x0 in samples {
        let ball = u.ball_integral(x0, big_t.sqrt())?;
        let value = u.interpolate(x0).ok_or(Error::BallOutsideGrid { center: x0.clone(), radius: 0.0 })?;
        margin = margin.min(c0 * ball - value);
        peak_margin = peak_margin.min(c0 - value);
    }
    Ok(MeanValueReport { margin, peak_margin })
}

/// `τ(U(t)) − (τ₀ + t)` for each time.
pub fn check_tau_growth(u0: &GridDensity, tau0: f64, times: &[f64]) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| Ok(estimate_virtual_time(&heat_at(u0, t)?)?.tau - (tau0 + t)))
        .collect()
}

/// `max u − (4πT)^{−N/2}` relative to `(4πT)^{−N/2}`; non-positive for members of the class.
pub fn check_peak_bound(u: &GridDensity, big_t: f64) -> f64 {
    let bound = (4.0 * PI * big_t).powf(-0.5 * u.dim() as f64);
    (u.peak() - bound) / bound
}

/// `max |∇u|² / ((4π/e)(4πT)^{−(N+2)/2} u)` over interior nodes above the floor.
pub fn check_gradient_bound(u: &GridDensity, big_t: f64) -> f64 {
    let spec = u.spec;
    let n = spec.nodes;
    let h = spec.spacing();
    let c = 4.0 * PI / E * (4.0 * PI * big_t).powf(-0.5 * (spec.dim as f64 + 2.0));
    let floor = LOG_FLOOR * u.peak();
    (0..spec.len())
        .into_par_iter()
        .filter_map(|k| {
            if !u.interior(k) || u.values[k] < floor {
                return None;
            }
            let mut g2 = 0.0;
            for d in 0..spec.dim {
                let stride = if spec.dim == 2 && d == 0 { n } else { 1 };
                let g = (u.values[k + stride] - u.values[k - stride]) / (2.0 * h);
                g2 += g * g;
            }
            Some(g2 / (c * u.values[k]))
        })
        .reduce(|| 0.0, f64::max)
}

/// Mean and matched Gaussian time `m₂ / (2N)` of a density.
pub fn moment_match(u: &GridDensity) -> (Vec<f64>, f64) {
    (u.mean(), u.second_moment() / (2.0 * u.dim() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDistance {
    pub l1: f64,
    /// `t^{N/2} ‖u − H‖_∞`.
    pub scaled_sup: f64,
}

/// Distance from `u` to `H(t − T₀, ·, x₀)`.
pub fn gaussian_distance(u: &GridDensity, t: f64, t0: f64, x0: &[f64]) -> Result<GaussianDistance> {
    ensure!(t > t0, "need t > T0, got t = {t}, T0 = {t0}");
    ensure!(x0.len() == u.dim(), "center has wrong dimension");
    let spec = u.spec;
    let (l1, sup) = (0..spec.len())
        .into_par_iter()
        .map(|k| {
            let d = (u.values[k] - heat_kernel(spec.dim, t - t0, x0, &spec.point(k))).abs();
            (d, d)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    Ok(GaussianDistance { l1: l1 * spec.cell_volume(), scaled_sup: t.powf(0.5 * spec.dim as f64) * sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::log_hessian_weight;

    fn line(nodes: usize, h: f64) -> GridSpec {
        GridSpec::with_spacing(1, nodes, h).unwrap()
    }

    #[test]
    fn weight_density_mass_and_peak() {
        let spec = GridSpec::new(1, 60.0, 6001).unwrap();
        let u = density_from_weight(spec, 1, 1.0, DEFAULT_TAIL_TOL).unwrap();
        assert!((u.mass() - 1.0).abs() < 1e-8);
        // before renormalization the discrete mass is one minus the tail
        let f = |x: f64| c_hat(1, 1).unwrap() * (4.0 * PI).powf(-0.5) * (1.0 + x * x / 8.0).powi(-2);
        let riemann: f64 = (0..spec.len()).map(|k| f(spec.coord(k))).sum::<f64>() * spec.spacing();
        let raw = riemann - spec.spacing() * f(60.0);
        let tail = weight_tail_mass(1, 1, 1.0, 60.0).unwrap();
        assert!((raw + tail - 1.0).abs() < 1e-8, "{}", raw + tail - 1.0);
        let peak = c_hat(1, 1).unwrap() * (4.0 * PI).powf(-0.5);
        assert!((u.peak() - peak / riemann).abs() < 1e-12);
    }

    #[test]
    fn tail_and_resolution_errors() {
        let spec = GridSpec::new(1, 5.0, 1001).unwrap();
        assert!(matches!(density_from_weight(spec, 1, 1.0, 1e-8), Err(Error::TailMass { .. })));
        let coarse = GridSpec::new(1, 60.0, 101).unwrap();
        assert!(matches!(density_from_weight(coarse, 1, 1.0, 1.0), Err(Error::Resolution(_))));
    }

    #[test]
    fn two_dimensional_tail_bound() {
        // disk complement bound dominates the exact square complement
        let spec = GridSpec::new(2, 20.0, 401).unwrap();
        let tail = weight_tail_mass(2, 1, 1.0, 20.0).unwrap();
        let u = density_from_weight(spec, 1, 1.0, 1.0).unwrap();
        assert!(tail > 0.0 && tail < 0.05);
        assert!((u.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_semigroup() {
        let spec = line(4096, 0.02);
        let delta = GridDensity::gaussian(spec, 0.01, &[0.0]).unwrap();
        let u = heat_at(&delta, 1.0).unwrap();
        let exact = GridDensity::gaussian(spec, 1.01, &[0.0]).unwrap();
        let sup = u.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-4, "{sup}");
        assert!((u.mass() - 1.0).abs() < 1e-6);
        let twice = heat_at(&heat_at(&delta, 0.5).unwrap(), 0.5).unwrap();
        let sup = u.values().iter().zip(twice.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-6, "{sup}");
    }

    #[test]
    fn heat_resolution_errors() {
        let spec = line(512, 0.1);
        let u = GridDensity::gaussian(spec, 1.0, &[0.0]).unwrap();
        assert!(heat_at(&u, 1e-4).is_err());
        assert!(heat_at(&u, 1e3).is_err());
        assert!(heat_at(&u, 0.0).is_err());
    }

    #[test]
    fn two_dimensional_heat() {
        let spec = GridSpec::new(2, 16.0, 321).unwrap();
        let u0 = GridDensity::gaussian(spec, 0.2, &[0.5, -0.5]).unwrap();
        let u = heat_at(&u0, 0.5).unwrap();
        assert!((u.mass() - 1.0).abs() < 1e-6);
        let exact = GridDensity::gaussian(spec, 0.7, &[0.5, -0.5]).unwrap();
        let sup = u.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-6, "{sup}");
        let est = estimate_virtual_time(&u).unwrap();
        assert!((est.tau - 0.7).abs() < 0.02 * 0.7);
    }

    #[test]
    fn virtual_times() {
        let spec = line(4096, 0.05);
        let g = GridDensity::gaussian(spec, 1.3, &[0.2]).unwrap();
        assert!((estimate_virtual_time(&g).unwrap().tau - 1.3).abs() < 0.02 * 1.3);
        let w = GridDensity::from_fn(spec, |x| (1.0 + 0.25 * x[0] * x[0]).powi(-2)).unwrap();
        assert!((estimate_virtual_time(&w).unwrap().tau - 0.5).abs() < 0.01);
        let what = density_from_weight(line(4096, 0.1), 1, 2.0, DEFAULT_TAIL_TOL).unwrap();
        assert!((estimate_virtual_time(&what).unwrap().tau - 2.0).abs() < 0.04);
    }

    #[test]
    fn log_concave_densities_have_infinite_time() {
        let spec = line(512, 0.05);
        let u = GridDensity::from_fn(spec, |x| (0.5 * x[0] * x[0]).exp()).unwrap();
        assert!(estimate_virtual_time(&u).unwrap().tau.is_infinite());
    }

    // brute-force scan of the analytic log-Hessian of the mixture
    fn mixture_oracle(components: &[(f64, f64, f64)]) -> f64 {
        let mut lowest = f64::INFINITY;
        for i in 0..=40000 {
            let x = -10.0 + 20.0 * i as f64 / 40000.0;
            let mut s0 = 0.0;
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for &(w, t, c) in components {
                let g = w * heat_kernel(1, t, &[c], &[x]);
                let d = -(x - c) / (2.0 * t);
                s0 += g;
                s1 += g * d;
                s2 += g * (d * d - 1.0 / (2.0 * t));
            }
            lowest = lowest.min(s2 / s0 - (s1 / s0).powi(2));
        }
        -0.5 / lowest
    }

    #[test]
    fn mixture_virtual_time() {
        let comps = [(0.5, 0.5, -1.5), (0.5, 1.0, 1.5)];
        let spec = line(2001, 0.01);
        let u = GridDensity::gaussian_mixture(
            spec,
            &comps.iter().map(|&(w, t, c)| (w, t, vec![c])).collect::<Vec<_>>(),
        )
        .unwrap();
        let est = estimate_virtual_time(&u).unwrap();
        let oracle = mixture_oracle(&comps);
        // a mixture never drops below its narrowest component, but stays below the wider one
        assert!(est.tau.is_finite() && est.tau < 1.0 && est.tau > 0.49);
        assert!((est.tau - oracle).abs() < 0.02 * oracle, "{} vs {oracle}", est.tau);
    }

    #[test]
    fn hessian_second_order() {
        let x = 0.7;
        let exact = log_hessian_weight(2.0, 1.0, &[x])[(0, 0)];
        let errs: Vec<f64> = [0.05, 0.025, 0.0125]
            .iter()
            .map(|&h| {
                let f = |y: f64| (1.0 + 0.25 * y * y).powi(-2).ln();
                ((f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h) - exact).abs()
            })
            .collect();
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn harnack_for_gaussian() {
        let spec = line(4096, 0.05);
        let u0 = GridDensity::gaussian(spec, 0.5, &[0.0]).unwrap();
        for t in [0.5, 2.0] {
            let margin = check_harnack(&u0, t).unwrap();
            let expected = 0.5 / t - 0.5 / (t + 0.5);
            assert!((margin - expected).abs() < 0.02 * expected, "t = {t}: {margin} vs {expected}");
        }
    }

    #[test]
    fn mean_value_for_gaussian() {
        let spec = line(4096, 0.02);
        let u = GridDensity::gaussian(spec, 1.0, &[0.0]).unwrap();
        let r = check_meanvalue_bound(&u, 1.0, &[vec![3.0], vec![0.0], vec![-1.2]]).unwrap();
        assert!(r.margin >= 0.0 && r.peak_margin >= 0.0);
        assert!(check_meanvalue_bound(&u, 1.0, &[vec![40.5]]).is_err());
    }

    #[test]
    fn ball_integral_of_gaussian() {
        let spec = GridSpec::new(2, 8.0, 321).unwrap();
        let u = GridDensity::gaussian(spec, 0.5, &[0.0, 0.0]).unwrap();
        // mass of a 2D Gaussian inside radius R is 1 − e^{−R²/4t}
        let v = u.ball_integral(&[0.0, 0.0], 1.0).unwrap();
        assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-6, "{v}");
    }

    #[test]
    fn moments_of_gaussian() {
        let spec = line(4096, 0.02);
        let u = GridDensity::gaussian(spec, 2.0, &[1.0]).unwrap();
        let (mean, s) = moment_match(&u);
        assert!((mean[0] - 1.0).abs() < 1e-10 && (s - 2.0).abs() < 1e-8);
        let d = gaussian_distance(&u, 3.0, 1.0, &mean).unwrap();
        assert!(d.l1 < 1e-8 && d.scaled_sup < 1e-8, "{d:?}");
    }

    #[test]
    fn bump_is_positive_and_symmetric() {
        let spec = line(4001, 0.005);
        let u = GridDensity::bump(spec, 1.0, 0.03).unwrap();
        let v = u.values();
        assert!(v.iter().all(|x| *x > 0.0));
        assert!((v[100] - v[v.len() - 101]).abs() < 1e-14 * u.peak());
        assert!((u.mass() - 1.0).abs() < 1e-12);
    }
}
