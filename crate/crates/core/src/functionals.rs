//! Weighted-area functionals on sampled submanifolds and their suprema over
//! centers and scales.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::manifold::{
    build_samples, default_resolution, product_with_plane, AffineMap, ChartSpec, DerivativeMode, SampledManifold,
};
use crate::optimize::{maximize, OptimizerConfig, ScaleFamily, ScanRow, SearchBox};
use crate::weights::{ball_volume, c_const, c_hat, sphere_area};

/// Optimizer bookkeeping attached to every supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_starts: usize,
    pub converged: bool,
    pub evaluations: usize,
    pub coarse_best: f64,
    pub nodes: usize,
    pub truncation: Option<String>,
}

/// A supremum over `(x₀, scale)`: the best value found and where.
///
/// `value` is a certified lower bound for the true supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalResult {
    pub value: f64,
    pub center: Vec<f64>,
    pub scale: f64,
    pub refinement_gap: f64,
    pub diagnostics: Diagnostics,
    #[serde(skip)]
    pub scan: Option<Vec<ScanRow>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionalKind {
    /// Colding-Minicozzi entropy.
    Entropy,
    /// Normalized Li-Yau conformal volume.
    ConformalVolume,
}

#[derive(Debug, Clone, Copy)]
enum Integrand {
    /// `(4πt)^{-n/2} e^{-r²/4t}`
    Gaussian { n: f64 },
    /// `ρ^M (1 + ρ²r²/4)^{-M}`
    Conformal { exponent: f64 },
    /// `(4πρ)^{-n/2} (1 + r²/(4Mρ))^{-M}`
    Modified { n: f64, exponent: f64 },
}

impl Integrand {
    fn prefactor(self, scale: f64) -> f64 {
        match self {
            Integrand::Gaussian { n } | Integrand::Modified { n, .. } => (4.0 * PI * scale).powf(-0.5 * n),
            Integrand::Conformal { exponent } => scale.powf(exponent),
        }
    }

    #[inline]
    fn profile(self, scale: f64) -> impl Fn(f64) -> f64 {
        let (kind, c, exponent) = match self {
            Integrand::Gaussian { .. } => (0, 0.25 / scale, 0.0),
            Integrand::Conformal { exponent } => (1, 0.25 * scale * scale, exponent),
            Integrand::Modified { exponent, .. } => (1, 0.25 / (exponent * scale), exponent),
        };
        move |r2: f64| if kind == 0 { (-c * r2).exp() } else { (-exponent * (c * r2).ln_1p()).exp() }
    }

    /// `Σ integrand(r²_i) dA_i` at one scale.
    fn sum(self, r2: &[f64], area: &[f64], scale: f64) -> f64 {
        let g = self.profile(scale);
        self.prefactor(scale) * r2.iter().zip(area).map(|(&r, a)| g(r) * a).sum::<f64>()
    }

    /// Inverse squared variation length `|∇ log g|² + |∇² log g|` of the profile, as a function of `r²`.
    fn variation(self, scale: f64) -> impl Fn(f64) -> f64 {
        let (kind, c, exponent) = match self {
            Integrand::Gaussian { .. } => (0, 0.5 / scale, 0.0),
            Integrand::Conformal { exponent } => (1, 0.25 * scale * scale, exponent),
            Integrand::Modified { exponent, .. } => (1, 0.25 / (exponent * scale), exponent),
        };
        move |r2: f64| {
            if kind == 0 {
                c + c * c * r2
            } else {
                let q = 2.0 * exponent * c / (1.0 + c * r2);
                q + q * q * r2
            }
        }
    }

    /// As [`Integrand::sum`], or `None` when the quadrature cells are too coarse
    /// for the integrand: the mass-weighted RMS of `cell / L` must stay below
    /// [`RESOLUTION_LIMIT`], with `L` the local variation length of the profile.
    fn resolved_sum(self, r2: &[f64], area: &[f64], cell2: &[f64], scale: f64) -> Option<f64> {
        let g = self.profile(scale);
        let variation = self.variation(scale);
        let mut mass = 0.0;
        let mut spread = 0.0;
        for ((&r, a), c2) in r2.iter().zip(area).zip(cell2) {
            let w = g(r) * a;
            mass += w;
            spread += w * c2 * variation(r);
        }
        if mass > 0.0 && spread > RESOLUTION_LIMIT * RESOLUTION_LIMIT * mass {
            return None;
        }
        Some(self.prefactor(scale) * mass)
    }
}

/// Largest admissible ratio of quadrature cell size to kernel width in a supremum search.
pub const RESOLUTION_LIMIT: f64 = 0.5;

struct Family<'a> {
    sampled: &'a SampledManifold,
    integrand: Integrand,
    factor: f64,
    /// Squared cell sizes `dA^{2/n}`; when present, unresolved probes evaluate to `-∞`.
    cell2: Option<Vec<f64>>,
}

impl Family<'_> {
    fn r2(&self, center: &[f64]) -> Vec<f64> {
        let big = self.sampled.ambient_dim;
        self.sampled
            .positions()
            .chunks_exact(big)
            .map(|x| x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect()
    }
}

impl ScaleFamily for Family<'_> {
    fn center_dim(&self) -> usize {
        self.sampled.ambient_dim
    }

    fn eval_scales(&self, center: &[f64], scales: &[f64]) -> Vec<f64> {
        let r2 = self.r2(center);
        let area = self.sampled.area_elements();
        let f = self.factor * self.sampled.multiplicity;
        scales
            .iter()
            .map(|&s| match &self.cell2 {
                Some(cell2) => self.integrand.resolved_sum(&r2, area, cell2, s).map_or(f64::NEG_INFINITY, |v| f * v),
                None => f * self.integrand.sum(&r2, area, s),
            })
            .collect()
    }
}

fn evaluate(sampled: &SampledManifold, integrand: Integrand, x0: &[f64], scale: f64) -> f64 {
    Family { sampled, integrand, factor: 1.0, cell2: None }.eval(x0, scale)
}

fn supremum(sampled: &SampledManifold, integrand: Integrand, factor: f64, cfg: &OptimizerConfig) -> Result<FunctionalResult> {
    ensure!(!sampled.is_empty(), "sampled manifold is empty");
    let exponent = 2.0 / sampled.intrinsic_dim as f64;
    let cell2 = sampled.area_elements().iter().map(|a| a.powf(exponent)).collect();
    let family = Family { sampled, integrand, factor, cell2: Some(cell2) };
    let (lo, hi) = sampled.bounding_box();
    let bounds = SearchBox::padded(&lo, &hi, cfg.center_pad);
    let opt = maximize(&family, &bounds, &[sampled.centroid()], cfg)?;
    if !opt.value.is_finite() {
        return Err(Error::Resolution(format!(
            "no probe is resolved by {} nodes; raise the resolution or the minimum scale",
            sampled.len()
        )));
    }
    Ok(FunctionalResult {
        value: opt.value,
        center: opt.center,
        scale: opt.scale,
        refinement_gap: 0.0,
        diagnostics: Diagnostics {
            n_starts: opt.n_starts,
            converged: opt.converged,
            evaluations: opt.evaluations,
            coarse_best: opt.coarse_best,
            nodes: sampled.len(),
            truncation: sampled.truncation_note.clone(),
        },
        scan: opt.scan,
    })
}

fn check_center(sampled: &SampledManifold, x0: &[f64]) -> Result<()> {
    ensure!(
        x0.len() == sampled.ambient_dim,
        "center has dimension {}, ambient dimension is {}",
        x0.len(),
        sampled.ambient_dim
    );
    Ok(())
}

/// `(4πt)^{-n/2} ∫_Σ e^{-|x−x₀|²/4t}`.
pub fn gaussian_density_at(sampled: &SampledManifold, x0: &[f64], t: f64) -> Result<f64> {
    ensure!(t > 0.0, "t must be positive, got {t}");
    check_center(sampled, x0)?;
    Ok(evaluate(sampled, Integrand::Gaussian { n: sampled.intrinsic_dim as f64 }, x0, t))
}

/// `∫_Σ W^M_ρ(x − x₀)`.
pub fn conformal_integral(sampled: &SampledManifold, exponent: f64, rho: f64, x0: &[f64]) -> Result<f64> {
    ensure!(rho > 0.0 && exponent > 0.0, "need M, rho > 0");
    check_center(sampled, x0)?;
    Ok(evaluate(sampled, Integrand::Conformal { exponent }, x0, rho))
}

/// `∫_Σ Ŵ^n_{n+m,ρ}(x − x₀)`.
pub fn modified_integral(sampled: &SampledManifold, m: usize, rho: f64, x0: &[f64]) -> Result<f64> {
    ensure!(rho > 0.0, "rho must be positive, got {rho}");
    check_center(sampled, x0)?;
    let n = sampled.intrinsic_dim;
    Ok(evaluate(sampled, Integrand::Modified { n: n as f64, exponent: (n + m) as f64 }, x0, rho))
}

/// Colding-Minicozzi entropy: sup over `(x₀, t)` of the Gaussian density.
pub fn cm_entropy(sampled: &SampledManifold, cfg: &OptimizerConfig) -> Result<FunctionalResult> {
    supremum(sampled, Integrand::Gaussian { n: sampled.intrinsic_dim as f64 }, 1.0, cfg)
}

/// Normalized conformal volume `|S^n|^{-1} sup ∫ W^n_ρ`.
pub fn ly_confvol(sampled: &SampledManifold, cfg: &OptimizerConfig) -> Result<FunctionalResult> {
    let n = sampled.intrinsic_dim;
    supremum(sampled, Integrand::Conformal { exponent: n as f64 }, 1.0 / sphere_area(n), cfg)
}

/// Normalized conformal volume of `Σ × ℝ^{2m}`, computed on `Σ` as `Ĉ_{n,m} sup ∫ Ŵ^n_{n+m,ρ}`.
pub fn stabilized_confvol(sampled: &SampledManifold, m: usize, cfg: &OptimizerConfig) -> Result<FunctionalResult> {
    let n = sampled.intrinsic_dim;
    let factor = c_hat(n, m)?;
    supremum(sampled, Integrand::Modified { n: n as f64, exponent: (n + m) as f64 }, factor, cfg)
}

/// Largest decrease tolerated before a stabilized sequence is flagged.
pub const MONOTONE_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableEstimate {
    pub m: Vec<usize>,
    pub results: Vec<FunctionalResult>,
    /// Largest drop between consecutive entries (zero when nondecreasing).
    pub worst_decrease: f64,
    pub monotone: bool,
    /// Lower bound for the stable conformal volume: the last value.
    pub estimate: f64,
}

/// Stabilized conformal volumes along an increasing list of `m`.
pub fn stable_confvol_estimate(
    sampled: &SampledManifold,
    m_list: &[usize],
    cfg: &OptimizerConfig,
) -> Result<StableEstimate> {
    ensure!(!m_list.is_empty(), "m list is empty");
    ensure!(m_list.windows(2).all(|w| w[0] < w[1]), "m list must be strictly increasing");
    let results = m_list.iter().map(|&m| stabilized_confvol(sampled, m, cfg)).collect::<Result<Vec<_>>>()?;
    let worst_decrease = results.windows(2).map(|w| (w[0].value - w[1].value).max(0.0)).fold(0.0, f64::max);
    let estimate = results.last().map(|r| r.value).unwrap_or(f64::NAN);
    Ok(StableEstimate {
        m: m_list.to_vec(),
        results,
        worst_decrease,
        monotone: worst_decrease <= MONOTONE_SLACK,
        estimate,
    })
}

/// Virtual-entropy lower bound from the unit-mass density
/// `Ĉ_{N,n−N+m} (4πρ)^{(n−N)/2} Ŵ^n_{n+m,ρ}(· − x₀)`, scaled by `(4πρ)^{(N−n)/2}`:
/// the value is `Ĉ_{N,n−N+m} ∫_Σ Ŵ^n_{n+m,ρ}(x − x₀)`.
pub fn vt_lower_bound(sampled: &SampledManifold, m: usize, rho: f64, x0: &[f64]) -> Result<f64> {
    let n = sampled.intrinsic_dim;
    let big = sampled.ambient_dim;
    ensure!(n + m >= big, "need m >= N - n = {}, got m = {m}", big - n);
    Ok(c_hat(big, n + m - big)? * modified_integral(sampled, m, rho, x0)?)
}

/// Number of nodes on each flat axis in [`iterate_check`].
pub const ITERATE_FLAT_NODES: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl IterateCheck {
    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs()
    }
}

/// Both sides of `∫_{Σ×ℝ²} W^{M+2}_ρ(· − (y₀,0)) = (C_{M,1}/ρ) ∫_Σ W^{M+1}_ρ(· − y₀)`.
///
/// The left side is direct quadrature over the product truncated at `half_width`.
/// Both sides share the same nodes on `Σ`, so only the flat integral is tested.
pub fn iterate_check(chart: &ChartSpec, exponent: usize, rho: f64, y0: &[f64], half_width: f64) -> Result<IterateCheck> {
    ensure!(exponent >= 1, "M must be at least 1");
    ensure!(rho > 0.0, "rho must be positive");
    ensure!(y0.len() == chart.ambient_dim(), "y0 has wrong dimension");
    let base_res = coarser(&coarser(&default_resolution(chart)));
    let sigma = build_samples(chart, &base_res, DerivativeMode::Analytic)?;
    let rhs = c_const(exponent, 1)? / rho * conformal_integral(&sigma, (exponent + 1) as f64, rho, y0)?;

    let product = product_with_plane(chart, 1, half_width)?;
    let mut res = base_res;
    res.extend([ITERATE_FLAT_NODES; 2]);
    let lifted = build_samples(&product, &res, DerivativeMode::Analytic)?;
    let mut center = y0.to_vec();
    center.extend([0.0, 0.0]);
    let lhs = conformal_integral(&lifted, (exponent + 2) as f64, rho, &center)?;
    Ok(IterateCheck { lhs, rhs })
}

/// `|Σ ∩ B_R(p)|`, with each node counted fractionally across the sphere `|x − p| = R`.
pub fn ball_measure(sampled: &SampledManifold, p: &[f64], radius: f64) -> Result<f64> {
    ensure!(radius > 0.0, "radius must be positive");
    check_center(sampled, p)?;
    let inv_n = 1.0 / sampled.intrinsic_dim as f64;
    let mut acc = 0.0;
    for i in 0..sampled.len() {
        let x = sampled.position(i);
        let d = x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let da = sampled.area_element(i);
        let cell = da.powf(inv_n);
        let frac = ((radius - d) / cell + 0.5).clamp(0.0, 1.0);
        acc += frac * da;
    }
    Ok(sampled.multiplicity * acc)
}

/// `max |Σ ∩ B_R(p)| / (ω_n R^n)` over the probes.
pub fn area_ratio_theta(sampled: &SampledManifold, probes: &[(Vec<f64>, f64)]) -> Result<f64> {
    ensure!(!probes.is_empty(), "no probes");
    let n = sampled.intrinsic_dim;
    let omega = ball_volume(n);
    let mut worst: f64 = 0.0;
    for (p, r) in probes {
        worst = worst.max(ball_measure(sampled, p, *r)? / (omega * r.powi(n as i32)));
    }
    Ok(worst)
}

/// Evaluate one of the functionals on a chart sampled at `resolution`.
pub fn evaluate_chart(
    chart: &ChartSpec,
    resolution: &[usize],
    kind: FunctionalKind,
    cfg: &OptimizerConfig,
) -> Result<FunctionalResult> {
    let sampled = build_samples(chart, resolution, DerivativeMode::Analytic)?;
    match kind {
        FunctionalKind::Entropy => cm_entropy(&sampled, cfg),
        FunctionalKind::ConformalVolume => ly_confvol(&sampled, cfg),
    }
}

/// Functional value on `chart` and on its image under `map`.
pub fn invariance_check(
    chart: &ChartSpec,
    map: &AffineMap,
    kind: FunctionalKind,
    resolution: &[usize],
    cfg: &OptimizerConfig,
) -> Result<(f64, f64)> {
    let before = evaluate_chart(chart, resolution, kind, cfg)?;
    let after = evaluate_chart(&chart.transformed(map)?, resolution, kind, cfg)?;
    Ok((before.value, after.value))
}

/// Halve each axis resolution, keeping at least four nodes.
pub fn coarser(resolution: &[usize]) -> Vec<usize> {
    resolution.iter().map(|&r| (r / 2).max(4)).collect()
}

/// Run `f` at `resolution` and at half of it; the gap between the two is recorded.
pub fn with_refinement<F>(chart: &ChartSpec, resolution: &[usize], f: F) -> Result<FunctionalResult>
where
    F: Fn(&SampledManifold) -> Result<FunctionalResult>,
{
    let coarse = f(&build_samples(chart, &coarser(resolution), DerivativeMode::Analytic)?)?;
    let mut fine = f(&build_samples(chart, resolution, DerivativeMode::Analytic)?)?;
    fine.refinement_gap = (fine.value - coarse.value).abs();
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::catalog_make;

    fn sample(name: &str, params: &[f64]) -> SampledManifold {
        let chart = catalog_make(name, params).unwrap();
        build_samples(&chart, &default_resolution(&chart), DerivativeMode::Analytic).unwrap()
    }

    #[test]
    fn plane_density_is_one() {
        let plane = sample("plane_patch", &[2.0, 1e3]);
        for t in [0.05, 0.3, 1.0] {
            let v = gaussian_density_at(&plane, &[0.0, 0.0], t).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "t = {t}: {v}");
        }
    }

    #[test]
    fn sphere_density_closed_form() {
        let s = sample("sphere", &[2.0, 2.0]);
        let v = gaussian_density_at(&s, &[0.0; 3], 1.0).unwrap();
        assert!((v - 4.0 / std::f64::consts::E).abs() < 1e-6);
        assert!(gaussian_density_at(&s, &[0.0; 3], 1e8).unwrap() < 1e-6);
    }

    #[test]
    fn conformal_examples() {
        let circle = sample("sphere", &[1.0, 1.0]);
        let v = conformal_integral(&circle, 1.0, 2.0, &[0.0, 0.0]).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-10);
        assert!(conformal_integral(&circle, 1.0, 1e-6, &[0.0, 0.0]).unwrap() < 1e-5);

        let line = sample("plane_patch", &[1.0, 1e10]);
        for rho in [0.1, 1.0, 10.0] {
            let v = conformal_integral(&line, 1.0, rho, &[0.5]).unwrap();
            assert!((v - 2.0 * PI).abs() < 1e-6, "rho = {rho}: {v}");
        }
    }

    #[test]
    fn vt_bound_on_planes() {
        let plane = sample("plane_patch", &[1.0, 1e3, 2.0]);
        for rho in [0.1, 1.0, 5.0] {
            let v = vt_lower_bound(&plane, 1, rho, &[0.2, 0.0]).unwrap();
            assert!(v <= 1.0 + 1e-6, "rho = {rho}: {v}");
        }
        assert!(vt_lower_bound(&plane, 0, 1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn vt_bound_matches_stabilized_integrand() {
        let s = sample("sphere", &[1.0, 2f64.sqrt()]);
        let (m, rho, x0) = (3, 0.7, [0.1, -0.2]);
        let vt = vt_lower_bound(&s, m, rho, &x0).unwrap();
        let stab = c_hat(1, m).unwrap() * modified_integral(&s, m, rho, &x0).unwrap();
        let predicted = c_hat(2, m - 1).unwrap() / c_hat(1, m).unwrap() * stab;
        assert!((vt - predicted).abs() < 1e-6 * predicted);
    }

    #[test]
    fn ball_measures() {
        let plane = sample("plane_patch", &[2.0, 4.0]);
        let theta = area_ratio_theta(&plane, &[(vec![0.0, 0.0], 1.0), (vec![0.5, -0.3], 2.0)]).unwrap();
        assert!((theta - 1.0).abs() < 1e-3, "{theta}");
        let circle = sample("sphere", &[1.0, 2f64.sqrt()]);
        let r = 2.0 * 2f64.sqrt();
        let theta = area_ratio_theta(&circle, &[(vec![0.0, 0.0], r)]).unwrap();
        assert!((theta - PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn identity_invariance_is_exact() {
        let chart = catalog_make("sphere", &[1.0, 2f64.sqrt()]).unwrap();
        let cfg = OptimizerConfig::default();
        let (a, b) =
            invariance_check(&chart, &AffineMap::identity(2), FunctionalKind::Entropy, &[128], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refinement_gap_recorded() {
        let chart = catalog_make("sphere", &[2.0, 2.0]).unwrap();
        let r = with_refinement(&chart, &[32, 64], |s| cm_entropy(s, &OptimizerConfig::default())).unwrap();
        assert!(r.refinement_gap < 1e-3);
        assert!(r.refinement_gap >= 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let s = sample("sphere", &[1.0, 1.0]);
        assert!(gaussian_density_at(&s, &[0.0, 0.0], 0.0).is_err());
        assert!(gaussian_density_at(&s, &[0.0], 1.0).is_err());
        assert!(stable_confvol_estimate(&s, &[2, 1], &OptimizerConfig::default()).is_err());
    }
}
