//! The numbered acceptance criteria, runnable one at a time or as a suite.

use std::f64::consts::{E, PI};
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{run_flow, CurveState, FlowConfig};
use crate::functionals::{
    area_ratio_theta, cm_entropy, iterate_check, ly_confvol, stable_confvol_estimate, vt_lower_bound,
};
use crate::heatlab::{
    check_harnack, check_tau_growth, density_from_weight, estimate_virtual_time, gaussian_distance, heat_at,
    moment_match, GridDensity, GridSpec, DEFAULT_TAIL_TOL,
};
use crate::manifold::{build_samples, catalog_make, default_resolution, DerivativeMode, SampledManifold};
use crate::optimize::OptimizerConfig;
use crate::weights::{
    c_const, c_const_sphere_form, c_hat, gaussian_r2, lattice_bound, log_hessian_weight, modified_weight_r2,
    virtual_time_closed, weight_eval, WeightKind,
};

pub const CRITERIA: usize = 13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: Option<f64>,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {:>2} {} ({:.2} s): {}", self.id, self.name, self.seconds, self.detail)
    }
}

fn name_and_budget(id: usize) -> (&'static str, Option<f64>) {
    match id {
        1 => ("sphere entropies", Some(30.0)),
        2 => ("veronese shrinker", Some(300.0)),
        3 => ("loxodrome closed form", Some(120.0)),
        4 => ("iterate identity", Some(120.0)),
        5 => ("constants", None),
        6 => ("weight chain", None),
        7 => ("closed-form hessian", None),
        8 => ("harnack and growth", Some(180.0)),
        9 => ("long-time convergence", None),
        10 => ("flow monotonicity", Some(300.0)),
        11 => ("inequality chain", None),
        12 => ("lattice bound", None),
        13 => ("area ratios", None),
        _ => ("unknown", None),
    }
}

/// Run criterion `id` (1-based) and time it against its budget.
pub fn run_criterion(id: usize) -> CriterionReport {
    let (name, budget) = name_and_budget(id);
    let start = Instant::now();
    let outcome = match id {
        1 => sphere_entropies(),
        2 => veronese(),
        3 => loxodromes(),
        4 => iterate_identity(),
        5 => constants(),
        6 => weight_chain(),
        7 => hessian(),
        8 => harnack_growth(),
        9 => long_time(),
        10 => flow_monotonicity(),
        11 => inequality_chain(),
        12 => lattice(),
        13 => area_ratios(),
        _ => Err(Error::InvalidParameter(format!("no criterion {id}; valid ids are 1..={CRITERIA}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match outcome {
        Ok(pair) => pair,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if seconds > b {
            passed = false;
            detail.push_str(&format!("; over budget {b} s"));
        }
    }
    CriterionReport { id, name, passed, detail, seconds, budget_seconds: budget }
}

pub fn run_all() -> Vec<CriterionReport> {
    (1..=CRITERIA).map(run_criterion).collect()
}

type Outcome = Result<(bool, String)>;

fn sample(name: &str, params: &[f64]) -> Result<SampledManifold> {
    let chart = catalog_make(name, params)?;
    build_samples(&chart, &default_resolution(&chart), DerivativeMode::Analytic)
}

fn sphere_entropies() -> Outcome {
    let cfg = OptimizerConfig::default();
    let circle = cm_entropy(&sample("sphere", &[1.0, 2f64.sqrt()])?, &cfg)?.value;
    let sphere = cm_entropy(&sample("sphere", &[2.0, 2.0])?, &cfg)?.value;
    let (e1, e2) = ((2.0 * PI / E).sqrt(), 4.0 / E);
    let ok = (circle - e1).abs() <= 1e-3 && (sphere - e2).abs() <= 1e-3;
    Ok((ok, format!("S1 {circle:.6} (exact {e1:.6}), S2 {sphere:.6} (exact {e2:.6})")))
}

fn veronese() -> Outcome {
    let cfg = OptimizerConfig::default();
    let v = sample("veronese", &[2.0])?;
    let cm = cm_entropy(&v, &cfg)?.value;
    let ly = ly_confvol(&v, &cfg)?.value;
    let ok = (cm - 6.0 / E).abs() <= 5e-3 && (ly - 1.5).abs() <= 5e-3;
    Ok((ok, format!("entropy {cm:.6} (6/e = {:.6}), conformal volume {ly:.6}", 6.0 / E)))
}

fn loxodromes() -> Outcome {
    let cfg = OptimizerConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 0.5, 1.0, 2.0] {
        let s = sample("loxodrome", &[alpha])?;
        let exact = (1.0 + alpha * alpha).sqrt();
        let cm = cm_entropy(&s, &cfg)?.value;
        let ly = ly_confvol(&s, &cfg)?.value;
        ok &= (cm - exact).abs() <= 1e-2 && (ly - exact).abs() <= 1e-2;
        parts.push(format!("a={alpha}: {cm:.5}/{ly:.5} vs {exact:.5}"));
    }
    Ok((ok, parts.join(", ")))
}

fn iterate_identity() -> Outcome {
    let circle = catalog_make("sphere", &[1.0, 2f64.sqrt()])?;
    let segment = catalog_make("plane_patch", &[1.0, 10.0, 2.0])?;
    let mut worst: f64 = 0.0;
    for (chart, y0) in [(&circle, [0.3, -0.2]), (&segment, [1.0, 1.0])] {
        for m in [1, 2] {
            for rho in [0.5, 1.0, 2.0] {
                worst = worst.max(iterate_check(chart, m, rho, &y0, 1e3)?.relative_gap());
            }
        }
    }
    Ok((worst <= 1e-4, format!("worst relative gap {worst:.2e}")))
}

fn constants() -> Outcome {
    let mut increasing = true;
    for n in 1..=6 {
        let mut prev = c_hat(n, 0)?;
        for m in 1..=60 {
            let next = c_hat(n, m)?;
            increasing &= next > prev;
            prev = next;
        }
    }
    let c20 = c_hat(2, 0)?;
    let c2big = c_hat(2, 10_000)?;
    let mut agree: f64 = 0.0;
    for big_m in 1..=6 {
        for m in 0..=6 {
            let a = c_const(big_m, m)?;
            let b = c_const_sphere_form(big_m, m)?;
            agree = agree.max((a - b).abs() / a.abs());
        }
    }
    let ok = increasing && c20 == 0.5 && (c2big - 1.0).abs() <= 1e-3 && agree <= 1e-12;
    Ok((
        ok,
        format!("increasing {increasing}, C(2,0) = {c20}, C(2,1e4) = {c2big:.6}, forms agree to {agree:.1e}"),
    ))
}

fn weight_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=4) as f64;
        let m = rng.gen_range(0..=20) as f64;
        let rho = 10f64.powf(rng.gen_range(-2.0..2.0));
        let r2 = rho * 10f64.powf(rng.gen_range(-3.0..2.5));
        let g = gaussian_r2(n, rho, r2);
        let upper = modified_weight_r2(n, n + m, rho, r2);
        let lower = modified_weight_r2(n, n + m + 1.0, rho, r2);
        let slack = 1e-12 * upper.max(1e-300);
        if g > lower + slack || lower > upper + slack {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violations in 10000 samples")))
}

fn hessian() -> Outcome {
    let h = 1e-3;
    let mut fd_err: f64 = 0.0;
    let points: [&[f64]; 4] = [&[0.3], &[0.7, -1.1], &[0.0, 0.0], &[0.4, -0.2, 1.3]];
    for big_m in [1.0, 2.0, 3.0] {
        for rho in [0.5, 1.0] {
            for x in points {
                let d = x.len();
                let origin = vec![0.0; d];
                let f = |y: &[f64]| weight_eval(big_m, rho, &origin, y).ln();
                let exact = log_hessian_weight(big_m, rho, x);
                for i in 0..d {
                    for j in 0..d {
                        let shifted = |si: f64, sj: f64| {
                            let mut y = x.to_vec();
                            y[i] += si * h;
                            y[j] += sj * h;
                            f(&y)
                        };
                        let fd = (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0) + shifted(-1.0, -1.0))
                            / (4.0 * h * h);
                        fd_err = fd_err.max((fd - exact[(i, j)]).abs());
                    }
                }
            }
        }
    }
    let mut tau_err: f64 = 0.0;
    let fine = GridSpec::with_spacing(1, 4096, 0.05)?;
    for (big_m, rho) in [(2.0, 1.0), (3.0, 0.5)] {
        let u = GridDensity::from_fn(fine, |x| weight_eval(big_m, rho, &[0.0], x))?;
        let exact = virtual_time_closed(WeightKind::Conformal { exponent: big_m, rho });
        tau_err = tau_err.max((estimate_virtual_time(&u)?.tau - exact).abs() / exact);
    }
    let coarse = GridSpec::with_spacing(1, 4096, 0.1)?;
    for (m, rho) in [(1, 2.0), (2, 1.0)] {
        let u = density_from_weight(coarse, m, rho, DEFAULT_TAIL_TOL)?;
        let exact = virtual_time_closed(WeightKind::Modified { n: 1, m, rho });
        tau_err = tau_err.max((estimate_virtual_time(&u)?.tau - exact).abs() / exact);
    }
    let ok = fd_err <= 1e-6 && tau_err <= 0.02;
    Ok((ok, format!("finite-difference error {fd_err:.2e}, virtual time relative error {tau_err:.2e}")))
}

fn harnack_growth() -> Outcome {
    let bump = GridDensity::bump(GridSpec::new(1, 32.0, 4096)?, 1.0, 0.03)?;
    let mut harnack = f64::INFINITY;
    for t in [0.25, 0.5, 1.0, 2.0] {
        harnack = harnack.min(check_harnack(&bump, t)?);
    }
    let spec = GridSpec::with_spacing(1, 4096, 0.1)?;
    let times = [0.5, 1.0, 2.0, 4.0];
    let w = density_from_weight(spec, 1, 1.0, DEFAULT_TAIL_TOL)?;
    let tau_w = estimate_virtual_time(&w)?.tau;
    let growth_w = check_tau_growth(&w, tau_w, &times)?;
    let g = GridDensity::gaussian(spec, 1.0, &[0.0])?;
    let growth_g = check_tau_growth(&g, 1.0, &times)?;
    let mut worst_w = f64::INFINITY;
    let mut worst_g: f64 = 0.0;
    for (i, t) in times.iter().enumerate() {
        worst_w = worst_w.min(growth_w[i] / (tau_w + t));
        worst_g = worst_g.max(growth_g[i].abs() / (1.0 + t));
    }
    let ok = harnack >= -1e-3 && worst_w >= -0.02 && worst_g <= 0.02;
    Ok((
        ok,
        format!(
            "harnack margin {harnack:.4}, weight growth margin {worst_w:.4} of tau0+t, gaussian deviation {worst_g:.1e}"
        ),
    ))
}

fn long_time() -> Outcome {
    let spec = GridSpec::with_spacing(1, 4096, 0.1)?;
    let w = density_from_weight(spec, 1, 1.0, DEFAULT_TAIL_TOL)?;
    let mut l1 = Vec::new();
    let mut sup = Vec::new();
    for t in [1.0, 4.0, 16.0] {
        let u = heat_at(&w, t)?;
        let (x0, s) = moment_match(&u);
        let d = gaussian_distance(&u, t, t - s, &x0)?;
        l1.push(d.l1);
        sup.push(d.scaled_sup);
    }
    let ok = l1.windows(2).all(|p| p[1] < p[0]) && sup.windows(2).all(|p| p[1] < p[0]);
    Ok((ok, format!("l1 {l1:.4?}, scaled sup {sup:.4?}")))
}

fn flow_monotonicity() -> Outcome {
    let cfg = FlowConfig::default();
    let ellipse = run_flow(&CurveState::ellipse(2.0, 1.0, 128)?, 0.8, &cfg)?;
    let increase = ellipse.worst_increase();
    let circle = run_flow(&CurveState::circle(2f64.sqrt(), 128, &[0.0, 0.0])?, 0.9, &cfg)?;
    let target = (2.0 * PI / E).sqrt();
    let drift = circle.entropy_values().iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
    let ok = increase <= 2e-3 && drift <= 2e-3;
    let ev = ellipse.entropy_values();
    Ok((
        ok,
        format!(
            "ellipse entropy {:.4} -> {:.4} (worst increase {increase:.1e}), circle drift {drift:.1e}",
            ev[0],
            ev[ev.len() - 1]
        ),
    ))
}

fn inequality_chain() -> Outcome {
    let cfg = OptimizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, params) in [("sphere", vec![1.0, 2f64.sqrt()]), ("sphere", vec![2.0, 2.0]), ("veronese", vec![2.0])] {
        let s = sample(name, &params)?;
        let cm = cm_entropy(&s, &cfg)?.value;
        let ly = ly_confvol(&s, &cfg)?.value;
        let stable = stable_confvol_estimate(&s, &[0, 1, 2, 5], &cfg)?;
        let codim = s.ambient_dim - s.intrinsic_dim;
        let mut vt_max = f64::NEG_INFINITY;
        for extra in [0, 1, 3] {
            for rho in [0.25, 0.5, 1.0, 2.0, 4.0] {
                for _ in 0..4 {
                    let x0: Vec<f64> = (0..s.ambient_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    vt_max = vt_max.max(vt_lower_bound(&s, codim + extra, rho, &x0)?);
                }
            }
        }
        let here = ly <= cm + 5e-3 && stable.monotone && vt_max <= cm + 1e-2;
        ok &= here;
        let values: Vec<f64> = stable.results.iter().map(|r| r.value).collect();
        parts.push(format!("{name}{params:.3?}: cm {cm:.4}, ly {ly:.4}, stable {values:.4?}, vt max {vt_max:.4}"));
    }
    Ok((ok, parts.join("; ")))
}

fn lattice() -> Outcome {
    let (x, y) = (0.0, 2f64.sqrt());
    let rect = lattice_bound(x, y)?;
    let rect_formula = PI * y / (x * x + y * y - x + 1.0);
    let (x, y) = (0.5, 3f64.sqrt() / 2.0);
    let hex = lattice_bound(x, y)?;
    let hex_formula = PI * y / (x * x + y * y - x + 1.0);
    let (rect_exact, hex_exact) = (2f64.sqrt() * PI / 3.0, 3f64.sqrt() * PI / 3.0);
    let ok = rect.to_bits() == rect_formula.to_bits()
        && hex.to_bits() == hex_formula.to_bits()
        && (rect - rect_exact).abs() <= 4.0 * f64::EPSILON * rect_exact
        && (hex - hex_exact).abs() <= 4.0 * f64::EPSILON * hex_exact;
    Ok((ok, format!("rectangular {rect:.15}, hexagonal {hex:.15}")))
}

fn area_ratios() -> Outcome {
    let cfg = OptimizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let shrinkers: [(&str, Vec<f64>); 7] = [
        ("sphere", vec![1.0, 2f64.sqrt()]),
        ("sphere", vec![2.0, 2.0]),
        ("cylinder", vec![2f64.sqrt()]),
        ("clifford_torus", vec![2.0]),
        ("veronese", vec![2.0]),
        ("loxodrome", vec![1.0]),
        ("plane_patch", vec![2.0, 1e3]),
    ];
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (name, params) in shrinkers {
        let s = sample(name, &params)?;
        let cm = cm_entropy(&s, &cfg)?.value;
        let probes: Vec<(Vec<f64>, f64)> = (0..100)
            .map(|_| {
                let p = (0..s.ambient_dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
                (p, rng.gen_range(0.1..3.0))
            })
            .collect();
        let theta = area_ratio_theta(&s, &probes)?;
        let omega = crate::weights::ball_volume(s.intrinsic_dim);
        // |Σ ∩ B_R| ≤ e^π λ R^n is Θ ≤ e^π λ / ω_n
        let ratio = theta * omega / (PI.exp() * cm);
        ok &= ratio <= 1.0;
        worst = worst.max(ratio);
    }
    Ok((ok, format!("largest |S ∩ B_R| / (e^pi lambda R^n) = {worst:.4}")))
}
