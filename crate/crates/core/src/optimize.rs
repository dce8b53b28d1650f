//! Supremum search over centers `x₀ ∈ ℝ^N` and a positive scale.
//!
//! A coarse scan over a center set and a log-spaced scale grid picks the
//! best starts; Nelder-Mead then refines each start in `(x₀, ln scale)`,
//! clamped to the search box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// A family of functionals indexed by a center and a scale.
pub trait ScaleFamily: Sync {
    fn center_dim(&self) -> usize;

    /// Values at one center for several scales.
    fn eval_scales(&self, center: &[f64], scales: &[f64]) -> Vec<f64>;

    fn eval(&self, center: &[f64], scale: f64) -> f64 {
        self.eval_scales(center, &[scale])[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub scale_min: f64,
    pub scale_max: f64,
    pub scale_count: usize,
    /// Padding added to the bounding box of the sample on every side.
    pub center_pad: f64,
    /// Grid points per axis when the ambient dimension is at most `max_grid_dim`.
    pub coarse_per_axis: usize,
    pub max_grid_dim: usize,
    /// Random centers in higher ambient dimension.
    pub random_centers: usize,
    pub n_starts: usize,
    pub n_refine: usize,
    pub tol: f64,
    pub seed: u64,
    /// Keep every coarse probe in the result.
    pub record_scan: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            scale_min: 0.02,
            scale_max: 50.0,
            scale_count: 40,
            center_pad: 2.0,
            coarse_per_axis: 5,
            max_grid_dim: 3,
            random_centers: 200,
            n_starts: 5,
            n_refine: 200,
            tol: 1e-9,
            seed: 0,
            record_scan: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.scale_min > 0.0 && self.scale_max > self.scale_min,
            "scale range must satisfy 0 < min < max, got [{}, {}]",
            self.scale_min,
            self.scale_max
        );
        ensure!(self.scale_count >= 2, "scale grid needs at least two points");
        ensure!(self.center_pad >= 0.0, "center padding must be non-negative");
        ensure!(self.coarse_per_axis >= 1, "coarse grid needs at least one point per axis");
        ensure!(self.n_starts >= 1, "need at least one start");
        ensure!(self.tol > 0.0, "tolerance must be positive");
        Ok(())
    }

    /// Log-spaced scales from `scale_min` to `scale_max`.
    pub fn scale_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.scale_min.ln(), self.scale_max.ln());
        let k = self.scale_count - 1;
        (0..self.scale_count).map(|i| (lo + (hi - lo) * i as f64 / k as f64).exp()).collect()
    }
}

/// One coarse probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub center: Vec<f64>,
    pub scale: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub value: f64,
    pub center: Vec<f64>,
    pub scale: f64,
    pub n_starts: usize,
    pub converged: bool,
    pub evaluations: usize,
    pub coarse_best: f64,
    pub scan: Option<Vec<ScanRow>>,
}

/// Axis-aligned search box for centers.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SearchBox {
    pub fn padded(lo: &[f64], hi: &[f64], pad: f64) -> Self {
        Self { lo: lo.iter().map(|v| v - pad).collect(), hi: hi.iter().map(|v| v + pad).collect() }
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

fn coarse_centers(bounds: &SearchBox, seeds: &[Vec<f64>], cfg: &OptimizerConfig) -> Vec<Vec<f64>> {
    let dim = bounds.lo.len();
    let mut centers: Vec<Vec<f64>> = seeds.to_vec();
    if dim <= cfg.max_grid_dim {
        let k = cfg.coarse_per_axis;
        let axis = |d: usize, i: usize| {
            if k == 1 {
                0.5 * (bounds.lo[d] + bounds.hi[d])
            } else {
                bounds.lo[d] + (bounds.hi[d] - bounds.lo[d]) * i as f64 / (k - 1) as f64
            }
        };
        let total = k.pow(dim as u32);
        for flat in 0..total {
            let mut rest = flat;
            let mut c = vec![0.0; dim];
            for d in (0..dim).rev() {
                c[d] = axis(d, rest % k);
                rest /= k;
            }
            centers.push(c);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.random_centers {
            centers.push((0..dim).map(|d| rng.gen_range(bounds.lo[d]..=bounds.hi[d])).collect());
        }
    }
    for c in &mut centers {
        bounds.clamp(c);
    }
    centers
}

/// Maximize `family` over the box and the configured scale range.
pub fn maximize(
    family: &dyn ScaleFamily,
    bounds: &SearchBox,
    seeds: &[Vec<f64>],
    cfg: &OptimizerConfig,
) -> Result<Optimum> {
    cfg.validate()?;
    let dim = family.center_dim();
    ensure!(bounds.lo.len() == dim && bounds.hi.len() == dim, "search box has wrong dimension");
    let scales = cfg.scale_grid();
    let centers = coarse_centers(bounds, seeds, cfg);

    let rows: Vec<Vec<f64>> = centers.par_iter().map(|c| family.eval_scales(c, &scales)).collect();
    let mut evaluations = centers.len() * scales.len();

    // best scale per center, then the best distinct centers
    let mut per_center: Vec<(usize, usize, f64)> = rows
        .iter()
        .enumerate()
        .map(|(ci, row)| {
            let (si, v) = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            (ci, si, v)
        })
        .collect();
    per_center.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    let coarse_best = per_center[0].2;
    let starts: Vec<(Vec<f64>, f64)> = per_center
        .iter()
        .take(cfg.n_starts)
        .map(|&(ci, si, _)| (centers[ci].clone(), scales[si]))
        .collect();

    let log_lo = cfg.scale_min.ln();
    let log_hi = cfg.scale_max.ln();
    let center_step: Vec<f64> = (0..dim)
        .map(|d| {
            let spacing = (bounds.hi[d] - bounds.lo[d]) / (cfg.coarse_per_axis.max(2) - 1) as f64;
            (0.5 * spacing).clamp(1e-6, 1.0)
        })
        .collect();
    let log_step = (log_hi - log_lo) / (cfg.scale_count - 1) as f64;

    let objective = |p: &[f64]| -> f64 {
        let mut q = p.to_vec();
        bounds.clamp(&mut q[..dim]);
        let s = q[dim].clamp(log_lo, log_hi).exp();
        -family.eval(&q[..dim], s)
    };

    let refined: Vec<NelderMeadResult> = starts
        .par_iter()
        .map(|(c, s)| {
            let mut x0 = c.clone();
            x0.push(s.ln());
            let mut steps = center_step.clone();
            steps.push(log_step);
            nelder_mead(&objective, &x0, &steps, cfg.n_refine, cfg.tol)
        })
        .collect();

    let mut best_value = coarse_best;
    let (ci, si, _) = per_center[0];
    let mut best_center = centers[ci].clone();
    let mut best_scale = scales[si];
    let mut converged = false;
    for (i, r) in refined.iter().enumerate() {
        evaluations += r.evaluations;
        if i == 0 {
            converged = r.converged;
        }
        if -r.value > best_value {
            best_value = -r.value;
            let mut c = r.point[..dim].to_vec();
            bounds.clamp(&mut c);
            best_center = c;
            best_scale = r.point[dim].clamp(log_lo, log_hi).exp();
            converged = r.converged;
        }
    }

    let scan = cfg.record_scan.then(|| {
        centers
            .iter()
            .zip(&rows)
            .flat_map(|(c, row)| {
                scales.iter().zip(row).map(move |(&s, &v)| ScanRow { center: c.clone(), scale: s, value: v })
            })
            .collect()
    });

    Ok(Optimum {
        value: best_value,
        center: best_center,
        scale: best_scale,
        n_starts: starts.len(),
        converged,
        evaluations,
        coarse_best,
        scan,
    })
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0` with an axis-aligned initial simplex.
///
/// Stops after `max_iter` iterations, or once the simplex diameter or the
/// spread of its values falls below `tol`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    steps: &[f64],
    max_iter: usize,
    tol: f64,
) -> NelderMeadResult {
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for k in 0..dim {
        let mut v = x0.to_vec();
        v[k] += steps[k];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evaluations = dim + 1;
    let mut converged = false;
    let mut iterations = 0;

    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };

    while iterations < max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread = values[dim] - values[0];
        if diameter <= tol || spread <= tol * values[0].abs().max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for v in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let reflected = combine(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        evaluations += 1;
        if fr < values[0] {
            let expanded = combine(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            evaluations += 1;
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let c = combine(&centroid, &reflected, 0.5);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = combine(&centroid, &worst, 0.5);
            let fc = f(&c);
            (c, fc)
        };
        evaluations += 1;
        if fc < values[dim].min(fr) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=dim {
            simplex[i] = combine(&best, &simplex[i], 0.5);
            values[i] = f(&simplex[i]);
        }
        evaluations += dim;
    }

    let (bi, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    NelderMeadResult { point: simplex[bi].clone(), value: values[bi], iterations, evaluations, converged }
}
