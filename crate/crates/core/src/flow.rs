//! Curve-shortening flow of closed polylines in `ℝ²` and `ℝ³`, with entropy
//! checkpoints.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::functionals::{cm_entropy, FunctionalResult};
use crate::manifold::sample::{norm, shrinker_residual, SampledManifold};
use crate::optimize::OptimizerConfig;

/// Fewest points a flowed curve may carry.
pub const MIN_POINTS: usize = 64;
/// Explicit steps must satisfy `Δt ≤ STABILITY · (min spacing)²`.
pub const STABILITY: f64 = 0.2;
/// Curves shorter than this count as collapsed.
pub const COLLAPSE_LENGTH: f64 = 1e-3;

/// A closed polyline at a point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveState {
    points: Vec<Vec<f64>>,
    pub time: f64,
    pub steps: usize,
}

impl CurveState {
    /// Validate and wrap a closed polyline (last point joins the first).
    ///
    /// Planar curves are checked for self-intersections.
    pub fn new(points: Vec<Vec<f64>>, time: f64) -> Result<Self> {
        ensure!(points.len() >= MIN_POINTS, "curve needs at least {MIN_POINTS} points, got {}", points.len());
        let d = points[0].len();
        ensure!(d == 2 || d == 3, "curves live in R^2 or R^3, got dimension {d}");
        ensure!(points.iter().all(|p| p.len() == d), "points have mixed dimensions");
        let curve = Self { points, time, steps: 0 };
        for (i, l) in curve.spacings().iter().enumerate() {
            if *l == 0.0 {
                return Err(Error::CoincidentPoints(i));
            }
        }
        if d == 2 {
            if let Some((i, j)) = curve.first_crossing() {
                return Err(Error::InvalidParameter(format!("curve crosses itself at segments {i} and {j}")));
            }
        }
        Ok(curve)
    }

    /// Circle of radius `r` about `center`, equally spaced.
    pub fn circle(radius: f64, points: usize, center: &[f64]) -> Result<Self> {
        ensure!(radius > 0.0, "radius must be positive");
        let pts = (0..points)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / points as f64;
                vec![center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        Self::new(pts, 0.0)
    }

    /// Ellipse with semi-axes `a` (along x) and `b`, resampled to uniform arclength.
    pub fn ellipse(a: f64, b: f64, points: usize) -> Result<Self> {
        ensure!(a > 0.0 && b > 0.0, "semi-axes must be positive");
        let fine = 16 * points;
        let pts = (0..fine)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / fine as f64;
                vec![a * t.cos(), b * t.sin()]
            })
            .collect();
        Ok(resample(&Self::new(pts, 0.0)?, points))
    }

    /// Square of side `2 half_side` with corners rounded to radius `corner`.
    pub fn rounded_square(half_side: f64, corner: f64, points: usize) -> Result<Self> {
        ensure!(corner > 0.0 && corner < half_side, "need 0 < corner < half_side");
        let straight = 2.0 * (half_side - corner);
        let arc = 0.5 * PI * corner;
        let total = 4.0 * (straight + arc);
        let c = half_side - corner;
        let pts = (0..points)
            .map(|i| {
                let mut s = total * i as f64 / points as f64;
                let mut side = 0;
                while s >= straight + arc && side < 3 {
                    s -= straight + arc;
                    side += 1;
                }
                // side 0 runs up the right edge, then turns through the top-right corner
                let (x, y) = if s < straight {
                    (half_side, -c + s)
                } else {
                    let a = (s - straight) / corner;
                    (c + corner * a.cos(), c + corner * a.sin())
                };
                let angle = 0.5 * PI * side as f64;
                vec![x * angle.cos() - y * angle.sin(), x * angle.sin() + y * angle.cos()]
            })
            .collect();
        Self::new(pts, 0.0)
    }

    /// Planar curve placed in `ℝ³` on the plane tilted by `angle` about the x-axis.
    pub fn tilted(&self, angle: f64) -> Result<Self> {
        ensure!(self.dim() == 2, "only planar curves can be tilted");
        let pts = self.points.iter().map(|p| vec![p[0], p[1] * angle.cos(), p[1] * angle.sin()]).collect();
        let mut out = Self::new(pts, self.time)?;
        out.steps = self.steps;
        Ok(out)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Segment lengths `|x_{i+1} − x_i|`.
    pub fn spacings(&self) -> Vec<f64> {
        let p = self.len();
        (0..p)
            .map(|i| {
                let (a, b) = (&self.points[i], &self.points[(i + 1) % p]);
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            })
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.spacings().iter().sum()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacings().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Largest ratio between consecutive segment lengths.
    pub fn spacing_ratio(&self) -> f64 {
        let s = self.spacings();
        let p = s.len();
        (0..p).map(|i| (s[i] / s[(i + 1) % p]).max(s[(i + 1) % p] / s[i])).fold(1.0, f64::max)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        for p in &self.points {
            for (ci, x) in c.iter_mut().zip(p) {
                *ci += x / self.len() as f64;
            }
        }
        c
    }

    /// Mean distance of the points from their centroid.
    pub fn mean_radius(&self) -> f64 {
        let c = self.centroid();
        self.points.iter().map(|p| p.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()).sum::<f64>()
            / self.len() as f64
    }

    pub fn to_sampled(&self) -> Result<SampledManifold> {
        SampledManifold::from_closed_polyline(&self.points)
    }

    fn first_crossing(&self) -> Option<(usize, usize)> {
        let p = self.len();
        let seg = |i: usize| (&self.points[i], &self.points[(i + 1) % p]);
        let cross = |o: &[f64], a: &[f64], b: &[f64]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
        for i in 0..p {
            let (a, b) = seg(i);
            for j in i + 2..p {
                if i == 0 && j == p - 1 {
                    continue;
                }
                let (c, d) = seg(j);
                let d1 = cross(a, b, c);
                let d2 = cross(a, b, d);
                let d3 = cross(c, d, a);
                let d4 = cross(c, d, b);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// Discrete curvature vector `2((x₊−x)/l₊ − (x−x₋)/l₋)/(l₊+l₋)` at every point.
pub fn curvature_vector(curve: &CurveState) -> Result<Vec<Vec<f64>>> {
    let p = curve.len();
    let d = curve.dim();
    let pts = &curve.points;
    (0..p)
        .map(|i| {
            let (prev, cur, next) = (&pts[(i + p - 1) % p], &pts[i], &pts[(i + 1) % p]);
            let fwd: Vec<f64> = (0..d).map(|k| next[k] - cur[k]).collect();
            let back: Vec<f64> = (0..d).map(|k| cur[k] - prev[k]).collect();
            let (lf, lb) = (norm(&fwd), norm(&back));
            if lf == 0.0 || lb == 0.0 {
                return Err(Error::CoincidentPoints(i));
            }
            Ok((0..d).map(|k| 2.0 * (fwd[k] / lf - back[k] / lb) / (lf + lb)).collect())
        })
        .collect()
}

/// Redistribute `points` nodes uniformly in arclength along the Catmull-Rom spline through the curve.
pub fn resample(curve: &CurveState, points: usize) -> CurveState {
    let p = curve.len();
    let d = curve.dim();
    let spacings = curve.spacings();
    let total: f64 = spacings.iter().sum();
    let mut cumulative = Vec::with_capacity(p + 1);
    cumulative.push(0.0);
    for s in &spacings {
        cumulative.push(cumulative.last().unwrap() + s);
    }
    let pts = &curve.points;
    let mut seg = 0;
    let out = (0..points)
        .map(|k| {
            let target = total * k as f64 / points as f64;
            while seg + 1 < p && cumulative[seg + 1] <= target {
                seg += 1;
            }
            let u = (target - cumulative[seg]) / spacings[seg];
            let (u2, u3) = (u * u, u * u * u);
            let w = [-0.5 * u3 + u2 - 0.5 * u, 1.5 * u3 - 2.5 * u2 + 1.0, -1.5 * u3 + 2.0 * u2 + 0.5 * u, 0.5 * u3 - 0.5 * u2];
            let idx = [(seg + p - 1) % p, seg, (seg + 1) % p, (seg + 2) % p];
            (0..d).map(|c| idx.iter().zip(&w).map(|(&i, wi)| wi * pts[i][c]).sum()).collect()
        })
        .collect();
    CurveState { points: out, time: curve.time, steps: curve.steps }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// `Δt = dt_factor · (min spacing)²`; at most [`STABILITY`].
    pub dt_factor: f64,
    pub checkpoints: usize,
    pub resample_every: usize,
    pub optimizer: OptimizerConfig,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { dt_factor: STABILITY, checkpoints: 10, resample_every: 20, optimizer: OptimizerConfig::default() }
    }
}

/// One explicit Euler step `x ← x + Δt κ`, resampling every `resample_every` steps.
pub fn flow_step(curve: &CurveState, dt: f64, resample_every: usize) -> Result<CurveState> {
    ensure!(dt > 0.0, "time step must be positive");
    let bound = STABILITY * curve.min_spacing().powi(2);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::Stability { dt, bound });
    }
    let kappa = curvature_vector(curve)?;
    let points = curve
        .points
        .iter()
        .zip(&kappa)
        .map(|(x, k)| x.iter().zip(k).map(|(a, b)| a + dt * b).collect())
        .collect();
    let mut next = CurveState { points, time: curve.time + dt, steps: curve.steps + 1 };
    if resample_every > 0 && next.steps.is_multiple_of(resample_every) {
        next = resample(&next, next.len());
    }
    let length = next.length();
    if length.is_nan() || length < COLLAPSE_LENGTH {
        return Err(Error::Collapse(length));
    }
    Ok(next)
}

/// Flow until `time` with the largest stable steps.
pub fn flow_until(curve: &CurveState, time: f64, cfg: &FlowConfig) -> Result<CurveState> {
    ensure!(cfg.dt_factor > 0.0 && cfg.dt_factor <= STABILITY, "dt factor must lie in (0, {STABILITY}]");
    let mut state = curve.clone();
    while state.time < time {
        let dt = (cfg.dt_factor * state.min_spacing().powi(2)).min(time - state.time);
        state = flow_step(&state, dt, cfg.resample_every)?;
        if time - state.time < 1e-14 {
            state.time = time;
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub entropies: Vec<FunctionalResult>,
    /// `max |κ + x⊥/2|` on the polyline.
    pub residuals: Vec<f64>,
    pub lengths: Vec<f64>,
    pub min_spacings: Vec<f64>,
    pub steps: Vec<usize>,
}

impl FlowTrace {
    pub fn entropy_values(&self) -> Vec<f64> {
        self.entropies.iter().map(|r| r.value).collect()
    }

    /// Largest increase `λ(t₂) − λ(t₁)` over checkpoint pairs `t₁ < t₂`.
    pub fn worst_increase(&self) -> f64 {
        let v = self.entropy_values();
        let mut worst = f64::NEG_INFINITY;
        let mut running_min = f64::INFINITY;
        for x in v {
            worst = worst.max(x - running_min);
            running_min = running_min.min(x);
        }
        worst.max(0.0)
    }
}

/// Flow to `horizon`, evaluating the entropy at `cfg.checkpoints + 1` equally spaced times.
pub fn run_flow(curve0: &CurveState, horizon: f64, cfg: &FlowConfig) -> Result<FlowTrace> {
    ensure!(horizon > 0.0, "horizon must be positive");
    ensure!(cfg.checkpoints >= 1, "need at least one checkpoint");
    let mut trace = FlowTrace {
        times: Vec::new(),
        entropies: Vec::new(),
        residuals: Vec::new(),
        lengths: Vec::new(),
        min_spacings: Vec::new(),
        steps: Vec::new(),
    };
    let mut state = curve0.clone();
    for c in 0..=cfg.checkpoints {
        let target = curve0.time + horizon * c as f64 / cfg.checkpoints as f64;
        state = flow_until(&state, target, cfg)?;
        let sampled = state.to_sampled()?;
        trace.times.push(state.time);
        trace.entropies.push(cm_entropy(&sampled, &cfg.optimizer)?);
        trace.residuals.push(shrinker_residual(&sampled)?);
        trace.lengths.push(state.length());
        trace.min_spacings.push(state.min_spacing());
        trace.steps.push(state.steps);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_curvature() {
        let c = CurveState::circle(2.0, 128, &[1.0, -1.0]).unwrap();
        for (k, p) in curvature_vector(&c).unwrap().iter().zip(c.points()) {
            let inward = [(1.0 - p[0]) / 2.0, (-1.0 - p[1]) / 2.0];
            assert!((k[0] - 0.5 * inward[0]).abs() < 1e-10 && (k[1] - 0.5 * inward[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn ellipse_vertex_curvature() {
        let e = CurveState::ellipse(2.0, 1.0, 512).unwrap();
        let k = curvature_vector(&e).unwrap();
        // the first resampled point is the vertex (2, 0)
        assert!((e.points()[0][0] - 2.0).abs() < 1e-9);
        assert!((norm(&k[0]) - 2.0).abs() < 0.02);
    }

    #[test]
    fn straight_sides_are_flat() {
        let sq = CurveState::rounded_square(2.0, 0.5, 400).unwrap();
        let k = curvature_vector(&sq).unwrap();
        let flat = sq.points().iter().zip(&k).filter(|(p, _)| p[0] > 1.9999 && p[1].abs() < 1.3);
        let mut count = 0;
        for (_, kv) in flat {
            assert!(norm(kv) <= 1e-6);
            count += 1;
        }
        assert!(count > 10);
    }

    #[test]
    fn shrinking_circle() {
        let r0 = 2f64.sqrt();
        let c = CurveState::circle(r0, 128, &[0.0, 0.0]).unwrap();
        let cfg = FlowConfig::default();
        for t in [0.3, 0.6, 0.9] {
            let s = flow_until(&c, t, &cfg).unwrap();
            let exact = (r0 * r0 - 2.0 * t).sqrt();
            assert!((s.mean_radius() - exact).abs() < 1e-3, "t = {t}: {} vs {exact}", s.mean_radius());
        }
    }

    #[test]
    fn ellipse_stays_regular() {
        let e = CurveState::ellipse(2.0, 1.0, 128).unwrap();
        let s = flow_until(&e, 0.9, &FlowConfig::default()).unwrap();
        assert!(s.spacing_ratio() <= 3.0);
        assert!(CurveState::new(s.points().to_vec(), s.time).is_ok());
    }

    #[test]
    fn step_errors() {
        let c = CurveState::circle(1.0, 64, &[0.0, 0.0]).unwrap();
        let bound = STABILITY * c.min_spacing().powi(2);
        assert!(matches!(flow_step(&c, 2.0 * bound, 20), Err(Error::Stability { .. })));
        let tiny = CurveState::circle(1.5e-4, 64, &[0.0, 0.0]).unwrap();
        let dt = STABILITY * tiny.min_spacing().powi(2);
        assert!(matches!(flow_step(&tiny, dt, 20), Err(Error::Collapse(_))));
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(CurveState::circle(1.0, 32, &[0.0, 0.0]).is_err());
        let mut figure_eight: Vec<Vec<f64>> = (0..128)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 128.0;
                vec![t.sin(), (2.0 * t).sin()]
            })
            .collect();
        assert!(CurveState::new(figure_eight.clone(), 0.0).is_err());
        figure_eight[5] = figure_eight[4].clone();
        assert!(matches!(CurveState::new(figure_eight, 0.0), Err(Error::CoincidentPoints(4))));
    }

    #[test]
    fn resampling_preserves_circle() {
        let c = CurveState::ellipse(1.0, 1.0, 200).unwrap();
        let r = resample(&c, 200);
        let spacing = r.spacings();
        let mean = spacing.iter().sum::<f64>() / 200.0;
        assert!(spacing.iter().all(|s| (s - mean).abs() < 1e-6));
        assert!(r.points().iter().all(|p| (norm(p) - 1.0).abs() < 1e-7));
    }

    #[test]
    fn length_decreases() {
        let e = CurveState::ellipse(2.0, 1.0, 128).unwrap();
        let cfg = FlowConfig::default();
        let mut last = e.length();
        let mut s = e;
        for t in [0.1, 0.2, 0.3] {
            s = flow_until(&s, t, &cfg).unwrap();
            assert!(s.length() < last);
            last = s.length();
        }
    }
}
