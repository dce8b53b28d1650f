use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chart::{fd_jet, ChartSpec, Jet};
use crate::error::{ensure, Error, Result};
use crate::quadrature::{QuadratureGrid, Rule1d};

/// Smallest admissible `det(JᵀJ)`.
pub const DEGENERATE_METRIC: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeMode {
    /// Use the chart's analytic jet, falling back to finite differences if it has none.
    Analytic,
    FiniteDifference,
}

/// Quadrature nodes on a submanifold with first- and second-order geometry.
///
/// All per-node arrays are flat: positions are `N` wide, tangent frames are
/// `n × N` (orthonormal rows), mean curvature vectors are `N` wide.
#[derive(Debug, Clone)]
pub struct SampledManifold {
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub multiplicity: f64,
    positions: Vec<f64>,
    area: Vec<f64>,
    tangents: Vec<f64>,
    mean_curvature: Option<Vec<f64>>,
    pub truncation_note: Option<String>,
}

impl SampledManifold {
    /// Assemble from raw per-node arrays; `tangents` must already be orthonormal.
    pub fn from_parts(
        intrinsic_dim: usize,
        ambient_dim: usize,
        multiplicity: f64,
        positions: Vec<f64>,
        area: Vec<f64>,
        tangents: Vec<f64>,
        mean_curvature: Option<Vec<f64>>,
    ) -> Result<Self> {
        let count = area.len();
        ensure!(positions.len() == count * ambient_dim, "positions do not match node count");
        ensure!(tangents.len() == count * intrinsic_dim * ambient_dim, "tangents do not match node count");
        if let Some(h) = &mean_curvature {
            ensure!(h.len() == count * ambient_dim, "mean curvature does not match node count");
        }
        ensure!(area.iter().all(|a| *a > 0.0), "area elements must be positive");
        Ok(Self {
            intrinsic_dim,
            ambient_dim,
            multiplicity,
            positions,
            area,
            tangents,
            mean_curvature,
            truncation_note: None,
        })
    }

    pub fn len(&self) -> usize {
        self.area.len()
    }

    pub fn is_empty(&self) -> bool {
        self.area.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Area element of node `i` without the multiplicity factor.
    pub fn area_element(&self, i: usize) -> f64 {
        self.area[i]
    }

    pub fn area_elements(&self) -> &[f64] {
        &self.area
    }

    pub fn tangent(&self, i: usize, k: usize) -> &[f64] {
        let big = self.ambient_dim;
        let start = (i * self.intrinsic_dim + k) * big;
        &self.tangents[start..start + big]
    }

    pub fn mean_curvature(&self, i: usize) -> Option<&[f64]> {
        self.mean_curvature
            .as_ref()
            .map(|h| &h[i * self.ambient_dim..(i + 1) * self.ambient_dim])
    }

    pub fn has_mean_curvature(&self) -> bool {
        self.mean_curvature.is_some()
    }

    /// Component of `v` normal to the tangent space at node `i`.
    pub fn normal_part(&self, i: usize, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for k in 0..self.intrinsic_dim {
            let e = self.tangent(i, k);
            let dot: f64 = e.iter().zip(v).map(|(a, b)| a * b).sum();
            for (o, ei) in out.iter_mut().zip(e) {
                *o -= dot * ei;
            }
        }
        out
    }

    /// `multiplicity · Σ f(x_i) dA_i`.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += f(self.position(i)) * self.area[i];
        }
        self.multiplicity * acc
    }

    /// `multiplicity · Σ g(|x_i − x₀|²) dA_i`.
    pub fn integrate_radial<F: Fn(f64) -> f64>(&self, x0: &[f64], g: F) -> f64 {
        let big = self.ambient_dim;
        let mut acc = 0.0;
        for (x, a) in self.positions.chunks_exact(big).zip(&self.area) {
            let mut r2 = 0.0;
            for k in 0..big {
                let d = x[k] - x0[k];
                r2 += d * d;
            }
            acc += g(r2) * a;
        }
        self.multiplicity * acc
    }

    pub fn total_area(&self) -> f64 {
        self.multiplicity * self.area.iter().sum::<f64>()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let big = self.ambient_dim;
        let mut c = vec![0.0; big];
        let mut total = 0.0;
        for (x, a) in self.positions.chunks_exact(big).zip(&self.area) {
            for k in 0..big {
                c[k] += a * x[k];
            }
            total += a;
        }
        c.iter().map(|v| v / total).collect()
    }

    /// Componentwise `(min, max)` of the node positions.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let big = self.ambient_dim;
        let mut lo = vec![f64::INFINITY; big];
        let mut hi = vec![f64::NEG_INFINITY; big];
        for x in self.positions.chunks_exact(big) {
            for k in 0..big {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        (lo, hi)
    }

    /// Closed polyline with trapezoid weights; curvature from the three-point formula.
    pub fn from_closed_polyline(points: &[Vec<f64>]) -> Result<Self> {
        let p = points.len();
        ensure!(p >= 3, "polyline needs at least three points");
        let big = points[0].len();
        let mut positions = Vec::with_capacity(p * big);
        let mut area = Vec::with_capacity(p);
        let mut tangents = Vec::with_capacity(p * big);
        let mut curvature = Vec::with_capacity(p * big);
        for i in 0..p {
            let prev = &points[(i + p - 1) % p];
            let cur = &points[i];
            let next = &points[(i + 1) % p];
            let back: Vec<f64> = (0..big).map(|k| cur[k] - prev[k]).collect();
            let fwd: Vec<f64> = (0..big).map(|k| next[k] - cur[k]).collect();
            let lb = norm(&back);
            let lf = norm(&fwd);
            if lb == 0.0 || lf == 0.0 {
                return Err(Error::CoincidentPoints(i));
            }
            positions.extend_from_slice(cur);
            area.push(0.5 * (lb + lf));
            let chord: Vec<f64> = (0..big).map(|k| next[k] - prev[k]).collect();
            let lc = norm(&chord);
            tangents.extend(chord.iter().map(|v| v / lc));
            for k in 0..big {
                curvature.push(2.0 * (fwd[k] / lf - back[k] / lb) / (lb + lf));
            }
        }
        Self::from_parts(1, big, 1.0, positions, area, tangents, Some(curvature))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct NodeGeometry {
    sqrt_det: f64,
    frame: Vec<Vec<f64>>,
    mean_curvature: Vec<f64>,
}

fn node_geometry(jet: &Jet) -> std::result::Result<NodeGeometry, f64> {
    let n = jet.first.len();
    let big = jet.position.len();
    let metric = DMatrix::from_fn(n, n, |i, j| dot(&jet.first[i], &jet.first[j]));
    let det = metric.determinant();
    if det.is_nan() || det <= DEGENERATE_METRIC {
        return Err(det);
    }
    let inverse = metric.try_inverse().ok_or(det)?;

    // Gram-Schmidt on the coordinate tangents
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    for v in &jet.first {
        let mut w = v.clone();
        for e in &frame {
            let d = dot(&w, e);
            for (wk, ek) in w.iter_mut().zip(e) {
                *wk -= d * ek;
            }
        }
        let l = norm(&w);
        frame.push(w.iter().map(|x| x / l).collect());
    }

    let mut trace = vec![0.0; big];
    for i in 0..n {
        for j in 0..n {
            let g = inverse[(i, j)];
            for (t, s) in trace.iter_mut().zip(&jet.second[i * n + j]) {
                *t += g * s;
            }
        }
    }
    for e in &frame {
        let d = dot(&trace, e);
        for (t, ek) in trace.iter_mut().zip(e) {
            *t -= d * ek;
        }
    }
    Ok(NodeGeometry { sqrt_det: det.sqrt(), frame, mean_curvature: trace })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn jet_at(chart: &ChartSpec, u: &[f64], mode: DerivativeMode, steps: &[f64]) -> Jet {
    match mode {
        DerivativeMode::Analytic => {
            chart.embedding.jet(u).unwrap_or_else(|| fd_jet(chart.embedding.as_ref(), u, steps))
        }
        DerivativeMode::FiniteDifference => fd_jet(chart.embedding.as_ref(), u, steps),
    }
}

/// The tensor quadrature a chart is sampled with.
pub fn quadrature_for(chart: &ChartSpec, resolution: &[usize]) -> Result<QuadratureGrid> {
    ensure!(
        resolution.len() == chart.intrinsic_dim(),
        "resolution has {} axes, chart has {}",
        resolution.len(),
        chart.intrinsic_dim()
    );
    ensure!(resolution.iter().all(|&r| r >= 4), "resolution must be at least 4 per axis, got {resolution:?}");
    let rules: Vec<Rule1d> = chart
        .axes
        .iter()
        .zip(resolution)
        .map(|(a, &r)| if a.periodic { Rule1d::periodic(a.lo, a.hi, r) } else { Rule1d::gauss(a.lo, a.hi, r) })
        .collect();
    QuadratureGrid::tensor(&rules)
}

/// Sample a chart with Gauss-Legendre nodes on bounded axes and equal weights on periodic ones.
pub fn build_samples(chart: &ChartSpec, resolution: &[usize], mode: DerivativeMode) -> Result<SampledManifold> {
    let grid = quadrature_for(chart, resolution)?;
    ensure!(chart.multiplicity > 0.0, "multiplicity must be positive");
    let n = chart.intrinsic_dim();
    let big = chart.ambient_dim();
    let steps = chart.fd_steps();
    let count = grid.len() * chart.sheets.len();
    let mut positions = Vec::with_capacity(count * big);
    let mut area = Vec::with_capacity(count);
    let mut tangents = Vec::with_capacity(count * n * big);
    let mut curvature = Vec::with_capacity(count * big);
    for (s, sheet) in chart.sheets.iter().enumerate() {
        for i in 0..grid.len() {
            let u = grid.node(i);
            let jet = sheet.apply_jet(&jet_at(chart, u, mode, &steps));
            let geom = node_geometry(&jet).map_err(|det| Error::DegenerateMetric {
                node: s * grid.len() + i,
                param: u.to_vec(),
                det,
            })?;
            positions.extend_from_slice(&jet.position);
            area.push(grid.weights[i] * geom.sqrt_det);
            for e in &geom.frame {
                tangents.extend_from_slice(e);
            }
            curvature.extend_from_slice(&geom.mean_curvature);
        }
    }
    let mut sampled =
        SampledManifold::from_parts(n, big, chart.multiplicity, positions, area, tangents, Some(curvature))?;
    sampled.truncation_note = chart.truncation_note.clone();
    Ok(sampled)
}

/// Mean curvature vector `gⁱʲ (∂²F/∂uᵢ∂uⱼ)^⊥` from central differences of step `h`.
pub fn mean_curvature_at(chart: &ChartSpec, u: &[f64], h: f64) -> Result<Vec<f64>> {
    ensure!(h > 0.0, "step must be positive");
    ensure!(u.len() == chart.intrinsic_dim(), "parameter has wrong dimension");
    for (axis, &ui) in chart.axes.iter().zip(u) {
        if !axis.periodic {
            ensure!(
                ui - axis.lo >= 2.0 * h && axis.hi - ui >= 2.0 * h,
                "parameter {ui} within 2h of the boundary [{}, {}]",
                axis.lo,
                axis.hi
            );
        }
    }
    let steps = vec![h; u.len()];
    let jet = chart.sheets[0].apply_jet(&fd_jet(chart.embedding.as_ref(), u, &steps));
    node_geometry(&jet)
        .map(|g| g.mean_curvature)
        .map_err(|det| Error::DegenerateMetric { node: 0, param: u.to_vec(), det })
}

/// `max_i |H + x^⊥/2|` over the nodes.
pub fn shrinker_residual(sampled: &SampledManifold) -> Result<f64> {
    if !sampled.has_mean_curvature() {
        return Err(Error::MissingCurvature("sampled manifold carries no mean curvature".into()));
    }
    let mut worst: f64 = 0.0;
    for i in 0..sampled.len() {
        let h = sampled.mean_curvature(i).unwrap_or_default();
        let xn = sampled.normal_part(i, sampled.position(i));
        let r: f64 = h.iter().zip(&xn).map(|(a, b)| (a + 0.5 * b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::manifold::catalog::{catalog_make, product_with_plane};

    fn sample(name: &str, params: &[f64], res: &[usize]) -> SampledManifold {
        build_samples(&catalog_make(name, params).unwrap(), res, DerivativeMode::Analytic).unwrap()
    }

    #[test]
    fn areas() {
        assert!((sample("sphere", &[1.0, 1.0], &[256]).total_area() - 2.0 * PI).abs() < 1e-10);
        assert!((sample("sphere", &[2.0, 2.0], &[64, 128]).total_area() - 16.0 * PI).abs() < 1e-6);
        assert!((sample("veronese", &[1.0], &[64, 128]).total_area() - 6.0 * PI).abs() < 1e-4);
        let plane = sample("plane_patch", &[2.0, 1.0], &[24, 24]);
        assert!((plane.total_area() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn sphere_area_refines() {
        let a = sample("sphere", &[2.0, 1.0], &[32, 64]).total_area();
        let b = sample("sphere", &[2.0, 1.0], &[64, 128]).total_area();
        assert!((a - b).abs() < 1e-6);
        assert!((a - 4.0 * PI).abs() < 1e-5 && (b - 4.0 * PI).abs() < 1e-5);
    }

    #[test]
    fn veronese_area_from_finite_differences() {
        let chart = catalog_make("veronese", &[1.0]).unwrap();
        let s = build_samples(&chart, &[64, 128], DerivativeMode::FiniteDifference).unwrap();
        assert!((s.total_area() - 6.0 * PI).abs() < 1e-4);
    }

    #[test]
    fn loxodrome_branch_length() {
        let chart = catalog_make("loxodrome", &[1.0, 12.0]).unwrap();
        let s = build_samples(&chart, &[400], DerivativeMode::Analytic).unwrap();
        // two branches
        let exact = 2.0 * 2f64.sqrt() * (12f64.exp() - (-12f64).exp());
        assert!((s.total_area() - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn circle_curvature() {
        let chart = catalog_make("sphere", &[1.0, 1.0]).unwrap();
        for u in [0.0, 1.0, 4.0] {
            let h = mean_curvature_at(&chart, &[u], 1e-4).unwrap();
            let x = chart.point(0, &[u]);
            assert!((h[0] + x[0]).abs() < 1e-6 && (h[1] + x[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn round_shrinker_identity_pointwise() {
        let chart = catalog_make("sphere", &[2.0, 2.0]).unwrap();
        let u = [1.0, 0.4];
        let h = mean_curvature_at(&chart, &u, 1e-3).unwrap();
        let x = chart.point(0, &u);
        for k in 0..3 {
            assert!((h[k] + 0.5 * x[k]).abs() < 1e-5);
        }
    }

    #[test]
    fn veronese_shrinker_by_finite_differences() {
        let chart = catalog_make("veronese", &[2.0]).unwrap();
        let s = build_samples(&chart, &[64, 128], DerivativeMode::FiniteDifference).unwrap();
        assert!(shrinker_residual(&s).unwrap() <= 1e-3);
    }

    #[test]
    fn shrinker_residuals() {
        assert!(shrinker_residual(&sample("sphere", &[1.0, 2f64.sqrt()], &[128])).unwrap() <= 1e-8);
        assert!(shrinker_residual(&sample("sphere", &[2.0, 2.0], &[32, 64])).unwrap() <= 1e-8);
        let unit = shrinker_residual(&sample("sphere", &[1.0, 1.0], &[64])).unwrap();
        assert!((unit - 0.5).abs() < 1e-10);
        for (name, params) in [
            ("cylinder", vec![2f64.sqrt(), 10.0]),
            ("veronese", vec![2.0]),
            ("clifford_torus", vec![2.0]),
        ] {
            let r = shrinker_residual(&sample(name, &params, &[16, 16])).unwrap();
            assert!(r <= 1e-8, "{name}: {r}");
        }
    }

    // finite-difference curvature converges at second order toward the analytic one
    #[test]
    fn finite_difference_residual_order() {
        let chart = catalog_make("clifford_torus", &[2.0]).unwrap();
        let u = [0.7, 2.1];
        let res = |h: f64| {
            let hv = mean_curvature_at(&chart, &u, h).unwrap();
            let x = chart.point(0, &u);
            let jet = chart.embedding.jet(&u).unwrap();
            let geom = node_geometry(&jet).unwrap();
            let mut xn = x.clone();
            for e in &geom.frame {
                let d = dot(&x, e);
                for (a, b) in xn.iter_mut().zip(e) {
                    *a -= d * b;
                }
            }
            hv.iter().zip(&xn).map(|(a, b)| (a + 0.5 * b).powi(2)).sum::<f64>().sqrt()
        };
        let coarse = res(4e-2);
        let fine = res(2e-2);
        assert!(coarse / fine > 3.5, "order ratio {}", coarse / fine);
    }

    #[test]
    fn tangent_normal_split() {
        let s = sample("veronese", &[2.0], &[16, 32]);
        for i in 0..s.len() {
            let x = s.position(i);
            let xn = s.normal_part(i, x);
            let n2: f64 = xn.iter().map(|v| v * v).sum();
            let t2: f64 = x.iter().zip(&xn).map(|(a, b)| (a - b).powi(2)).sum();
            let x2: f64 = x.iter().map(|v| v * v).sum();
            assert!((n2 + t2 - x2).abs() < 1e-10);
        }
    }

    #[test]
    fn product_area_and_shape() {
        let circle = catalog_make("sphere", &[1.0, 1.0]).unwrap();
        let p = product_with_plane(&circle, 1, 20.0).unwrap();
        let s = build_samples(&p, &[32, 16, 16], DerivativeMode::Analytic).unwrap();
        assert_eq!((s.intrinsic_dim, s.ambient_dim), (3, 4));
        assert!((s.total_area() - 2.0 * PI * 1600.0).abs() < 1e-6 * 2.0 * PI * 1600.0);
    }

    #[test]
    fn resolution_errors() {
        let chart = catalog_make("sphere", &[2.0, 1.0]).unwrap();
        assert!(build_samples(&chart, &[3, 16], DerivativeMode::Analytic).is_err());
        assert!(build_samples(&chart, &[16], DerivativeMode::Analytic).is_err());
    }

    #[test]
    fn degenerate_metric_named() {
        // the pole θ = 0 is a node of no Gauss rule, but a cone point on a bounded axis is
        let mut chart = catalog_make("sphere", &[2.0, 1.0]).unwrap();
        chart.axes[0] = crate::manifold::chart::Axis::bounded(0.0, 0.0);
        match build_samples(&chart, &[4, 8], DerivativeMode::Analytic) {
            Err(Error::DegenerateMetric { node, .. }) => assert_eq!(node, 0),
            other => panic!("expected degenerate metric, got {other:?}"),
        }
    }

    #[test]
    fn polyline_circle() {
        let p = 512;
        let pts: Vec<Vec<f64>> = (0..p)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / p as f64;
                vec![2f64.sqrt() * a.cos(), 2f64.sqrt() * a.sin()]
            })
            .collect();
        let s = SampledManifold::from_closed_polyline(&pts).unwrap();
        assert!((s.total_area() - 2.0 * PI * 2f64.sqrt()).abs() < 1e-4);
        assert!(shrinker_residual(&s).unwrap() < 1e-4);
    }
}
