//! Named geometries: round spheres, shrinking cylinders, Clifford tori, the
//! Veronese surface, loxodromes, ellipses and plane patches.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use super::chart::{AffineMap, Axis, ChartManifest, ChartSpec, Embedding, Jet};
use crate::error::{ensure, Error, Result};

/// Default half-length for truncated cylinders; the Gaussian tail at `t ≤ 20` is below 1e-8.
pub const DEFAULT_CYLINDER_HALF_LENGTH: f64 = 40.0;
/// Default log-radius cutoff for loxodromes.
pub const DEFAULT_LOXODROME_RANGE: f64 = 12.0;

/// Names accepted by [`catalog_make`].
pub const CATALOG_NAMES: &[&str] =
    &["plane_patch", "sphere", "cylinder", "clifford_torus", "veronese", "loxodrome", "ellipse"];

fn zeros(n: usize, dim: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; dim]; n]
}

/// Flat `ℝ^n ⊂ ℝ^N` on a sinh-graded parameter: `x_i = sinh(u_i)`.
#[derive(Debug, Clone)]
pub struct PlanePatch {
    pub n: usize,
    pub ambient: usize,
}

impl Embedding for PlanePatch {
    fn intrinsic_dim(&self) -> usize {
        self.n
    }
    fn ambient_dim(&self) -> usize {
        self.ambient
    }
    fn position(&self, u: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.ambient];
        for i in 0..self.n {
            x[i] = u[i].sinh();
        }
        x
    }
    fn jet(&self, u: &[f64]) -> Option<Jet> {
        let n = self.n;
        let mut first = zeros(n, self.ambient);
        let mut second = zeros(n * n, self.ambient);
        for i in 0..n {
            first[i][i] = u[i].cosh();
            second[i * n + i][i] = u[i].sinh();
        }
        Some(Jet { position: self.position(u), first, second })
    }
}

/// Round circle or 2-sphere of radius `radius` centered at the origin.
#[derive(Debug, Clone)]
pub struct RoundSphere {
    pub n: usize,
    pub radius: f64,
}

impl Embedding for RoundSphere {
    fn intrinsic_dim(&self) -> usize {
        self.n
    }
    fn ambient_dim(&self) -> usize {
        self.n + 1
    }
    fn position(&self, u: &[f64]) -> Vec<f64> {
        let r = self.radius;
        match self.n {
            1 => vec![r * u[0].cos(), r * u[0].sin()],
            _ => {
                let (st, ct) = u[0].sin_cos();
                let (sp, cp) = u[1].sin_cos();
                vec![r * st * cp, r * st * sp, r * ct]
            }
        }
    }
    fn jet(&self, u: &[f64]) -> Option<Jet> {
        let r = self.radius;
        Some(match self.n {
            1 => {
                let (s, c) = u[0].sin_cos();
                Jet {
                    position: vec![r * c, r * s],
                    first: vec![vec![-r * s, r * c]],
                    second: vec![vec![-r * c, -r * s]],
                }
            }
            _ => {
                let (st, ct) = u[0].sin_cos();
                let (sp, cp) = u[1].sin_cos();
                let tp = vec![-r * ct * sp, r * ct * cp, 0.0];
                Jet {
                    position: vec![r * st * cp, r * st * sp, r * ct],
                    first: vec![vec![r * ct * cp, r * ct * sp, -r * st], vec![-r * st * sp, r * st * cp, 0.0]],
                    second: vec![
                        vec![-r * st * cp, -r * st * sp, -r * ct],
                        tp.clone(),
                        tp,
                        vec![-r * st * cp, -r * st * sp, 0.0],
                    ],
                }
            }
        })
    }
}

/// `S¹(R) × [-L, L] ⊂ ℝ³`.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub radius: f64,
}

impl Embedding for Cylinder {
    fn intrinsic_dim(&self) -> usize {
        2
    }
    fn ambient_dim(&self) -> usize {
        3
    }
    fn position(&self, u: &[f64]) -> Vec<f64> {
        let (s, c) = u[0].sin_cos();
        vec![self.radius * c, self.radius * s, u[1]]
    }
    fn jet(&self, u: &[f64]) -> Option<Jet> {
        let r = self.radius;
        let (s, c) = u[0].sin_cos();
        Some(Jet {
            position: self.position(u),
            first: vec![vec![-r * s, r * c, 0.0], vec![0.0, 0.0, 1.0]],
            second: vec![vec![-r * c, -r * s, 0.0], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]],
        })
    }
}

/// `S¹(r) × S¹(r) ⊂ ℝ⁴`, lying on the 3-sphere of radius `r√2`.
#[derive(Debug, Clone)]
pub struct CliffordTorus {
    pub circle_radius: f64,
}

impl Embedding for CliffordTorus {
    fn intrinsic_dim(&self) -> usize {
        2
    }
    fn ambient_dim(&self) -> usize {
        4
    }
    fn position(&self, u: &[f64]) -> Vec<f64> {
        let r = self.circle_radius;
        let (sa, ca) = u[0].sin_cos();
        let (sb, cb) = u[1].sin_cos();
        vec![r * ca, r * sa, r * cb, r * sb]
    }
    fn jet(&self, u: &[f64]) -> Option<Jet> {
        let r = self.circle_radius;
        let (sa, ca) = u[0].sin_cos();
        let (sb, cb) = u[1].sin_cos();
        Some(Jet {
            position: self.position(u),
            first: vec![vec![-r * sa, r * ca, 0.0, 0.0], vec![0.0, 0.0, -r * sb, r * cb]],
            second: vec![
                vec![-r * ca, -r * sa, 0.0, 0.0],
                vec![0.0; 4],
                vec![0.0; 4],
                vec![0.0, 0.0, -r * cb, -r * sb],
            ],
        })
    }
}

/// Veronese map `S² → S⁴`, scaled by `scale`.
///
/// `Φ(x,y,z) = (√3xy, √3xz, √3yz, (√3/2)(x²−y²), (x²+y²−2z²)/2)`; each
/// component is `½ pᵀA_k p` for the symmetric matrices below.
#[derive(Debug, Clone)]
pub struct Veronese {
    pub scale: f64,
}

impl Veronese {
    fn forms() -> [[[f64; 3]; 3]; 5] {
        let r3 = 3f64.sqrt();
        [
            [[0.0, r3, 0.0], [r3, 0.0, 0.0], [0.0, 0.0, 0.0]],
            [[0.0, 0.0, r3], [0.0, 0.0, 0.0], [r3, 0.0, 0.0]],
            [[0.0, 0.0, 0.0], [0.0, 0.0, r3], [0.0, r3, 0.0]],
            [[r3, 0.0, 0.0], [0.0, -r3, 0.0], [0.0, 0.0, 0.0]],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -2.0]],
        ]
    }

    fn bilinear(a: &[[f64; 3]; 3], v: &[f64], w: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += v[i] * a[i][j] * w[j];
            }
        }
        s
    }
}

impl Embedding for Veronese {
    fn intrinsic_dim(&self) -> usize {
        2
    }
    fn ambient_dim(&self) -> usize {
        5
    }
    fn position(&self, u: &[f64]) -> Vec<f64> {
        let p = RoundSphere { n: 2, radius: 1.0 }.position(u);
        Self::forms().iter().map(|a| 0.5 * self.scale * Self::bilinear(a, &p, &p)).collect()
    }
    fn jet(&self, u: &[f64]) -> Option<Jet> {
        let s = RoundSphere { n: 2, radius: 1.0 }.jet(u)?;
        let forms = Self::forms();
        let c = self.scale;
        let position = forms.iter().map(|a| 0.5 * c * Self::bilinear(a, &s.position, &s.position)).collect();
        let first = (0..2)
            .map(|i| forms.iter().map(|a| c * Self::bilinear(a, &s.position, &s.first[i])).collect())
            .collect();
        let mut second = Vec::with_capacity(4);
        for i in 0..2 {
            for j in 0..2 {
                second.push(
                    forms
                        .iter()
                        .map(|a| {
                            c * (Self::bilinear(a, &s.first[i], &s.first[j])
                                + Self::bilinear(a, &s.position, &s.second[i * 2 + j]))
                        })
                        .collect(),
                );
            }
        }
        Some(Jet { position, first, second })
    }
}

/// Logarithmic spiral `t ↦ e^t (cos αt, sin αt)`.
#[derive(Debug, Clone)]
pub struct Spiral {
    pub alpha: f64,
}

impl Embedding for Spiral {
    fn intrinsic_dim(&self) -> usize {
        1
    }
    fn ambient_dim(&self) -> usize {
        2
    }
    fn position(&self, u: &[f64]) -> Vec<f64> {
        let e = u[0].exp();
        let (s, c) = (self.alpha * u[0]).sin_cos();
        vec![e * c, e * s]
    }
    fn jet(&self, u: &[f64]) -> Option<Jet> {
        let a = self.alpha;
        let e = u[0].exp();
        let (s, c) = (a * u[0]).sin_cos();
        Some(Jet {
            position: vec![e * c, e * s],
            first: vec![vec![e * (c - a * s), e * (s + a * c)]],
            second: vec![vec![e * ((1.0 - a * a) * c - 2.0 * a * s), e * ((1.0 - a * a) * s + 2.0 * a * c)]],
        })
    }
}

/// Ellipse with semi-axes `a` (along x) and `b`.
#[derive(Debug, Clone)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
}

impl Embedding for Ellipse {
    fn intrinsic_dim(&self) -> usize {
        1
    }
    fn ambient_dim(&self) -> usize {
        2
    }
    fn position(&self, u: &[f64]) -> Vec<f64> {
        let (s, c) = u[0].sin_cos();
        vec![self.a * c, self.b * s]
    }
    fn jet(&self, u: &[f64]) -> Option<Jet> {
        let (s, c) = u[0].sin_cos();
        Some(Jet {
            position: vec![self.a * c, self.b * s],
            first: vec![vec![-self.a * s, self.b * c]],
            second: vec![vec![-self.a * c, -self.b * s]],
        })
    }
}

/// `Σ × ℝ^{2m}` with the flat factors on sinh-graded parameters.
#[derive(Debug, Clone)]
pub struct PlaneProduct {
    pub inner: Arc<dyn Embedding>,
    pub extra: usize,
}

impl Embedding for PlaneProduct {
    fn intrinsic_dim(&self) -> usize {
        self.inner.intrinsic_dim() + self.extra
    }
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim() + self.extra
    }
    fn position(&self, u: &[f64]) -> Vec<f64> {
        let n = self.inner.intrinsic_dim();
        let mut x = self.inner.position(&u[..n]);
        x.extend(u[n..].iter().map(|v| v.sinh()));
        x
    }
    fn jet(&self, u: &[f64]) -> Option<Jet> {
        let n0 = self.inner.intrinsic_dim();
        let big0 = self.inner.ambient_dim();
        let inner = self.inner.jet(&u[..n0])?;
        let n = self.intrinsic_dim();
        let big = self.ambient_dim();
        let pad = |v: &[f64]| {
            let mut out = v.to_vec();
            out.resize(big, 0.0);
            out
        };
        let mut first: Vec<Vec<f64>> = inner.first.iter().map(|v| pad(v)).collect();
        for k in 0..self.extra {
            let mut v = vec![0.0; big];
            v[big0 + k] = u[n0 + k].cosh();
            first.push(v);
        }
        let mut second = vec![vec![0.0; big]; n * n];
        for i in 0..n0 {
            for j in 0..n0 {
                second[i * n + j] = pad(&inner.second[i * n0 + j]);
            }
        }
        for k in 0..self.extra {
            second[(n0 + k) * n + n0 + k][big0 + k] = u[n0 + k].sinh();
        }
        Some(Jet { position: self.position(u), first, second })
    }
}

fn param(params: &[f64], i: usize, what: &str) -> Result<f64> {
    params
        .get(i)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("missing parameter {what}")))
}

fn positive(v: f64, what: &str) -> Result<f64> {
    ensure!(v > 0.0 && v.is_finite(), "{what} must be positive, got {v}");
    Ok(v)
}

fn integer(v: f64, what: &str) -> Result<usize> {
    ensure!(v >= 0.0 && v.fract() == 0.0, "{what} must be a non-negative integer, got {v}");
    Ok(v as usize)
}

/// Build a named catalog chart.
///
/// | name | params |
/// |------|--------|
/// | `plane_patch` | `n, half_width[, N]` |
/// | `sphere` | `n (1 or 2), R` |
/// | `cylinder` | `R[, half_length]` |
/// | `clifford_torus` | `scale` (radius of the containing 3-sphere) |
/// | `veronese` | `scale` (radius of the containing 4-sphere) |
/// | `loxodrome` | `α[, T₀]` |
/// | `ellipse` | `a, b` |
pub fn catalog_make(name: &str, params: &[f64]) -> Result<ChartSpec> {
    let two_pi = 2.0 * PI;
    match name {
        "plane_patch" => {
            let n = integer(param(params, 0, "n")?, "n")?;
            ensure!((1..=3).contains(&n), "plane_patch dimension must be 1..=3, got {n}");
            let half = positive(param(params, 1, "half_width")?, "half_width")?;
            let ambient = match params.get(2) {
                Some(&v) => integer(v, "ambient dimension")?,
                None => n,
            };
            ensure!(ambient >= n, "ambient dimension {ambient} below n = {n}");
            let reach = half.asinh();
            let mut chart = ChartSpec::new(
                name,
                params.to_vec(),
                Arc::new(PlanePatch { n, ambient }),
                vec![Axis::bounded(-reach, reach); n],
            );
            chart.truncation_note = Some(format!("plane truncated to the cube of half-width {half}"));
            Ok(chart)
        }
        "sphere" => {
            let n = integer(param(params, 0, "n")?, "n")?;
            ensure!(n == 1 || n == 2, "sphere dimension must be 1 or 2, got {n}");
            let radius = positive(param(params, 1, "R")?, "radius")?;
            let axes = if n == 1 {
                vec![Axis::periodic(0.0, two_pi)]
            } else {
                vec![Axis::bounded(0.0, PI), Axis::periodic(0.0, two_pi)]
            };
            Ok(ChartSpec::new(name, params.to_vec(), Arc::new(RoundSphere { n, radius }), axes))
        }
        "cylinder" => {
            let radius = positive(param(params, 0, "R")?, "radius")?;
            let half = positive(params.get(1).copied().unwrap_or(DEFAULT_CYLINDER_HALF_LENGTH), "half_length")?;
            let mut chart = ChartSpec::new(
                name,
                vec![radius, half],
                Arc::new(Cylinder { radius }),
                vec![Axis::periodic(0.0, two_pi), Axis::bounded(-half, half)],
            );
            chart.truncation_note = Some(format!(
                "axis truncated to |z| <= {half}; Gaussian tail at t = 20 below {:.1e}",
                (-half * half / 80.0).exp()
            ));
            Ok(chart)
        }
        "clifford_torus" => {
            let scale = positive(param(params, 0, "scale")?, "scale")?;
            Ok(ChartSpec::new(
                name,
                params.to_vec(),
                Arc::new(CliffordTorus { circle_radius: scale / SQRT_2 }),
                vec![Axis::periodic(0.0, two_pi), Axis::periodic(0.0, two_pi)],
            ))
        }
        "veronese" => {
            let scale = positive(param(params, 0, "scale")?, "scale")?;
            let mut chart = ChartSpec::new(
                name,
                params.to_vec(),
                Arc::new(Veronese { scale }),
                vec![Axis::bounded(0.0, PI), Axis::periodic(0.0, two_pi)],
            );
            chart.multiplicity = 0.5;
            Ok(chart)
        }
        "loxodrome" => {
            let alpha = param(params, 0, "alpha")?;
            ensure!(alpha >= 0.0 && alpha.is_finite(), "loxodrome needs alpha >= 0, got {alpha}");
            let reach = positive(params.get(1).copied().unwrap_or(DEFAULT_LOXODROME_RANGE), "t range")?;
            let mut chart = ChartSpec::new(
                name,
                vec![alpha, reach],
                Arc::new(Spiral { alpha }),
                vec![Axis::bounded(-reach, reach)],
            );
            chart.sheets.push(AffineMap::plane_rotation(2, 0, 1, PI));
            chart.truncation_note = Some(format!(
                "both branches cut to radii in [e^-{reach}, e^{reach}]"
            ));
            Ok(chart)
        }
        "ellipse" => {
            let a = positive(param(params, 0, "a")?, "a")?;
            let b = positive(param(params, 1, "b")?, "b")?;
            Ok(ChartSpec::new(name, params.to_vec(), Arc::new(Ellipse { a, b }), vec![Axis::periodic(0.0, two_pi)]))
        }
        "lattice_torus" => Err(Error::InvalidParameter(
            "lattice tori are not available as embedded surfaces; use lattice_bound".into(),
        )),
        other => Err(Error::UnknownCatalog(other.to_string())),
    }
}

/// Parse `name:p1,p2,...` into a chart.
pub fn parse_catalog(spec: &str) -> Result<ChartSpec> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r.trim()),
        None => (spec.trim(), ""),
    };
    let params = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse `{p}` in `{spec}`")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    catalog_make(name, &params)
}

/// Rebuild the chart described by a manifest.
pub fn from_manifest(manifest: &ChartManifest) -> Result<ChartSpec> {
    catalog_make(&manifest.name, &manifest.params)
}

/// Per-axis node counts that resolve the catalog entries at the default optimizer scales.
pub fn default_resolution(chart: &ChartSpec) -> Vec<usize> {
    let base = chart.name.as_str();
    match (base, chart.intrinsic_dim()) {
        ("plane_patch", 1) => vec![800],
        ("plane_patch", _) => vec![160; chart.intrinsic_dim()],
        ("sphere", 1) | ("ellipse", _) => vec![256],
        ("sphere", _) | ("veronese", _) => vec![64, 128],
        ("cylinder", _) => vec![96, 240],
        ("clifford_torus", _) => vec![96, 96],
        ("loxodrome", _) => vec![1600],
        ("product", _) => {
            let mut r = vec![64; chart.intrinsic_dim()];
            r[0] = 128;
            r
        }
        _ => vec![64; chart.intrinsic_dim()],
    }
}

/// `Σ × ℝ^{2m}` truncated to `|z_k| ≤ half_width`.
pub fn product_with_plane(chart: &ChartSpec, m: usize, half_width: f64) -> Result<ChartSpec> {
    ensure!(m >= 1, "product_with_plane needs m >= 1, got {m}");
    ensure!(m <= 2, "product_with_plane supports m <= 2 (quadrature cost), got {m}");
    positive(half_width, "half_width")?;
    let extra = 2 * m;
    let reach = half_width.asinh();
    let mut axes = chart.axes.clone();
    axes.extend(std::iter::repeat_n(Axis::bounded(-reach, reach), extra));
    let mut params = chart.params.clone();
    params.push(m as f64);
    params.push(half_width);
    Ok(ChartSpec {
        name: "product".to_string(),
        params,
        embedding: Arc::new(PlaneProduct { inner: chart.embedding.clone(), extra }),
        axes,
        multiplicity: chart.multiplicity,
        sheets: chart.sheets.iter().map(|s| s.lift(extra)).collect(),
        truncation_note: Some(format!(
            "{} x R^{extra}, flat factors truncated to |z| <= {half_width}",
            chart.name
        )),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::chart::fd_jet;

    fn max_jet_gap(chart: &ChartSpec, u: &[f64]) -> f64 {
        let analytic = chart.embedding.jet(u).unwrap();
        let h: Vec<f64> = chart.axes.iter().map(|_| 1e-4).collect();
        let fd = fd_jet(chart.embedding.as_ref(), u, &h);
        let mut worst: f64 = 0.0;
        for (a, b) in analytic.first.iter().zip(&fd.first) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        for (a, b) in analytic.second.iter().zip(&fd.second) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    }

    #[test]
    fn analytic_jets_match_finite_differences() {
        let cases: Vec<(ChartSpec, Vec<f64>)> = vec![
            (catalog_make("sphere", &[1.0, 1.3]).unwrap(), vec![0.4]),
            (catalog_make("sphere", &[2.0, 2.0]).unwrap(), vec![1.1, 0.3]),
            (catalog_make("cylinder", &[1.4]).unwrap(), vec![0.2, 0.7]),
            (catalog_make("clifford_torus", &[2.0]).unwrap(), vec![0.9, 2.5]),
            (catalog_make("veronese", &[2.0]).unwrap(), vec![0.8, 1.9]),
            (catalog_make("loxodrome", &[1.5]).unwrap(), vec![0.3]),
            (catalog_make("ellipse", &[2.0, 1.0]).unwrap(), vec![2.2]),
            (catalog_make("plane_patch", &[2.0, 10.0, 3.0]).unwrap(), vec![0.5, -1.0]),
        ];
        for (chart, u) in cases {
            assert!(max_jet_gap(&chart, &u) < 1e-6, "{}", chart.name);
        }
        let prod = product_with_plane(&catalog_make("sphere", &[1.0, 1.0]).unwrap(), 1, 20.0).unwrap();
        assert!(max_jet_gap(&prod, &[0.3, 0.5, -0.2]) < 1e-6);
    }

    #[test]
    fn veronese_lies_on_sphere() {
        let chart = catalog_make("veronese", &[2.0]).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..40 {
            for j in 0..40 {
                let u = [PI * (i as f64 + 0.5) / 40.0, 2.0 * PI * j as f64 / 40.0];
                let x = chart.point(0, &u);
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                worst = worst.max((r - 2.0).abs());
            }
        }
        assert!(worst <= 1e-10, "{worst}");
        assert_eq!(chart.multiplicity, 0.5);
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(catalog_make("torus_knot", &[]), Err(Error::UnknownCatalog(_))));
        assert!(catalog_make("sphere", &[2.0, -1.0]).is_err());
        assert!(catalog_make("sphere", &[3.0, 1.0]).is_err());
        assert!(catalog_make("loxodrome", &[-0.5]).is_err());
        assert!(catalog_make("veronese", &[0.0]).is_err());
        assert!(catalog_make("lattice_torus", &[0.0, 1.0]).is_err());
    }

    #[test]
    fn parse_and_manifest() {
        let chart = parse_catalog("sphere:2, 2").unwrap();
        assert_eq!(chart.params, vec![2.0, 2.0]);
        let manifest = chart.manifest(&[64, 128]);
        let back = from_manifest(&manifest).unwrap();
        assert_eq!(back.name, "sphere");
        assert!(parse_catalog("sphere:2,x").is_err());
        let lox = parse_catalog("loxodrome:1").unwrap();
        assert_eq!(lox.sheets.len(), 2);
        assert!(lox.truncation_note.is_some());
    }

    #[test]
    fn product_rejections() {
        let circle = catalog_make("sphere", &[1.0, 1.0]).unwrap();
        assert!(product_with_plane(&circle, 0, 20.0).is_err());
        assert!(product_with_plane(&circle, 3, 20.0).is_err());
        let p = product_with_plane(&circle, 1, 20.0).unwrap();
        assert_eq!((p.intrinsic_dim(), p.ambient_dim()), (3, 4));
        assert!(p.truncation_note.is_some());
    }
}
