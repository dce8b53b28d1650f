use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Position and derivatives of an embedding at one parameter point.
///
/// `first[i]` is `∂F/∂u_i`; `second[i * n + j]` is `∂²F/∂u_i∂u_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub position: Vec<f64>,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

/// A smooth map from a parameter box in `ℝ^n` into `ℝ^N`.
pub trait Embedding: Send + Sync + fmt::Debug {
    fn intrinsic_dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn position(&self, u: &[f64]) -> Vec<f64>;

    /// Analytic jet, when the embedding knows its derivatives.
    fn jet(&self, _u: &[f64]) -> Option<Jet> {
        None
    }
}

/// Central-difference jet with per-axis steps; second order in `h`.
pub fn fd_jet(embedding: &dyn Embedding, u: &[f64], h: &[f64]) -> Jet {
    let n = embedding.intrinsic_dim();
    let center = embedding.position(u);
    let eval = |shifts: &[(usize, f64)]| {
        let mut v = u.to_vec();
        for &(axis, d) in shifts {
            v[axis] += d;
        }
        embedding.position(&v)
    };
    let mut first = Vec::with_capacity(n);
    for i in 0..n {
        let p = eval(&[(i, h[i])]);
        let m = eval(&[(i, -h[i])]);
        first.push(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h[i])).collect());
    }
    let mut second = vec![Vec::new(); n * n];
    for i in 0..n {
        for j in i..n {
            let d: Vec<f64> = if i == j {
                let p = eval(&[(i, h[i])]);
                let m = eval(&[(i, -h[i])]);
                (0..center.len()).map(|k| (p[k] - 2.0 * center[k] + m[k]) / (h[i] * h[i])).collect()
            } else {
                let pp = eval(&[(i, h[i]), (j, h[j])]);
                let pm = eval(&[(i, h[i]), (j, -h[j])]);
                let mp = eval(&[(i, -h[i]), (j, h[j])]);
                let mm = eval(&[(i, -h[i]), (j, -h[j])]);
                (0..center.len())
                    .map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h[i] * h[j]))
                    .collect()
            };
            second[i * n + j] = d.clone();
            second[j * n + i] = d;
        }
    }
    Jet { position: center, first, second }
}

/// One parameter axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn bounded(lo: f64, hi: f64) -> Self {
        Self { lo, hi, periodic: false }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self { lo, hi, periodic: true }
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `x ↦ A x + b` on the ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub linear: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        Self { linear: DMatrix::identity(dim, dim), translation: DVector::zeros(dim) }
    }

    /// `x ↦ scale · R x + b`.
    pub fn similarity(rotation: DMatrix<f64>, scale: f64, translation: DVector<f64>) -> Result<Self> {
        ensure!(scale > 0.0, "scale must be positive, got {scale}");
        ensure!(rotation.is_square(), "rotation must be square");
        ensure!(rotation.nrows() == translation.len(), "rotation and translation dimensions differ");
        let dim = rotation.nrows();
        let orth = (rotation.transpose() * &rotation - DMatrix::identity(dim, dim)).amax();
        ensure!(orth < 1e-10, "rotation is not orthogonal (defect {orth:e})");
        Ok(Self { linear: rotation * scale, translation })
    }

    /// Rotation by `angle` in the `(i, j)` coordinate plane of `ℝ^dim`.
    pub fn plane_rotation(dim: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut r = DMatrix::identity(dim, dim);
        let (s, c) = angle.sin_cos();
        r[(i, i)] = c;
        r[(j, j)] = c;
        r[(i, j)] = -s;
        r[(j, i)] = s;
        Self { linear: r, translation: DVector::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.linear * DVector::from_column_slice(x) + &self.translation;
        v.iter().copied().collect()
    }

    pub fn apply_linear(&self, x: &[f64]) -> Vec<f64> {
        (&self.linear * DVector::from_column_slice(x)).iter().copied().collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            linear: &self.linear * &inner.linear,
            translation: &self.linear * &inner.translation + &self.translation,
        }
    }

    /// Extends the map by the identity on `extra` trailing coordinates.
    pub fn lift(&self, extra: usize) -> AffineMap {
        let n = self.dim();
        let mut linear = DMatrix::identity(n + extra, n + extra);
        linear.view_mut((0, 0), (n, n)).copy_from(&self.linear);
        let mut translation = DVector::zeros(n + extra);
        translation.rows_mut(0, n).copy_from(&self.translation);
        AffineMap { linear, translation }
    }

    pub fn is_identity(&self) -> bool {
        let n = self.dim();
        (&self.linear - DMatrix::identity(n, n)).amax() == 0.0 && self.translation.amax() == 0.0
    }

    pub(crate) fn apply_jet(&self, jet: &Jet) -> Jet {
        if self.is_identity() {
            return jet.clone();
        }
        Jet {
            position: self.apply(&jet.position),
            first: jet.first.iter().map(|v| self.apply_linear(v)).collect(),
            second: jet.second.iter().map(|v| self.apply_linear(v)).collect(),
        }
    }
}

/// A parametrized piece of an `n`-dimensional submanifold of `ℝ^N`.
///
/// The sampled set is the union of `sheet(embed(domain))` over all sheets;
/// integrals are scaled by `multiplicity` (1/2 for a double cover).
#[derive(Clone)]
pub struct ChartSpec {
    pub name: String,
    pub params: Vec<f64>,
    pub embedding: Arc<dyn Embedding>,
    pub axes: Vec<Axis>,
    pub multiplicity: f64,
    pub sheets: Vec<AffineMap>,
    pub truncation_note: Option<String>,
}

impl fmt::Debug for ChartSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartSpec")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("n", &self.intrinsic_dim())
            .field("N", &self.ambient_dim())
            .field("axes", &self.axes)
            .field("multiplicity", &self.multiplicity)
            .field("sheets", &self.sheets.len())
            .field("truncation_note", &self.truncation_note)
            .finish()
    }
}

impl ChartSpec {
    pub fn new(name: &str, params: Vec<f64>, embedding: Arc<dyn Embedding>, axes: Vec<Axis>) -> Self {
        let dim = embedding.ambient_dim();
        Self {
            name: name.to_string(),
            params,
            embedding,
            axes,
            multiplicity: 1.0,
            sheets: vec![AffineMap::identity(dim)],
            truncation_note: None,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.embedding.intrinsic_dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.embedding.ambient_dim()
    }

    /// Image of the chart under an ambient affine map.
    pub fn transformed(&self, map: &AffineMap) -> Result<ChartSpec> {
        ensure!(
            map.dim() == self.ambient_dim(),
            "map acts on R^{} but chart lives in R^{}",
            map.dim(),
            self.ambient_dim()
        );
        let mut out = self.clone();
        out.sheets = self.sheets.iter().map(|s| map.compose(s)).collect();
        Ok(out)
    }

    /// Position of parameter `u` on sheet `sheet`.
    pub fn point(&self, sheet: usize, u: &[f64]) -> Vec<f64> {
        self.sheets[sheet].apply(&self.embedding.position(u))
    }

    /// Steps used for finite-difference derivatives: span × 1e-4 per axis.
    pub fn fd_steps(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.span() * 1e-4).collect()
    }

    pub fn manifest(&self, resolution: &[usize]) -> ChartManifest {
        ChartManifest {
            name: self.name.clone(),
            params: self.params.clone(),
            resolution: resolution.to_vec(),
            truncation: self.truncation_note.clone(),
        }
    }
}

/// Serializable description of a catalog chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartManifest {
    pub name: String,
    pub params: Vec<f64>,
    pub resolution: Vec<usize>,
    pub truncation: Option<String>,
}
