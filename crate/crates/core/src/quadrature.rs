//! One-dimensional rules and their tensor products.

use std::f64::consts::PI;

use crate::error::{ensure, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the three-term recurrence, seeded with the
/// Tricomi asymptotic guess. Accurate to a few ulp for `n` up to several
/// thousand.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let theta = PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A one-dimensional rule on an interval.
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Gauss-Legendre mapped onto `[lo, hi]`.
    pub fn gauss(lo: f64, hi: f64, n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        Self {
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|w| half * w).collect(),
        }
    }

    /// Equal-weight rule for a periodic interval; the right endpoint is identified with the left.
    pub fn periodic(lo: f64, hi: f64, n: usize) -> Self {
        let step = (hi - lo) / n as f64;
        Self {
            nodes: (0..n).map(|i| lo + step * i as f64).collect(),
            weights: vec![step; n],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Tensor-product nodes in parameter space, stored row-major with the last axis fastest.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn tensor(rules: &[Rule1d]) -> Result<Self> {
        ensure!(!rules.is_empty(), "tensor grid needs at least one axis");
        let dim = rules.len();
        let count: usize = rules.iter().map(Rule1d::len).product();
        let mut nodes = Vec::with_capacity(count * dim);
        let mut weights = Vec::with_capacity(count);
        let mut idx = vec![0usize; dim];
        for _ in 0..count {
            let mut w = 1.0;
            for (axis, rule) in rules.iter().enumerate() {
                nodes.push(rule.nodes[idx[axis]]);
                w *= rule.weights[idx[axis]];
            }
            weights.push(w);
            for axis in (0..dim).rev() {
                idx[axis] += 1;
                if idx[axis] < rules[axis].len() {
                    break;
                }
                idx[axis] = 0;
            }
        }
        Ok(Self { dim, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        let rule = Rule1d::gauss(-1.0, 2.0, 6);
        // degree 11 is the exactness limit for six nodes
        let exact = (2f64.powi(12) - 1.0) / 12.0;
        let approx: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(11)).sum();
        assert!((approx - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn gauss_weights_sum_for_large_n() {
        for n in [4, 17, 256, 2000] {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-12, "n={n} sum={s}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn periodic_rule_is_spectral_on_trig() {
        let rule = Rule1d::periodic(0.0, 2.0 * PI, 16);
        let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.cos().powi(6)).sum();
        assert!((s - 2.0 * PI * 5.0 / 16.0).abs() < 1e-13);
    }

    #[test]
    fn tensor_weights_sum_to_volume() {
        let g = QuadratureGrid::tensor(&[Rule1d::gauss(0.0, PI, 8), Rule1d::periodic(0.0, 2.0 * PI, 12)]).unwrap();
        assert_eq!(g.len(), 96);
        assert!((g.volume() - 2.0 * PI * PI).abs() < 1e-10 * 2.0 * PI * PI);
    }
}
