//! Sphere areas and the normalizing constants of the stabilized weights.
//!
//! Small arguments use direct products of order-one ratios so that simple
//! values come out exact (`c_hat(2, 0) == 0.5`); anything larger goes through
//! the log domain with a single exponentiation at the end.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{ensure, Result};

const DIRECT_LIMIT: usize = 64;

/// `ln |S^k|` via the two-step recursion `|S^{k+2}| = 2π/(k+1) |S^k|`.
pub fn ln_sphere_area(k: usize) -> f64 {
    let (mut acc, mut j) = if k.is_multiple_of(2) { (2f64.ln(), 0) } else { ((2.0 * PI).ln(), 1) };
    while j < k {
        acc += (2.0 * PI / (j as f64 + 1.0)).ln();
        j += 2;
    }
    acc
}

/// Area of the unit sphere `S^k ⊂ ℝ^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    if k > 4 * DIRECT_LIMIT {
        return ln_sphere_area(k).exp();
    }
    let (mut acc, mut j) = if k.is_multiple_of(2) { (2.0, 0) } else { (2.0 * PI, 1) };
    while j < k {
        acc *= 2.0 * PI / (j as f64 + 1.0);
        j += 2;
    }
    acc
}

/// Volume of the unit ball in `ℝ^k`, `|S^{k-1}| / k`.
pub fn ball_volume(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    sphere_area(k - 1) / k as f64
}

/// `ln C_{M,m}` from the factorial expression `(4π)^m (M+m-1)! / (M+2m-1)!`.
pub fn ln_c_const(big_m: usize, m: usize) -> f64 {
    let a = (big_m + m) as f64; // Γ(M+m) = (M+m-1)!
    let b = (big_m + 2 * m) as f64;
    m as f64 * (4.0 * PI).ln() + ln_gamma(a) - ln_gamma(b)
}

/// Iterate-identity constant `C_{M,m}`.
pub fn c_const(big_m: usize, m: usize) -> Result<f64> {
    ensure!(big_m >= 1, "C_(M,m) needs M >= 1, got {big_m}");
    if m <= DIRECT_LIMIT {
        // (4π)^m / [(M+m)(M+m+1)...(M+2m-1)]
        let mut acc = 1.0;
        for k in (big_m + m)..(big_m + 2 * m) {
            acc *= 4.0 * PI / k as f64;
        }
        return Ok(acc);
    }
    Ok(ln_c_const(big_m, m).exp())
}

/// `C_{M,m}` through the sphere-area ratio `2^m |S^{M+2m}||S^{M+2m-1}| / (|S^{M+m}||S^{M+m-1}|)`.
///
/// Independent of [`c_const`]; the two are compared in tests.
pub fn c_const_sphere_form(big_m: usize, m: usize) -> Result<f64> {
    ensure!(big_m >= 1, "C_(M,m) needs M >= 1, got {big_m}");
    let ln = m as f64 * 2f64.ln() + ln_sphere_area(big_m + 2 * m) + ln_sphere_area(big_m + 2 * m - 1)
        - ln_sphere_area(big_m + m)
        - ln_sphere_area(big_m + m - 1);
    Ok(ln.exp())
}

/// `ln Ĉ_{n,m}`.
pub fn ln_c_hat(n: usize, m: usize) -> f64 {
    let nm = (n + m) as f64;
    0.5 * n as f64 * (4.0 * PI / nm).ln() - ln_sphere_area(n + 2 * m) + ln_c_const(n, m)
}

/// Normalizing constant `Ĉ_{n,m} = (4π/(n+m))^{n/2} |S^{n+2m}|^{-1} C_{n,m}`.
///
/// Strictly increasing in `m` with limit one.
pub fn c_hat(n: usize, m: usize) -> Result<f64> {
    ensure!(n >= 1, "Ĉ_(n,m) needs n >= 1, got {n}");
    if m <= DIRECT_LIMIT && n <= DIRECT_LIMIT {
        let ratio = 4.0 * PI / (n + m) as f64;
        let pre = if n.is_multiple_of(2) { ratio.powi(n as i32 / 2) } else { ratio.powf(0.5 * n as f64) };
        return Ok(pre / sphere_area(n + 2 * m) * c_const(n, m)?);
    }
    Ok(ln_c_hat(n, m).exp())
}

/// Mass normalizer `α_{n,m,N} = (4π)^{(n-N)/2} Ĉ_{N, n-N+m}` making `α Ŵ^n_{n+m,1}` a unit-mass density on `ℝ^N`.
pub fn alpha_mass(n: usize, m: usize, ambient: usize) -> Result<f64> {
    ensure!(n >= 1 && n <= ambient, "alpha_mass needs 1 <= n <= N (n={n}, N={ambient})");
    ensure!(
        n + m >= ambient,
        "weight not integrable on R^{ambient}: m={m} < N-n={}",
        ambient - n
    );
    let shift = 0.5 * (n as f64 - ambient as f64);
    Ok((4.0 * PI).powf(shift) * c_hat(ambient, n + m - ambient)?)
}

/// Gaussian entropy of the round sphere `S^k`, `(2k/(4πe))^{k/2} |S^k|`.
pub fn sphere_entropy_exact(k: usize) -> Result<f64> {
    ensure!(k >= 1, "sphere entropy needs k >= 1");
    let kf = k as f64;
    Ok((0.5 * kf * (2.0 * kf / (4.0 * PI * std::f64::consts::E)).ln() + ln_sphere_area(k)).exp())
}

/// Lower bound `πy / (x² + y² − x + 1)` for a torus with conformal lattice `ω = x + iy`.
pub fn lattice_bound(x: f64, y: f64) -> Result<f64> {
    ensure!((0.0..=0.5).contains(&x), "lattice bound needs 0 <= x <= 1/2, got {x}");
    ensure!(
        y >= (1.0 - x * x).sqrt() - 1e-12,
        "lattice bound needs y >= sqrt(1 - x^2), got ({x}, {y})"
    );
    Ok(PI * y / (x * x + y * y - x + 1.0))
}
