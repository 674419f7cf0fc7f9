//! Closed-form reference values for the unit ball.
//!
//! For `Ω = 𝔹ₙ` the limiting transmission problem is solved by the ansatz
//! `ũ⁺ = A xⱼ`, `ũ⁻ = B xⱼ/|x|ⁿ`. On the unit sphere `∂_ν(xⱼ) = νⱼ` and
//! `∂_ν(xⱼ/|x|ⁿ) = (1−n)νⱼ`, so the two interface conditions become
//!
//! ```text
//! λ⁻(1−n)B = λ⁺A + (λ⁺ − λ⁻)
//! λ⁺A      = r★(B − A) − λ⁺
//! ```
//!
//! Both `xⱼ` and `xⱼ/|x|ⁿ` have zero mean on the sphere, so the
//! normalizations hold automatically.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Surface measure `sₙ = n|𝔹ₙ|` of the unit sphere.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// `Λ[0,0] = −λ⁻ sₙ/(n−1)` for the ball.
pub fn ball_limit_lambda(n: usize, lambda_minus: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Parameter(format!("dimension must be at least 2, got {n}")));
    }
    if !(lambda_minus > 0.0) {
        return Err(Error::Parameter("λ⁻ must be positive".into()));
    }
    Ok(-lambda_minus * unit_sphere_area(n) / (n - 1) as f64)
}

/// `ṽⱼ⁻(x) = xⱼ / ((n−1)|x|ⁿ)`, the exterior Neumann solution for the ball.
/// `j` is zero-based.
pub fn exterior_neumann_ball_field(x: &[f64], j: usize) -> Result<f64> {
    let n = x.len();
    if n < 2 || j >= n {
        return Err(Error::Parameter(format!("need n ≥ 2 and j < n, got n={n}, j={j}")));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r < 1.0 {
        return Err(Error::Domain(format!("point at radius {r} is inside the unit ball")));
    }
    Ok(x[j] / ((n - 1) as f64 * r.powi(n as i32)))
}

/// Ansatz coefficients of the limiting problem on the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiskLimitCoefficients {
    /// Interior coefficient of `xⱼ`.
    pub a: f64,
    /// Exterior coefficient of `xⱼ/|x|ⁿ`.
    pub b: f64,
    /// Diagonal entry of `Λ[0, r★]`.
    pub lambda_scalar: f64,
}

impl DiskLimitCoefficients {
    /// Residuals of the two interface conditions.
    pub fn residuals(&self, lambda_plus: f64, lambda_minus: f64, r_star: f64, n: usize) -> [f64; 2] {
        let n = n as f64;
        [
            lambda_minus * (1.0 - n) * self.b - lambda_plus * self.a - (lambda_plus - lambda_minus),
            lambda_plus * self.a - r_star * (self.b - self.a) + lambda_plus,
        ]
    }
}

pub fn disk_limit_lambda_general(
    lambda_plus: f64,
    lambda_minus: f64,
    r_star: f64,
    n: usize,
) -> Result<DiskLimitCoefficients> {
    if n < 2 {
        return Err(Error::Parameter(format!("dimension must be at least 2, got {n}")));
    }
    if !(lambda_plus > 0.0 && lambda_minus > 0.0) {
        return Err(Error::Parameter("conductivities must be positive".into()));
    }
    if !(r_star >= 0.0 && r_star.is_finite()) {
        return Err(Error::Parameter(format!("r★ must be finite and non-negative, got {r_star}")));
    }
    let nf = n as f64;
    // [ λ⁺          λ⁻(n−1) ] [A]   [ λ⁻ − λ⁺ ]
    // [ λ⁺ + r★     −r★     ] [B] = [ −λ⁺     ]
    let (m11, m12, m21, m22) = (lambda_plus, lambda_minus * (nf - 1.0), lambda_plus + r_star, -r_star);
    let (f1, f2) = (lambda_minus - lambda_plus, -lambda_plus);
    let det = m11 * m22 - m12 * m21;
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Solver("degenerate ball interface system".into()));
    }
    let a = (f1 * m22 - m12 * f2) / det;
    let b = (m11 * f2 - f1 * m21) / det;
    let lambda_scalar = (lambda_plus * a - lambda_minus * b + lambda_plus - lambda_minus) * unit_ball_volume(n);
    Ok(DiskLimitCoefficients { a, b, lambda_scalar })
}
