//! Free-space and square-lattice periodic Green's functions of the
//! two-dimensional Laplacian.
//!
//! Sign convention: `ΔG = δ`, so `G(x) = (1/2π) log|x|`. The periodic kernel
//! solves `ΔG_per = Σ_{z∈ℤ²} δ_z − 1` with zero cell mean, i.e.
//! `G_per(x) = −Σ_{k≠0} e^{2πik·x} / (4π²|k|²)`. It is evaluated with the
//! heat-kernel Ewald split at time `s = 1/(4πη²)`:
//!
//! ```text
//! G_per(x) = −(1/4π) Σ_z E₁(πη²|x−z|²) + 1/(4πη²)
//!            − Σ_{k≠0} e^{−π|k|²/η²} cos(2πk·x) / (4π²|k|²)
//! ```
//!
//! Both lattice sums converge like Gaussians, so the truncation radii follow
//! from a requested tail tolerance.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::special::{ein, exp_int_e1, one_minus_exp_over, EULER_GAMMA};

pub const DEFAULT_EWALD_SPLIT: f64 = 2.5;
pub const DEFAULT_TAIL_TOL: f64 = 1e-13;

/// Value and gradient of a kernel at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenEval {
    pub value: f64,
    pub gradient: Point,
}

/// `(1/2π) log|x|` and `x / (2π|x|²)`.
pub fn free_green(x: Point) -> Result<GreenEval> {
    let r2 = x.norm_squared();
    if r2 == 0.0 || !r2.is_finite() {
        return Err(Error::Domain("free Green's function is singular at the origin".into()));
    }
    Ok(free_green_unchecked(x))
}

#[inline]
pub(crate) fn free_green_unchecked(x: Point) -> GreenEval {
    let r2 = x.norm_squared();
    GreenEval {
        value: r2.ln() / (4.0 * PI),
        gradient: x / (2.0 * PI * r2),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct FourierMode {
    k: [i32; 2],
    /// Weight of the ±k pair: `2 e^{−π|k|²/η²} / (4π²|k|²)`.
    weight: f64,
}

/// Ewald split and truncation controls for [`periodic_green`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicGreenConfig {
    pub ewald_split: f64,
    pub real_cutoff: f64,
    pub fourier_cutoff: f64,
    pub tail_tol: f64,
    #[serde(skip)]
    modes: Vec<FourierMode>,
    #[serde(skip)]
    max_k: i32,
}

impl Default for PeriodicGreenConfig {
    fn default() -> Self {
        Self::new(DEFAULT_EWALD_SPLIT, DEFAULT_TAIL_TOL).expect("default Ewald parameters are valid")
    }
}

impl PeriodicGreenConfig {
    /// Picks the smallest cutoffs whose estimated tails are below `tail_tol`.
    pub fn new(ewald_split: f64, tail_tol: f64) -> Result<Self> {
        check_split(ewald_split, tail_tol)?;
        let real = smallest_radius(|r| real_tail(ewald_split, r), tail_tol);
        let fourier = smallest_radius(|k| fourier_tail(ewald_split, k), tail_tol);
        Ok(Self::build(ewald_split, real, fourier, tail_tol))
    }

    /// Explicit cutoffs; rejected if the estimated tail exceeds `tail_tol`.
    pub fn with_cutoffs(ewald_split: f64, real_cutoff: f64, fourier_cutoff: f64, tail_tol: f64) -> Result<Self> {
        check_split(ewald_split, tail_tol)?;
        let cfg = Self::build(ewald_split, real_cutoff, fourier_cutoff, tail_tol);
        let tail = cfg.estimated_tail();
        if !(tail <= tail_tol) {
            return Err(Error::Config(format!(
                "Ewald cutoffs R={real_cutoff}, K={fourier_cutoff} at η={ewald_split} leave an \
                 estimated tail of {tail:.3e} above the tolerance {tail_tol:.1e}"
            )));
        }
        Ok(cfg)
    }

    /// Explicit cutoffs without the tail check. Only meant for diagnostics
    /// that deliberately probe under-resolved sums.
    pub fn with_cutoffs_unchecked(ewald_split: f64, real_cutoff: f64, fourier_cutoff: f64, tail_tol: f64) -> Self {
        Self::build(ewald_split, real_cutoff, fourier_cutoff, tail_tol)
    }

    fn build(eta: f64, real_cutoff: f64, fourier_cutoff: f64, tail_tol: f64) -> Self {
        let max_k = fourier_cutoff.max(0.0).floor() as i32;
        let k2max = fourier_cutoff * fourier_cutoff;
        let mut modes = Vec::new();
        for k1 in 0..=max_k {
            for k2 in -max_k..=max_k {
                if k1 == 0 && k2 <= 0 {
                    continue;
                }
                let k2n = f64::from(k1 * k1 + k2 * k2);
                if k2n > k2max {
                    continue;
                }
                let weight = 2.0 * (-PI * k2n / (eta * eta)).exp() / (4.0 * PI * PI * k2n);
                modes.push(FourierMode { k: [k1, k2], weight });
            }
        }
        PeriodicGreenConfig {
            ewald_split: eta,
            real_cutoff,
            fourier_cutoff,
            tail_tol,
            modes,
            max_k,
        }
    }

    /// Larger of the real-space and reciprocal tail estimates.
    pub fn estimated_tail(&self) -> f64 {
        real_tail(self.ewald_split, self.real_cutoff).max(fourier_tail(self.ewald_split, self.fourier_cutoff))
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    fn real_exponent(&self) -> f64 {
        PI * self.ewald_split * self.ewald_split
    }
}

fn check_split(eta: f64, tol: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Config(format!("Ewald split η must be positive, got {eta}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Config(format!("tail tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn smallest_radius(tail: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let mut r = FRAC_1_SQRT_2 + 0.05;
    while tail(r) > tol {
        r += 0.05;
    }
    r
}

/// Bound on the neglected real-space terms (value and gradient) beyond
/// distance `r`. Each lattice point owns a unit square, hence the shift by
/// half a diagonal.
fn real_tail(eta: f64, r: f64) -> f64 {
    let a = PI * eta * eta;
    let rs = r - FRAC_1_SQRT_2;
    if rs <= 0.0 {
        return f64::INFINITY;
    }
    let e = (-a * rs * rs).exp();
    (e / (4.0 * a * a * rs * rs)).max(e / (2.0 * a * rs))
}

fn fourier_tail(eta: f64, k: f64) -> f64 {
    let b = PI / (eta * eta);
    let ks = k - FRAC_1_SQRT_2;
    if ks <= 0.0 {
        return f64::INFINITY;
    }
    let e = (-b * ks * ks).exp();
    (e / (4.0 * PI * b * ks * ks)).max(e / (2.0 * b * ks))
}

/// Periodic Green's function `G_per` and its gradient.
pub fn periodic_green(x: Point, cfg: &PeriodicGreenConfig) -> Result<GreenEval> {
    if !(x.x.is_finite() && x.y.is_finite()) {
        return Err(Error::Domain("non-finite evaluation point".into()));
    }
    if x.x.fract() == 0.0 && x.y.fract() == 0.0 {
        return Err(Error::Domain(format!(
            "periodic Green's function is singular on the lattice, got ({}, {})",
            x.x, x.y
        )));
    }
    Ok(ewald(x, cfg, false))
}

/// `G_per(x) − (1/2π) log|x|`, smooth across `x = 0`.
pub fn regularized_periodic_green(x: Point, cfg: &PeriodicGreenConfig) -> GreenEval {
    ewald(x, cfg, true)
}

/// Ewald evaluation. With `regularized`, the free-space logarithm is removed
/// from the origin term analytically.
pub(crate) fn ewald(x: Point, cfg: &PeriodicGreenConfig, regularized: bool) -> GreenEval {
    let mut out = ewald_real(x, cfg, regularized);
    let f = ewald_fourier(x, cfg);
    out.value += f.value;
    out.gradient += f.gradient;
    out
}

/// Real-space lattice sum plus the `1/(4πη²)` background constant.
pub(crate) fn ewald_real(x: Point, cfg: &PeriodicGreenConfig, regularized: bool) -> GreenEval {
    let a = cfg.real_exponent();
    let rc = cfg.real_cutoff;
    let rc2 = rc * rc;
    let mut value = 1.0 / (4.0 * PI * cfg.ewald_split * cfg.ewald_split);
    let mut gradient = Point::zeros();
    let z1 = ((x.x - rc).ceil() as i64)..=((x.x + rc).floor() as i64);
    for i in z1 {
        let dx = x.x - i as f64;
        let rem = rc2 - dx * dx;
        if rem < 0.0 {
            continue;
        }
        let span = rem.sqrt();
        for j in ((x.y - span).ceil() as i64)..=((x.y + span).floor() as i64) {
            let d = Point::new(dx, x.y - j as f64);
            let r2 = d.norm_squared();
            if regularized && i == 0 && j == 0 {
                continue;
            }
            let y = a * r2;
            value -= exp_int_e1(y) / (4.0 * PI);
            gradient += d * ((-y).exp() / (2.0 * PI * r2));
        }
    }
    if regularized {
        // −E₁(y)/(4π) − log|x|/(2π) = (γ + ln(πη²) − Ein(y)) / (4π)
        let r2 = x.norm_squared();
        let y = a * r2;
        value += (EULER_GAMMA + a.ln() - ein(y)) / (4.0 * PI);
        gradient -= x * (a * one_minus_exp_over(y) / (2.0 * PI));
    }
    GreenEval { value, gradient }
}

/// Reciprocal-space Gaussian sum.
pub(crate) fn ewald_fourier(x: Point, cfg: &PeriodicGreenConfig) -> GreenEval {
    let m = cfg.max_k as usize;
    let mut c1 = vec![(1.0, 0.0); m + 1];
    let mut c2 = vec![(1.0, 0.0); 2 * m + 1];
    for k in 1..=m {
        let (s, c) = (2.0 * PI * k as f64 * x.x).sin_cos();
        c1[k] = (c, s);
        let (s, c) = (2.0 * PI * k as f64 * x.y).sin_cos();
        c2[m + k] = (c, s);
        c2[m - k] = (c, -s);
    }
    let mut value = 0.0;
    let mut gradient = Point::zeros();
    for mode in &cfg.modes {
        let (ca, sa) = c1[mode.k[0] as usize];
        let (cb, sb) = c2[(mode.k[1] + cfg.max_k) as usize];
        let cos = ca * cb - sa * sb;
        let sin = sa * cb + ca * sb;
        value -= mode.weight * cos;
        let g = mode.weight * 2.0 * PI * sin;
        gradient.x += g * f64::from(mode.k[0]);
        gradient.y += g * f64::from(mode.k[1]);
    }
    GreenEval { value, gradient }
}

/// Precomputed reciprocal-space moments `Σ_j q_j cos(2πk·y_j)`, `Σ_j q_j sin(2πk·y_j)`
/// of a set of weighted sources, so that `Σ_j q_j G_fourier(x − y_j)` costs
/// one pass over the modes per target.
#[derive(Clone, Debug)]
pub(crate) struct FourierMoments<'a> {
    cfg: &'a PeriodicGreenConfig,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl<'a> FourierMoments<'a> {
    pub(crate) fn new(cfg: &'a PeriodicGreenConfig, sources: &[Point], charges: &[f64]) -> Self {
        let mut cos = vec![0.0; cfg.modes.len()];
        let mut sin = vec![0.0; cfg.modes.len()];
        for (y, q) in sources.iter().zip(charges) {
            for (idx, mode) in cfg.modes.iter().enumerate() {
                let phase = 2.0 * PI * (f64::from(mode.k[0]) * y.x + f64::from(mode.k[1]) * y.y);
                let (s, c) = phase.sin_cos();
                cos[idx] += q * c;
                sin[idx] += q * s;
            }
        }
        FourierMoments { cfg, cos, sin }
    }

    pub(crate) fn evaluate(&self, x: Point) -> GreenEval {
        // cos(k·(x−y)) = cos kx cos ky + sin kx sin ky
        let mut value = 0.0;
        let mut gradient = Point::zeros();
        for (idx, mode) in self.cfg.modes.iter().enumerate() {
            let phase = 2.0 * PI * (f64::from(mode.k[0]) * x.x + f64::from(mode.k[1]) * x.y);
            let (s, c) = phase.sin_cos();
            let cos = c * self.cos[idx] + s * self.sin[idx];
            let sin = s * self.cos[idx] - c * self.sin[idx];
            value -= mode.weight * cos;
            let g = mode.weight * 2.0 * PI * sin;
            gradient.x += g * f64::from(mode.k[0]);
            gradient.y += g * f64::from(mode.k[1]);
        }
        GreenEval { value, gradient }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn free_green_values() {
        assert_eq!(free_green(Point::new(1.0, 0.0)).unwrap().value, 0.0);
        let v = free_green(Point::new(E, 0.0)).unwrap().value;
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let g = free_green(Point::new(2.0, 0.0)).unwrap().gradient;
        assert!((g.x - 1.0 / (4.0 * PI)).abs() < 1e-16 && g.y == 0.0);
        assert!(matches!(free_green(Point::zeros()), Err(Error::Domain(_))));
    }

    #[test]
    fn periodic_symmetries() {
        let cfg = PeriodicGreenConfig::default();
        let x = Point::new(0.3, 0.4);
        let g0 = periodic_green(x, &cfg).unwrap();
        for shift in [Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0)] {
            let g1 = periodic_green(x + shift, &cfg).unwrap();
            assert!((g1.value - g0.value).abs() < 1e-12);
            assert!((g1.gradient - g0.gradient).norm() < 1e-12);
        }
        let gm = periodic_green(-x, &cfg).unwrap();
        assert!((gm.value - g0.value).abs() < 1e-14);
        assert!((gm.gradient + g0.gradient).norm() < 1e-13);
    }

    #[test]
    fn ewald_split_invariance() {
        let a = PeriodicGreenConfig::new(2.0, 1e-13).unwrap();
        let b = PeriodicGreenConfig::new(3.0, 1e-13).unwrap();
        let x = Point::new(0.5, 0.5);
        let ga = periodic_green(x, &a).unwrap();
        let gb = periodic_green(x, &b).unwrap();
        assert!((ga.value - gb.value).abs() < 1e-10);
    }

    #[test]
    fn lattice_points_are_rejected() {
        let cfg = PeriodicGreenConfig::default();
        assert!(periodic_green(Point::new(1.0, -2.0), &cfg).is_err());
        assert!(periodic_green(Point::new(0.0, 0.0), &cfg).is_err());
    }

    #[test]
    fn regularized_identity_and_smoothness() {
        let cfg = PeriodicGreenConfig::default();
        let x = Point::new(0.2, 0.1);
        let full = periodic_green(x, &cfg).unwrap();
        let free = free_green(x).unwrap();
        let reg = regularized_periodic_green(x, &cfg);
        assert!((reg.value + free.value - full.value).abs() < 1e-12);
        assert!((reg.gradient + free.gradient - full.gradient).norm() < 1e-11);

        let tiny = regularized_periodic_green(Point::new(1e-8, 0.0), &cfg);
        let origin = regularized_periodic_green(Point::zeros(), &cfg);
        assert!(tiny.value.is_finite() && (tiny.value - origin.value).abs() < 1e-12);
        assert!(origin.gradient.norm() < 1e-15);

        let y = Point::new(0.15, -0.05);
        let a = regularized_periodic_green(y, &cfg).value;
        let b = regularized_periodic_green(-y, &cfg).value;
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn explicit_cutoffs_are_checked() {
        assert!(matches!(
            PeriodicGreenConfig::with_cutoffs(2.5, 0.8, 2.0, 1e-13),
            Err(Error::Config(_))
        ));
        let auto = PeriodicGreenConfig::new(2.5, 1e-13).unwrap();
        assert!(PeriodicGreenConfig::with_cutoffs(2.5, auto.real_cutoff, auto.fourier_cutoff, 1e-13).is_ok());
        assert!(PeriodicGreenConfig::new(0.0, 1e-13).is_err());
    }

    #[test]
    fn moments_match_direct_fourier_sum() {
        let cfg = PeriodicGreenConfig::default();
        let sources = [Point::new(0.4, 0.45), Point::new(0.6, 0.52), Point::new(0.51, 0.3)];
        let charges = [0.7, -1.2, 0.4];
        let moments = FourierMoments::new(&cfg, &sources, &charges);
        let x = Point::new(0.13, 0.82);
        let m = moments.evaluate(x);
        let mut value = 0.0;
        let mut gradient = Point::zeros();
        for (y, q) in sources.iter().zip(charges) {
            let f = ewald_fourier(x - y, &cfg);
            value += q * f.value;
            gradient += f.gradient * q;
        }
        assert!((m.value - value).abs() < 1e-14);
        assert!((m.gradient - gradient).norm() < 1e-13);
    }
}
