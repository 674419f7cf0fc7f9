//! Nyström discretization of single-layer potentials and their normal
//! derivatives on a closed curve, for the free-space and the periodic kernel.
//!
//! The logarithmic part of either kernel is split as
//! `log|x(t)−y(τ)| = ½ log(4 sin²((t−τ)/2)) + L(t, τ)` with `L` smooth; the
//! first term is integrated exactly against the trigonometric interpolant of
//! the density (Kress product weights), everything else by the trapezoid rule.
//!
//! One-sided normal derivatives of `S[μ]` follow the `ΔG = δ` convention:
//! the exterior limit is `+μ/2 + K'[μ]` and the interior limit `−μ/2 + K'[μ]`,
//! so exterior minus interior equals `μ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryDiscretization, Point};
use crate::greens::{ewald_real, free_green_unchecked, FourierMoments, GreenEval, PeriodicGreenConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Free,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Interior,
    Exterior,
}

impl Side {
    /// Coefficient of the jump term `±μ/2`.
    pub fn jump_sign(self) -> f64 {
        match self {
            Side::Interior => -1.0,
            Side::Exterior => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelTag {
    SingleLayer(KernelKind),
    NormalDerivative(KernelKind, Side),
}

/// Density per unit arc length at the nodes of a discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerDensity(Vec<f64>);

impl LayerDensity {
    pub fn new(values: Vec<f64>, disc: &BoundaryDiscretization) -> Result<Self> {
        if values.len() != disc.len() {
            return Err(Error::Parameter(format!(
                "density has {} values for {} nodes",
                values.len(),
                disc.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("density has non-finite entries".into()));
        }
        Ok(LayerDensity(values))
    }

    pub fn zeros(n: usize) -> Self {
        LayerDensity(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Trigonometric interpolant sampled on `m ≥ N` equispaced nodes
    /// (same starting parameter).
    pub fn upsample(&self, m: usize) -> LayerDensity {
        LayerDensity(trig_upsample(&self.0, m))
    }

    /// Interpolant at the nodes shifted by `shift` grid spacings.
    pub fn shifted(&self, shift: f64) -> LayerDensity {
        let n = self.0.len();
        let w = interpolation_weights(n, shift);
        LayerDensity(
            (0..n)
                .map(|i| (0..n).map(|j| w[(i + n - j) % n] * self.0[j]).sum())
                .collect(),
        )
    }
}

/// Dense quadrature matrix of a boundary integral operator.
#[derive(Clone, Debug)]
pub struct NystromOperator {
    pub matrix: DMatrix<f64>,
    pub tag: KernelTag,
    /// Source discretization.
    pub source: BoundaryDiscretization,
    /// Target nodes: the source nodes shifted by this many spacings.
    pub target_shift: f64,
}

impl NystromOperator {
    pub fn apply(&self, density: &LayerDensity) -> Vec<f64> {
        let v = &self.matrix * nalgebra::DVector::from_column_slice(density.values());
        v.iter().copied().collect()
    }
}

/// Kress weights `R(d) = −(2π/n) Σ_{m=1}^{n−1} cos(md)/m − (π/n²) cos(nd)`,
/// `N = 2n`, tabulated at `d = (k + shift)·2π/N` for `k = 0..N`.
pub fn log_weights(n_nodes: usize, shift: f64) -> Vec<f64> {
    let n = n_nodes / 2;
    let h = 2.0 * PI / n_nodes as f64;
    (0..n_nodes)
        .map(|k| {
            let d = (k as f64 + shift) * h;
            let mut sum = 0.0;
            for m in 1..n {
                sum += (m as f64 * d).cos() / m as f64;
            }
            -2.0 * PI / n as f64 * sum - PI / (n * n) as f64 * (n as f64 * d).cos()
        })
        .collect()
}

/// Cardinal functions of even-order trigonometric interpolation,
/// `(1/N)[1 + 2 Σ_{m=1}^{n−1} cos(md) + cos(nd)]`, tabulated like [`log_weights`].
pub fn interpolation_weights(n_nodes: usize, shift: f64) -> Vec<f64> {
    let n = n_nodes / 2;
    let h = 2.0 * PI / n_nodes as f64;
    (0..n_nodes)
        .map(|k| {
            let d = (k as f64 + shift) * h;
            let mut sum = 1.0 + (n as f64 * d).cos();
            for m in 1..n {
                sum += 2.0 * (m as f64 * d).cos();
            }
            sum / n_nodes as f64
        })
        .collect()
}

/// Zero-padded FFT interpolation of periodic samples onto `m` nodes.
pub fn trig_upsample(values: &[f64], m: usize) -> Vec<f64> {
    let n = values.len();
    if m == n {
        return values.to_vec();
    }
    assert!(m > n && n % 2 == 0, "upsampling needs an even source and a larger target");
    let mut planner = FftPlanner::<f64>::new();
    let mut spec: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut padded = vec![Complex::new(0.0, 0.0); m];
    let half = n / 2;
    padded[..half].copy_from_slice(&spec[..half]);
    for k in 1..half {
        padded[m - k] = spec[n - k];
    }
    // Nyquist coefficient split evenly between ±n/2
    padded[half] = spec[half] * 0.5;
    padded[m - half] = spec[half] * 0.5;
    planner.plan_fft_inverse(m).process(&mut padded);
    padded.iter().map(|c| c.re / n as f64).collect()
}

fn check_operator_input(disc: &BoundaryDiscretization, kernel: KernelKind) -> Result<()> {
    if disc.len() % 2 != 0 || disc.len() < 4 {
        return Err(Error::Discretization(format!(
            "Nyström assembly needs an even node count, got {}",
            disc.len()
        )));
    }
    if disc.shift() != 0.0 {
        return Err(Error::Discretization("source nodes must start at parameter 0".into()));
    }
    if kernel == KernelKind::Periodic {
        let (lo, hi) = disc.shape().bounding_box();
        let extent = (hi - lo) * disc.scale();
        if extent.x >= 1.0 || extent.y >= 1.0 {
            return Err(Error::Discretization(format!(
                "periodic kernel needs an inclusion narrower than the cell, got extent ({:.4}, {:.4})",
                extent.x, extent.y
            )));
        }
    }
    Ok(())
}

/// Single-layer, adjoint double-layer (principal value) and interpolation
/// matrices from the source nodes to targets shifted by `shift` spacings.
#[derive(Clone, Debug)]
pub(crate) struct LayerMatrices {
    pub single: DMatrix<f64>,
    pub adjoint: DMatrix<f64>,
    pub interp: DMatrix<f64>,
}

pub(crate) fn layer_matrices(
    source: &BoundaryDiscretization,
    shift: f64,
    kernel: KernelKind,
    cfg: &PeriodicGreenConfig,
) -> Result<LayerMatrices> {
    check_operator_input(source, kernel)?;
    let n = source.len();
    let h = source.spacing();
    let targets = if shift == 0.0 { source.clone() } else { source.shifted(shift) };
    let log_w = log_weights(n, shift);
    let interp_w = interpolation_weights(n, shift);

    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = targets.nodes[i];
            let nu = targets.normals[i];
            let ti = targets.params[i];
            let mut s_row = vec![0.0; n];
            let mut k_row = vec![0.0; n];
            for j in 0..n {
                let sj = source.speeds[j];
                let on_node = shift == 0.0 && i == j;
                let log_part = log_w[(i + n - j) % n] / (4.0 * PI) * sj;
                let (smooth_log, kernel_free) = if on_node {
                    (sj.ln(), targets.curvature[i] / (4.0 * PI))
                } else {
                    let d = x - source.nodes[j];
                    let r2 = d.norm_squared();
                    let half = 0.5 * (ti - source.params[j]);
                    let sin2 = 4.0 * half.sin().powi(2);
                    (0.5 * (r2 / sin2).ln(), d.dot(&nu) / (2.0 * PI * r2))
                };
                let mut s = log_part + h * sj * smooth_log / (2.0 * PI);
                let mut k = h * sj * kernel_free;
                if kernel == KernelKind::Periodic {
                    let d = x - source.nodes[j];
                    let reg = regularized(d, cfg);
                    s += h * sj * reg.value;
                    k += h * sj * reg.gradient.dot(&nu);
                }
                s_row[j] = s;
                k_row[j] = k;
            }
            (s_row, k_row)
        })
        .collect();

    let mut single = DMatrix::zeros(n, n);
    let mut adjoint = DMatrix::zeros(n, n);
    for (i, (s_row, k_row)) in rows.into_iter().enumerate() {
        for j in 0..n {
            single[(i, j)] = s_row[j];
            adjoint[(i, j)] = k_row[j];
        }
    }
    let interp = DMatrix::from_fn(n, n, |i, j| interp_w[(i + n - j) % n]);
    Ok(LayerMatrices { single, adjoint, interp })
}

#[inline]
fn regularized(d: Point, cfg: &PeriodicGreenConfig) -> GreenEval {
    crate::greens::ewald(d, cfg, true)
}

/// Matrix of `μ ↦ S[μ]` at the nodes.
pub fn single_layer_matrix(
    disc: &BoundaryDiscretization,
    kernel: KernelKind,
    cfg: &PeriodicGreenConfig,
) -> Result<NystromOperator> {
    let m = layer_matrices(disc, 0.0, kernel, cfg)?;
    Ok(NystromOperator {
        matrix: m.single,
        tag: KernelTag::SingleLayer(kernel),
        source: disc.clone(),
        target_shift: 0.0,
    })
}

/// Matrix of the one-sided normal derivative `∂_ν S[μ]` at the nodes.
pub fn normal_derivative_matrix(
    disc: &BoundaryDiscretization,
    kernel: KernelKind,
    side: Side,
    cfg: &PeriodicGreenConfig,
) -> Result<NystromOperator> {
    let m = layer_matrices(disc, 0.0, kernel, cfg)?;
    Ok(NystromOperator {
        matrix: m.adjoint + m.interp * (0.5 * side.jump_sign()),
        tag: KernelTag::NormalDerivative(kernel, side),
        source: disc.clone(),
        target_shift: 0.0,
    })
}

/// Off-boundary evaluation of `S[μ]` and `∇S[μ]` by the plain trapezoid
/// rule. Accuracy degrades within a few node spacings of the curve.
pub fn evaluate_potential(
    density: &LayerDensity,
    disc: &BoundaryDiscretization,
    targets: &[Point],
    kernel: KernelKind,
    cfg: &PeriodicGreenConfig,
) -> Result<Vec<GreenEval>> {
    let eval = PotentialEvaluator::new(density, disc, kernel, cfg)?;
    targets.iter().map(|x| eval.evaluate(*x)).collect()
}

/// Refinement factors tried by [`PotentialEvaluator::evaluate_refined`].
const REFINEMENT_LEVELS: [usize; 4] = [1, 8, 64, 512];
/// Targets closer than this many (refined) arc spacings are not resolved.
const NEAR_SPACINGS: f64 = 4.0;

struct RefinedLevel {
    disc: BoundaryDiscretization,
    charges: Vec<f64>,
}

/// Reusable evaluator for one density; the periodic kernel's reciprocal
/// sum is precomputed as moments.
pub struct PotentialEvaluator<'a> {
    disc: &'a BoundaryDiscretization,
    kernel: KernelKind,
    cfg: &'a PeriodicGreenConfig,
    charges: Vec<f64>,
    moments: Option<FourierMoments<'a>>,
    levels: Vec<RefinedLevel>,
    density: LayerDensity,
}

impl<'a> PotentialEvaluator<'a> {
    pub fn new(
        density: &LayerDensity,
        disc: &'a BoundaryDiscretization,
        kernel: KernelKind,
        cfg: &'a PeriodicGreenConfig,
    ) -> Result<Self> {
        if density.len() != disc.len() {
            return Err(Error::Parameter("density and discretization sizes differ".into()));
        }
        let charges: Vec<f64> = density.values().iter().zip(&disc.weights).map(|(m, w)| m * w).collect();
        let moments = match kernel {
            KernelKind::Periodic => Some(FourierMoments::new(cfg, &disc.nodes, &charges)),
            KernelKind::Free => None,
        };
        Ok(PotentialEvaluator {
            disc,
            kernel,
            cfg,
            charges,
            moments,
            levels: Vec::new(),
            density: density.clone(),
        })
    }

    /// Enables near-boundary evaluation: the logarithmic part is integrated
    /// against the density interpolated onto finer grids.
    pub fn with_refinement(mut self) -> Self {
        let n = self.disc.len();
        self.levels = REFINEMENT_LEVELS
            .iter()
            .map(|&f| {
                let disc = if f == 1 {
                    self.disc.clone()
                } else {
                    self.disc.resampled(n * f).expect("refined node count is valid")
                };
                let mu = self.density.upsample(n * f);
                let charges = mu.values().iter().zip(&disc.weights).map(|(m, w)| m * w).collect();
                RefinedLevel { disc, charges }
            })
            .collect();
        self
    }

    /// Periodic images are folded so that the target sits in the cell
    /// centred on the inclusion.
    fn representative(&self, x: Point) -> Point {
        match self.kernel {
            KernelKind::Free => x,
            KernelKind::Periodic => {
                let c = self.disc.center();
                let d = x - c;
                Point::new(x.x - d.x.round(), x.y - d.y.round())
            }
        }
    }

    fn check_off_boundary(&self, x: Point) -> Result<f64> {
        let (dist, _) = self.disc.distance_to(&x);
        if dist <= 1e-12 * self.disc.scale() {
            return Err(Error::Domain(format!(
                "target ({}, {}) lies on the boundary",
                x.x, x.y
            )));
        }
        Ok(dist)
    }

    pub fn evaluate(&self, x: Point) -> Result<GreenEval> {
        let x = self.representative(x);
        self.check_off_boundary(x)?;
        let mut out = self.sum_free(x, &self.disc.nodes, &self.charges);
        self.add_smooth(x, &mut out);
        Ok(out)
    }

    /// Like [`evaluate`](Self::evaluate) but accurate down to a few refined
    /// spacings from the curve. Returns `None` when the target is closer
    /// than the finest grid resolves. Requires [`with_refinement`](Self::with_refinement).
    pub fn evaluate_refined(&self, x: Point) -> Result<Option<GreenEval>> {
        assert!(!self.levels.is_empty(), "refinement levels not built");
        let x = self.representative(x);
        let dist = self.check_off_boundary(x)?;
        let Some(level) = self
            .levels
            .iter()
            .find(|l| dist > NEAR_SPACINGS * l.disc.max_arc_spacing())
        else {
            return Ok(None);
        };
        let mut out = self.sum_free(x, &level.disc.nodes, &level.charges);
        self.add_smooth(x, &mut out);
        Ok(Some(out))
    }

    fn sum_free(&self, x: Point, nodes: &[Point], charges: &[f64]) -> GreenEval {
        let mut out = GreenEval { value: 0.0, gradient: Point::zeros() };
        for (y, q) in nodes.iter().zip(charges) {
            let g = free_green_unchecked(x - y);
            out.value += q * g.value;
            out.gradient += g.gradient * *q;
        }
        out
    }

    /// Smooth periodic remainder: real-space Ewald terms on the coarse grid
    /// plus the reciprocal moments.
    fn add_smooth(&self, x: Point, out: &mut GreenEval) {
        if let Some(moments) = &self.moments {
            for (y, q) in self.disc.nodes.iter().zip(&self.charges) {
                let g = ewald_real(x - y, self.cfg, true);
                out.value += q * g.value;
                out.gradient += g.gradient * *q;
            }
            let f = moments.evaluate(x);
            out.value += f.value;
            out.gradient += f.gradient;
        }
    }
}
