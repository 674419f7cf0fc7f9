//! Effective conductivity, the scaled coefficient `Λ̂(ε) = (λ^eff[ε] − λ⁻I)/ε²`,
//! the limit coefficient `Λ[0, r★]` and the ε-sweep harness.
//!
//! The effective matrix is evaluated in boundary form,
//!
//! ```text
//! λ^eff_kj = λ⁻δ_kj + ∮_{∂Ω_{p,ε}} (λ⁺u⁺ⱼ − λ⁻u⁻ⱼ) νₖ dσ,
//! ```
//!
//! which follows from the volume definition by the divergence theorem; the
//! matrix-side integral over `∂Q` contributes `δ_kj` because `u⁻ⱼ` jumps by
//! `δ_hj` across opposite faces.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{discretize, shape_measure, PlacedInclusion, Point, ShapeSpec};
use crate::greens::PeriodicGreenConfig;
use crate::transmission::{
    CellProblem, ExteriorNeumannProblem, LimitProblem, PhaseParameters, ProblemKind, TransmissionSolution,
    CELL_BC_TOL, LIMIT_BC_TOL,
};

/// Row-major 2×2 matrix, `m[k][j]`.
pub type Mat2 = [[f64; 2]; 2];

const DIM: i32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectiveResult {
    pub eps: f64,
    pub n_nodes: usize,
    pub lambda_eff: Mat2,
    pub lambda_hat: Mat2,
    /// Largest scaled boundary-condition residual over both directions.
    pub bc_residual: f64,
    /// `|λ^eff₁₂ − λ^eff₂₁|`, reported but not asserted for generic shapes.
    pub symmetry_defect: f64,
    pub condition: f64,
}

/// `λ^eff[ε]` and `Λ̂(ε)` from the cell solutions for both directions.
pub fn effective_matrix(
    solutions: &[TransmissionSolution],
    inclusion: &PlacedInclusion,
    phases: &PhaseParameters,
) -> Result<EffectiveResult> {
    let mut by_dir: [Option<&TransmissionSolution>; 2] = [None, None];
    for sol in solutions {
        if sol.problem != ProblemKind::PeriodicCell {
            return Err(Error::Parameter(format!("expected a cell solution, got {:?}", sol.problem)));
        }
        if by_dir[sol.direction].replace(sol).is_some() {
            return Err(Error::Parameter(format!("direction {} given twice", sol.direction + 1)));
        }
    }
    let eps = inclusion.scale;
    let (lp, lm) = (phases.lambda_plus, phases.lambda_minus);
    let mut lambda_eff = [[0.0; 2]; 2];
    let mut bc_residual: f64 = 0.0;
    let mut condition: f64 = 0.0;
    let mut n_nodes = 0;
    for (j, sol) in by_dir.iter().enumerate() {
        let sol = sol.ok_or_else(|| Error::Parameter(format!("missing solution for direction {}", j + 1)))?;
        let disc = &sol.disc;
        if (disc.scale() - eps).abs() > 1e-14 * eps || (disc.center() - inclusion.center()).norm() > 1e-14 {
            return Err(Error::Parameter("solution geometry does not match the inclusion".into()));
        }
        let interior = sol.piece(crate::potentials::Side::Interior)?;
        for (k, row) in lambda_eff.iter_mut().enumerate() {
            let integrand: Vec<f64> = (0..disc.len())
                .map(|i| (lp * interior.trace[i] - lm * sol.exterior.trace[i]) * disc.normals[i][k])
                .collect();
            row[j] = disc.integrate(&integrand) + if k == j { lm } else { 0.0 };
        }
        bc_residual = bc_residual.max(sol.residuals.scaled_max());
        condition = condition.max(sol.residuals.condition);
        n_nodes = disc.len();
    }
    let scale = eps.powi(DIM);
    let mut lambda_hat = [[0.0; 2]; 2];
    for k in 0..2 {
        for j in 0..2 {
            lambda_hat[k][j] = (lambda_eff[k][j] - if k == j { lm } else { 0.0 }) / scale;
        }
    }
    if lambda_hat.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite effective coefficient".into()));
    }
    Ok(EffectiveResult {
        eps,
        n_nodes,
        lambda_eff,
        lambda_hat,
        bc_residual,
        symmetry_defect: (lambda_eff[0][1] - lambda_eff[1][0]).abs(),
        condition,
    })
}

/// Solves both cell problems and returns the effective matrix; fails if a
/// boundary condition is violated beyond the cell tolerance.
pub fn solve_effective(
    inclusion: &PlacedInclusion,
    phases: &PhaseParameters,
    n: usize,
    green: &PeriodicGreenConfig,
) -> Result<EffectiveResult> {
    let problem = CellProblem::assemble(inclusion, phases, n, green)?;
    let solutions = [problem.solve(0)?, problem.solve(1)?];
    let result = effective_matrix(&solutions, inclusion, phases)?;
    if result.bc_residual > CELL_BC_TOL {
        return Err(Error::Solver(format!(
            "boundary residual {:.3e} at ε = {} exceeds {CELL_BC_TOL:e}",
            result.bc_residual, inclusion.scale
        )));
    }
    Ok(result)
}

fn check_limit_residuals(sol: &TransmissionSolution) -> Result<()> {
    let r = sol.residuals.scaled_max();
    if r > LIMIT_BC_TOL {
        return Err(Error::Solver(format!("limit problem boundary residual {r:.3e} exceeds {LIMIT_BC_TOL:e}")));
    }
    Ok(())
}

/// `Λ[0, r★] = λ⁺∮ũ⁺ⱼνₖ − λ⁻∮ũ⁻ⱼνₖ + (λ⁺−λ⁻)|Ω|δ_kj`.
pub fn limit_lambda(shape: ShapeSpec, phases: &PhaseParameters, r_star: f64, n: usize) -> Result<Mat2> {
    let problem = LimitProblem::assemble(shape, phases, r_star, n)?;
    let (lp, lm) = (phases.lambda_plus, phases.lambda_minus);
    let measure = shape_measure(&discretize(shape, n)?);
    let mut out = [[0.0; 2]; 2];
    for j in 0..2 {
        let sol = problem.solve(j)?;
        check_limit_residuals(&sol)?;
        let interior = sol.piece(crate::potentials::Side::Interior)?;
        let disc = &sol.disc;
        for (k, row) in out.iter_mut().enumerate() {
            let integrand: Vec<f64> = (0..disc.len())
                .map(|i| (lp * interior.trace[i] - lm * sol.exterior.trace[i]) * disc.normals[i][k])
                .collect();
            row[j] = disc.integrate(&integrand) + if k == j { (lp - lm) * measure } else { 0.0 };
        }
    }
    Ok(out)
}

/// `Λ[0, 0] = −λ⁻∮ṽⱼνₖ − λ⁻|Ω|δ_kj` from the exterior Neumann problem.
pub fn limit_lambda_r0(shape: ShapeSpec, phases: &PhaseParameters, n: usize) -> Result<Mat2> {
    let problem = ExteriorNeumannProblem::assemble(shape, n)?;
    let lm = phases.lambda_minus;
    let measure = shape_measure(&discretize(shape, n)?);
    let mut out = [[0.0; 2]; 2];
    for j in 0..2 {
        let sol = problem.solve(j)?;
        check_limit_residuals(&sol)?;
        let disc = &sol.disc;
        for (k, row) in out.iter_mut().enumerate() {
            let integrand: Vec<f64> = (0..disc.len()).map(|i| sol.exterior.trace[i] * disc.normals[i][k]).collect();
            row[j] = -lm * disc.integrate(&integrand) - if k == j { lm * measure } else { 0.0 };
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    /// Entries in decreasing ε order.
    pub entries: Vec<EffectiveResult>,
    /// First-order Richardson extrapolation from the two smallest ε.
    pub extrapolated: Mat2,
    /// Richardson estimates from each consecutive pair, for inspection.
    pub richardson_sequence: Vec<Mat2>,
    pub r_star: f64,
    /// `Λ[0, r★]` from the limit solver.
    pub reference: Mat2,
    /// `|extrapolated − reference|` divided by the largest reference entry.
    pub relative_deviation: Mat2,
    /// Order of `Λ̂₁₁(ε) → Λ[0,r★]` estimated from consecutive triples.
    pub empirical_order: Vec<f64>,
    /// Least-squares log-log slope of `|λ^eff₁₁ − λ⁻|` against ε.
    pub loglog_slope: f64,
    /// Whether `|Λ̂₁₁(ε) − Λ₁₁[0,r★]|` decreases along the sweep.
    pub residual_decay_monotone: bool,
}

/// Solves the cell problem at each ε (in parallel), then extrapolates
/// `Λ̂(ε)` to ε = 0 and compares with the limit solver.
pub fn sweep_and_extrapolate(
    shape: ShapeSpec,
    center: Point,
    phases: &PhaseParameters,
    eps_list: &[f64],
    n: usize,
    green: &PeriodicGreenConfig,
) -> Result<SweepResult> {
    if eps_list.len() < 3 {
        return Err(Error::Parameter("sweep requires ≥ 3 epsilons".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Parameter(format!("ε list must be strictly decreasing, got {eps_list:?}")));
    }
    let inclusions = eps_list
        .iter()
        .map(|&eps| PlacedInclusion::new(shape, center, eps))
        .collect::<Result<Vec<_>>>()?;
    let entries = inclusions
        .par_iter()
        .map(|inc| solve_effective(inc, phases, n, green))
        .collect::<Result<Vec<_>>>()?;

    let r_star = phases.r_star();
    let reference = limit_lambda(shape, phases, r_star, n)?;

    let richardson_sequence: Vec<Mat2> = entries
        .windows(2)
        .map(|w| map2(|k, j| richardson(w[0].eps, w[0].lambda_hat[k][j], w[1].eps, w[1].lambda_hat[k][j])))
        .collect();
    let extrapolated = *richardson_sequence.last().expect("at least two entries");
    let ref_scale = reference.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let relative_deviation = map2(|k, j| (extrapolated[k][j] - reference[k][j]).abs() / ref_scale);

    let eps: Vec<f64> = entries.iter().map(|e| e.eps).collect();
    let hat11: Vec<f64> = entries.iter().map(|e| e.lambda_hat[0][0]).collect();
    let empirical_order = (0..entries.len() - 2)
        .map(|i| empirical_order(&eps[i..i + 3], &hat11[i..i + 3]))
        .collect();
    let lm = phases.lambda_minus;
    let dev: Vec<f64> = entries.iter().map(|e| (e.lambda_eff[0][0] - lm).abs()).collect();
    let loglog_slope = loglog_slope(&eps, &dev);
    let gaps: Vec<f64> = hat11.iter().map(|h| (h - reference[0][0]).abs()).collect();
    let residual_decay_monotone = gaps.windows(2).all(|w| w[1] < w[0]);

    Ok(SweepResult {
        entries,
        extrapolated,
        richardson_sequence,
        r_star,
        reference,
        relative_deviation,
        empirical_order,
        loglog_slope,
        residual_decay_monotone,
    })
}

fn map2(f: impl Fn(usize, usize) -> f64) -> Mat2 {
    [[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]]
}

/// Eliminates a linear error term from values at `e1` and `e2`.
pub fn richardson(e1: f64, v1: f64, e2: f64, v2: f64) -> f64 {
    (e1 * v2 - e2 * v1) / (e1 - e2)
}

/// Order `p` for which `v(ε) = L + Cεᵖ` fits three samples; NaN if the
/// differences do not have a consistent sign.
pub fn empirical_order(eps: &[f64], values: &[f64]) -> f64 {
    let (d1, d2) = (values[0] - values[1], values[1] - values[2]);
    let target = d1 / d2;
    if !(target.is_finite() && target > 0.0) {
        return f64::NAN;
    }
    let ratio = |p: f64| (eps[0].powf(p) - eps[1].powf(p)) / (eps[1].powf(p) - eps[2].powf(p));
    let (mut lo, mut hi) = (1e-3, 20.0);
    if !(ratio(lo) - target).is_sign_negative() || (ratio(hi) - target).is_sign_negative() {
        return f64::NAN;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
