//! Boundary-integral solvers for the three transmission problems:
//!
//! * the periodic cell problem with imperfect contact at `∂Ω_{p,ε}`,
//! * the free-space limiting problem governing `Λ[0, r★]`,
//! * the exterior Neumann problem for the case `r★ = 0`.
//!
//! Fields are represented as single layers plus constants,
//! `u± = xⱼ + S[μ±] + c±` (periodic kernel) for the cell problem and
//! `ũ± = S[μ±] + c±` (free kernel) for the limiting problems. The side
//! constraints `∮μ± = 0` keep periodic potentials harmonic and free-space
//! exterior potentials bounded. Each continuous system has one redundant
//! flux equation per Neumann-type block, so a scalar multiplier is added to
//! those rows to make the discrete system square; the multiplier vanishes
//! for exact data and is reported as a diagnostic.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{discretize, BoundaryDiscretization, PlacedInclusion, Point, ShapeSpec};
use crate::greens::{GreenEval, PeriodicGreenConfig};
use crate::potentials::{layer_matrices, KernelKind, LayerDensity, LayerMatrices, PotentialEvaluator, Side};

/// Smallest inclusion scale handled by the cell solver.
pub const MIN_CELL_EPS: f64 = 1e-3;
/// Solves with a 1-norm condition number above this fail.
pub const MAX_CONDITION: f64 = 1e12;
/// Boundary-condition tolerance of the cell problem, before the `1/ρ` scaling.
pub const CELL_BC_TOL: f64 = 1e-6;
/// Boundary-condition tolerance of the limiting problems.
pub const LIMIT_BC_TOL: f64 = 1e-8;

/// Interfacial resistivity `ρ(ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum RhoModel {
    /// `ρ(ε) = ε / r★`.
    Linear { r_star: f64 },
    /// `ρ(ε) = ρ₀`.
    Constant { rho0: f64 },
    /// `ρ(ε) = c·ε^β` with `β < 1`.
    Power { c: f64, beta: f64 },
}

impl RhoModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RhoModel::Linear { r_star } => r_star.is_finite() && r_star > 0.0,
            RhoModel::Constant { rho0 } => rho0.is_finite() && rho0 > 0.0,
            RhoModel::Power { c, beta } => c.is_finite() && c > 0.0 && beta.is_finite() && beta < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "invalid resistivity model {self:?}: linear needs r★ > 0, constant needs ρ₀ > 0, \
                 power needs c > 0 and β < 1"
            )))
        }
    }

    pub fn rho(&self, eps: f64) -> f64 {
        match *self {
            RhoModel::Linear { r_star } => eps / r_star,
            RhoModel::Constant { rho0 } => rho0,
            RhoModel::Power { c, beta } => c * eps.powf(beta),
        }
    }

    /// `r★ = lim_{ε→0⁺} ε/ρ(ε)`.
    pub fn r_star(&self) -> f64 {
        match *self {
            RhoModel::Linear { r_star } => r_star,
            RhoModel::Constant { .. } | RhoModel::Power { .. } => 0.0,
        }
    }
}

/// Conductivities of the inclusion (`λ⁺`) and matrix (`λ⁻`) phases and the
/// interface resistivity model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseParameters {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub rho: RhoModel,
}

impl PhaseParameters {
    pub fn new(lambda_plus: f64, lambda_minus: f64, rho: RhoModel) -> Result<Self> {
        for (name, v) in [("λ⁺", lambda_plus), ("λ⁻", lambda_minus)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("conductivity must be positive, got {name} = {v}")));
            }
        }
        rho.validate()?;
        Ok(PhaseParameters { lambda_plus, lambda_minus, rho })
    }

    pub fn r_star(&self) -> f64 {
        self.rho.r_star()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    PeriodicCell,
    Limit,
    ExteriorNeumann,
}

/// One side of the solution: `S[μ] + c`, plus the carrier `xⱼ` for the
/// periodic cell problem.
#[derive(Clone, Debug)]
pub struct FieldPiece {
    pub density: LayerDensity,
    pub constant: f64,
    /// Boundary trace at the nodes.
    pub trace: Vec<f64>,
    /// One-sided normal derivative at the nodes.
    pub flux: Vec<f64>,
}

/// Residuals measured at the midpoints between collocation nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BoundaryResiduals {
    /// Flux-continuity residual, max over checkpoints.
    pub flux: f64,
    /// Second interface condition (jump or Neumann), max over checkpoints.
    pub jump: f64,
    /// Scale applied to `jump` before comparison (`max(1, 1/ρ)` for the cell problem).
    pub jump_scale: f64,
    /// `max |∮u dσ|` over the normalized pieces.
    pub normalization: f64,
    /// `max |∮μ dσ|` over the pieces.
    pub side_constraint: f64,
    /// Compatibility multipliers (zero for exact data).
    pub multiplier: f64,
    /// Estimated 1-norm condition number of the linear system.
    pub condition: f64,
}

impl BoundaryResiduals {
    /// Largest boundary-condition residual after scaling the jump condition.
    pub fn scaled_max(&self) -> f64 {
        self.flux.max(self.jump / self.jump_scale)
    }
}

/// Solution of one of the transmission problems for direction `j` (zero-based).
#[derive(Clone, Debug)]
pub struct TransmissionSolution {
    pub problem: ProblemKind,
    pub direction: usize,
    pub kernel: KernelKind,
    pub disc: BoundaryDiscretization,
    pub green: PeriodicGreenConfig,
    /// Inclusion-side field; absent for the exterior Neumann problem.
    pub interior: Option<FieldPiece>,
    /// Matrix-side field.
    pub exterior: FieldPiece,
    pub residuals: BoundaryResiduals,
}

impl TransmissionSolution {
    /// Whether the field carries the `xⱼ` term.
    pub fn has_carrier(&self) -> bool {
        self.problem == ProblemKind::PeriodicCell
    }

    /// The field `u± = xⱼ` with zero densities and constants.
    pub fn carrier_only(inc: &PlacedInclusion, j: usize, n: usize, green: &PeriodicGreenConfig) -> Result<Self> {
        check_direction(j)?;
        let disc = inc.discretize(n)?;
        let trace: Vec<f64> = disc.nodes.iter().map(|x| x[j]).collect();
        let flux: Vec<f64> = disc.normals.iter().map(|nu| nu[j]).collect();
        let piece = FieldPiece {
            density: LayerDensity::zeros(n),
            constant: 0.0,
            trace,
            flux,
        };
        Ok(TransmissionSolution {
            problem: ProblemKind::PeriodicCell,
            direction: j,
            kernel: KernelKind::Periodic,
            disc,
            green: green.clone(),
            interior: Some(piece.clone()),
            exterior: piece,
            residuals: BoundaryResiduals { jump_scale: 1.0, ..Default::default() },
        })
    }

    /// Whether `x` lies inside the inclusion (or one of its lattice copies).
    pub fn is_inside(&self, x: &Point) -> bool {
        match self.kernel {
            KernelKind::Periodic => {
                let c = self.disc.center();
                let d = x - c;
                let w = Point::new(x.x - d.x.round(), x.y - d.y.round());
                self.disc.encloses(&w)
            }
            KernelKind::Free => self.disc.encloses(x),
        }
    }

    pub fn piece(&self, side: Side) -> Result<&FieldPiece> {
        match side {
            Side::Exterior => Ok(&self.exterior),
            Side::Interior => self
                .interior
                .as_ref()
                .ok_or_else(|| Error::Domain("this solution has no interior field".into())),
        }
    }
}

fn check_direction(j: usize) -> Result<()> {
    if j > 1 {
        return Err(Error::Parameter(format!("direction index must be 0 or 1, got {j}")));
    }
    Ok(())
}

/// Reconstructs temperatures and gradients at off-boundary points on the
/// given side; points on the other side are rejected.
pub fn evaluate_solution(sol: &TransmissionSolution, points: &[Point], side: Side) -> Result<Vec<GreenEval>> {
    let eval = SolutionEvaluator::new(sol, false)?;
    points
        .iter()
        .map(|x| {
            let inside = sol.is_inside(x);
            if inside != (side == Side::Interior) {
                return Err(Error::Domain(format!(
                    "point ({}, {}) is not on the {side:?} side",
                    x.x, x.y
                )));
            }
            eval.evaluate(*x, side)
        })
        .collect()
}

/// Field evaluator for many targets, optionally refined near the boundary.
pub struct SolutionEvaluator<'a> {
    sol: &'a TransmissionSolution,
    interior: Option<PotentialEvaluator<'a>>,
    exterior: PotentialEvaluator<'a>,
}

impl<'a> SolutionEvaluator<'a> {
    pub fn new(sol: &'a TransmissionSolution, refined: bool) -> Result<Self> {
        let build = |piece: &FieldPiece| -> Result<PotentialEvaluator<'a>> {
            let e = PotentialEvaluator::new(&piece.density, &sol.disc, sol.kernel, &sol.green)?;
            Ok(if refined { e.with_refinement() } else { e })
        };
        let interior = match &sol.interior {
            Some(p) => Some(build(p)?),
            None => None,
        };
        Ok(SolutionEvaluator { sol, interior, exterior: build(&sol.exterior)? })
    }

    fn parts(&self, side: Side) -> Result<(&PotentialEvaluator<'a>, f64)> {
        match side {
            Side::Exterior => Ok((&self.exterior, self.sol.exterior.constant)),
            Side::Interior => {
                let e = self
                    .interior
                    .as_ref()
                    .ok_or_else(|| Error::Domain("this solution has no interior field".into()))?;
                Ok((e, self.sol.piece(Side::Interior)?.constant))
            }
        }
    }

    fn finish(&self, x: Point, mut g: GreenEval, constant: f64) -> GreenEval {
        g.value += constant;
        if self.sol.has_carrier() {
            let j = self.sol.direction;
            g.value += x[j];
            g.gradient[j] += 1.0;
        }
        g
    }

    pub fn evaluate(&self, x: Point, side: Side) -> Result<GreenEval> {
        let (e, c) = self.parts(side)?;
        Ok(self.finish(x, e.evaluate(x)?, c))
    }

    /// Near-boundary evaluation (requires `refined = true`); the side is
    /// taken from the location. `None` if the point is too close to resolve.
    pub fn evaluate_refined(&self, x: Point) -> Result<Option<(Side, GreenEval)>> {
        let side = if self.sol.is_inside(&x) { Side::Interior } else { Side::Exterior };
        let (e, c) = self.parts(side)?;
        Ok(e.evaluate_refined(x)?.map(|g| (side, self.finish(x, g, c))))
    }
}

/// Operators of one boundary at the nodes and at the midpoints.
struct Operators {
    nodes: LayerMatrices,
    mids: LayerMatrices,
    mid_disc: BoundaryDiscretization,
}

impl Operators {
    fn new(disc: &BoundaryDiscretization, kernel: KernelKind, cfg: &PeriodicGreenConfig) -> Result<Self> {
        Ok(Operators {
            nodes: layer_matrices(disc, 0.0, kernel, cfg)?,
            mids: layer_matrices(disc, 0.5, kernel, cfg)?,
            mid_disc: disc.shifted(0.5),
        })
    }
}

/// Factored square system with a condition estimate.
struct FactoredSystem {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl FactoredSystem {
    fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let norm = one_norm(&matrix);
        let lu = matrix.lu();
        let inverse = lu
            .try_inverse()
            .ok_or_else(|| Error::Solver("singular boundary-integral system".into()))?;
        let condition = norm * one_norm(&inverse);
        if !(condition.is_finite() && condition <= MAX_CONDITION) {
            return Err(Error::Solver(format!(
                "boundary-integral system is ill-conditioned (condition estimate {condition:.3e})"
            )));
        }
        Ok(FactoredSystem { lu, condition })
    }

    fn solve(&self, rhs: DVector<f64>) -> Result<DVector<f64>> {
        self.lu
            .solve(&rhs)
            .ok_or_else(|| Error::Solver("singular boundary-integral system".into()))
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn copy_block(dst: &mut DMatrix<f64>, row: usize, col: usize, src: &DMatrix<f64>, scale: f64) {
    for i in 0..src.nrows() {
        for j in 0..src.ncols() {
            dst[(row + i, col + j)] += scale * src[(i, j)];
        }
    }
}

/// `K' ± ½I` as a dense matrix.
fn one_sided(m: &LayerMatrices, side: Side) -> DMatrix<f64> {
    &m.adjoint + &m.interp * (0.5 * side.jump_sign())
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).iter().copied().collect()
}

fn max_abs(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, v| m.max(v.abs()))
}

/// Assembled and factored cell problem for one inclusion and phase set;
/// the matrix does not depend on the direction `j`.
pub struct CellProblem {
    inclusion: PlacedInclusion,
    phases: PhaseParameters,
    rho: f64,
    disc: BoundaryDiscretization,
    ops: Operators,
    system: FactoredSystem,
    green: PeriodicGreenConfig,
}

impl CellProblem {
    pub fn assemble(
        inclusion: &PlacedInclusion,
        phases: &PhaseParameters,
        n: usize,
        green: &PeriodicGreenConfig,
    ) -> Result<Self> {
        let eps = inclusion.scale;
        if eps < MIN_CELL_EPS {
            return Err(Error::Parameter(format!(
                "ε = {eps} is below the cell solver's minimum {MIN_CELL_EPS}; use the limit solver"
            )));
        }
        let rho = phases.rho.rho(eps);
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Parameter(format!("ρ(ε) must be positive, got {rho}")));
        }
        let disc = inclusion.discretize(n)?;
        let ops = Operators::new(&disc, KernelKind::Periodic, green)?;

        let (lp, lm) = (phases.lambda_plus, phases.lambda_minus);
        let jump_scale = 1.0f64.max(1.0 / rho);
        let dim = 2 * n + 3;
        let (c_plus, c_minus, tau) = (2 * n, 2 * n + 1, 2 * n + 2);
        let len = disc.length();
        let mut a = DMatrix::zeros(dim, dim);

        let dn_in = one_sided(&ops.nodes, Side::Interior);
        let dn_out = one_sided(&ops.nodes, Side::Exterior);
        // flux continuity: λ⁻∂νu⁻ − λ⁺∂νu⁺ = 0
        copy_block(&mut a, 0, n, &dn_out, lm);
        copy_block(&mut a, 0, 0, &dn_in, -lp);
        // interface jump: λ⁺∂νu⁺ − (u⁻ − u⁺)/ρ = 0
        copy_block(&mut a, n, 0, &dn_in, lp / jump_scale);
        copy_block(&mut a, n, n, &ops.nodes.single, -1.0 / (rho * jump_scale));
        copy_block(&mut a, n, 0, &ops.nodes.single, 1.0 / (rho * jump_scale));
        for i in 0..n {
            a[(i, tau)] = 1.0;
            a[(n + i, c_minus)] = -1.0 / (rho * jump_scale);
            a[(n + i, c_plus)] = 1.0 / (rho * jump_scale);
        }
        // ∮μ⁺ = ∮μ⁻ = 0 and ∮u⁺ = 0 (rows divided by the length)
        for k in 0..n {
            let w = disc.weights[k] / len;
            a[(2 * n, k)] = w;
            a[(2 * n + 1, n + k)] = w;
            for col in 0..n {
                a[(2 * n + 2, col)] += w * ops.nodes.single[(k, col)];
            }
        }
        a[(2 * n + 2, c_plus)] = 1.0;

        let system = FactoredSystem::new(a)?;
        Ok(CellProblem {
            inclusion: *inclusion,
            phases: *phases,
            rho,
            disc,
            ops,
            system,
            green: green.clone(),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn inclusion(&self) -> &PlacedInclusion {
        &self.inclusion
    }

    pub fn condition(&self) -> f64 {
        self.system.condition
    }

    pub fn solve(&self, j: usize) -> Result<TransmissionSolution> {
        check_direction(j)?;
        let n = self.disc.len();
        let (lp, lm) = (self.phases.lambda_plus, self.phases.lambda_minus);
        let jump_scale = 1.0f64.max(1.0 / self.rho);
        let len = self.disc.length();
        let mut rhs = DVector::zeros(2 * n + 3);
        for i in 0..n {
            let nu = self.disc.normals[i][j];
            rhs[i] = (lp - lm) * nu;
            rhs[n + i] = -lp * nu / jump_scale;
        }
        rhs[2 * n + 2] = -self.disc.nodes.iter().zip(&self.disc.weights).map(|(x, w)| x[j] * w).sum::<f64>() / len;
        let sol = self.system.solve(rhs)?;

        let mu_plus: Vec<f64> = sol.rows(0, n).iter().copied().collect();
        let mu_minus: Vec<f64> = sol.rows(n, n).iter().copied().collect();
        let (c_plus, c_minus, tau) = (sol[2 * n], sol[2 * n + 1], sol[2 * n + 2]);

        let carrier: Vec<f64> = self.disc.nodes.iter().map(|x| x[j]).collect();
        let nu_j: Vec<f64> = self.disc.normals.iter().map(|nu| nu[j]).collect();
        let piece = |mu: Vec<f64>, c: f64, side: Side| -> Result<FieldPiece> {
            let s = mat_vec(&self.ops.nodes.single, &mu);
            let dn = mat_vec(&one_sided(&self.ops.nodes, side), &mu);
            Ok(FieldPiece {
                trace: s.iter().zip(&carrier).map(|(s, x)| x + s + c).collect(),
                flux: dn.iter().zip(&nu_j).map(|(d, nu)| nu + d).collect(),
                density: LayerDensity::new(mu, &self.disc)?,
                constant: c,
            })
        };
        let interior = piece(mu_plus, c_plus, Side::Interior)?;
        let exterior = piece(mu_minus, c_minus, Side::Exterior)?;

        // midpoint checkpoints
        let mids = &self.ops.mid_disc;
        let mid_field = |p: &FieldPiece, side: Side| -> (Vec<f64>, Vec<f64>) {
            let s = mat_vec(&self.ops.mids.single, p.density.values());
            let dn = mat_vec(&one_sided(&self.ops.mids, side), p.density.values());
            let u = s.iter().zip(&mids.nodes).map(|(s, x)| x[j] + s + p.constant).collect();
            let f = dn.iter().zip(&mids.normals).map(|(d, nu)| nu[j] + d).collect();
            (u, f)
        };
        let (u_in, f_in) = mid_field(&interior, Side::Interior);
        let (u_out, f_out) = mid_field(&exterior, Side::Exterior);
        let residuals = BoundaryResiduals {
            flux: max_abs((0..n).map(|i| lm * f_out[i] - lp * f_in[i])),
            jump: max_abs((0..n).map(|i| lp * f_in[i] - (u_out[i] - u_in[i]) / self.rho)),
            jump_scale,
            normalization: self.disc.integrate(&interior.trace).abs(),
            side_constraint: self
                .disc
                .integrate(interior.density.values())
                .abs()
                .max(self.disc.integrate(exterior.density.values()).abs()),
            multiplier: tau.abs(),
            condition: self.system.condition,
        };

        Ok(TransmissionSolution {
            problem: ProblemKind::PeriodicCell,
            direction: j,
            kernel: KernelKind::Periodic,
            disc: self.disc.clone(),
            green: self.green.clone(),
            interior: Some(interior),
            exterior,
            residuals,
        })
    }
}

/// Solves the periodic cell problem for direction `j` (zero-based).
pub fn solve_cell_problem(
    inclusion: &PlacedInclusion,
    phases: &PhaseParameters,
    j: usize,
    n: usize,
    green: &PeriodicGreenConfig,
) -> Result<TransmissionSolution> {
    CellProblem::assemble(inclusion, phases, n, green)?.solve(j)
}

/// Assembled limiting transmission problem on the reference shape.
pub struct LimitProblem {
    lambda_plus: f64,
    lambda_minus: f64,
    r_star: f64,
    disc: BoundaryDiscretization,
    ops: Operators,
    system: FactoredSystem,
    green: PeriodicGreenConfig,
}

impl LimitProblem {
    pub fn assemble(shape: ShapeSpec, phases: &PhaseParameters, r_star: f64, n: usize) -> Result<Self> {
        if !(r_star.is_finite() && r_star >= 0.0) {
            return Err(Error::Parameter(format!("r★ must be finite and non-negative, got {r_star}")));
        }
        let green = PeriodicGreenConfig::default();
        let disc = discretize(shape, n)?;
        let ops = Operators::new(&disc, KernelKind::Free, &green)?;
        let (lp, lm) = (phases.lambda_plus, phases.lambda_minus);
        let scale_b = 1.0f64.max(r_star);
        let dim = 2 * n + 4;
        let (c_plus, c_minus, tau_a, tau_b) = (2 * n, 2 * n + 1, 2 * n + 2, 2 * n + 3);
        let len = disc.length();
        let mut a = DMatrix::zeros(dim, dim);

        let dn_in = one_sided(&ops.nodes, Side::Interior);
        let dn_out = one_sided(&ops.nodes, Side::Exterior);
        // λ⁻∂νũ⁻ − λ⁺∂νũ⁺ = (λ⁺ − λ⁻)νⱼ
        copy_block(&mut a, 0, n, &dn_out, lm);
        copy_block(&mut a, 0, 0, &dn_in, -lp);
        // λ⁺∂νũ⁺ − r★(ũ⁻ − ũ⁺) = −λ⁺νⱼ
        copy_block(&mut a, n, 0, &dn_in, lp / scale_b);
        copy_block(&mut a, n, n, &ops.nodes.single, -r_star / scale_b);
        copy_block(&mut a, n, 0, &ops.nodes.single, r_star / scale_b);
        for i in 0..n {
            a[(i, tau_a)] = 1.0;
            a[(n + i, tau_b)] = 1.0;
            a[(n + i, c_minus)] = -r_star / scale_b;
            a[(n + i, c_plus)] = r_star / scale_b;
        }
        for k in 0..n {
            let w = disc.weights[k] / len;
            a[(2 * n, k)] = w;
            a[(2 * n + 1, n + k)] = w;
            for col in 0..n {
                a[(2 * n + 2, col)] += w * ops.nodes.single[(k, col)];
                a[(2 * n + 3, n + col)] += w * ops.nodes.single[(k, col)];
            }
        }
        a[(2 * n + 2, c_plus)] = 1.0;
        a[(2 * n + 3, c_minus)] = 1.0;

        let system = FactoredSystem::new(a)?;
        Ok(LimitProblem { lambda_plus: lp, lambda_minus: lm, r_star, disc, ops, system, green })
    }

    pub fn solve(&self, j: usize) -> Result<TransmissionSolution> {
        check_direction(j)?;
        let n = self.disc.len();
        let (lp, lm) = (self.lambda_plus, self.lambda_minus);
        let scale_b = 1.0f64.max(self.r_star);
        let mut rhs = DVector::zeros(2 * n + 4);
        for i in 0..n {
            let nu = self.disc.normals[i][j];
            rhs[i] = (lp - lm) * nu;
            rhs[n + i] = -lp * nu / scale_b;
        }
        let sol = self.system.solve(rhs)?;
        let mu_plus: Vec<f64> = sol.rows(0, n).iter().copied().collect();
        let mu_minus: Vec<f64> = sol.rows(n, n).iter().copied().collect();
        let (c_plus, c_minus) = (sol[2 * n], sol[2 * n + 1]);
        let multiplier = sol[2 * n + 2].abs().max(sol[2 * n + 3].abs());

        let interior = free_piece(&self.ops.nodes, &self.disc, mu_plus, c_plus, Side::Interior)?;
        let exterior = free_piece(&self.ops.nodes, &self.disc, mu_minus, c_minus, Side::Exterior)?;

        let (u_in, f_in) = free_mid_field(&self.ops.mids, &interior, Side::Interior);
        let (u_out, f_out) = free_mid_field(&self.ops.mids, &exterior, Side::Exterior);
        let nu_mid: Vec<f64> = self.ops.mid_disc.normals.iter().map(|nu| nu[j]).collect();
        let residuals = BoundaryResiduals {
            flux: max_abs((0..n).map(|i| lm * f_out[i] - lp * f_in[i] - (lp - lm) * nu_mid[i])),
            jump: max_abs((0..n).map(|i| lp * f_in[i] - self.r_star * (u_out[i] - u_in[i]) + lp * nu_mid[i])),
            jump_scale: 1.0,
            normalization: self
                .disc
                .integrate(&interior.trace)
                .abs()
                .max(self.disc.integrate(&exterior.trace).abs()),
            side_constraint: self
                .disc
                .integrate(interior.density.values())
                .abs()
                .max(self.disc.integrate(exterior.density.values()).abs()),
            multiplier,
            condition: self.system.condition,
        };
        Ok(TransmissionSolution {
            problem: ProblemKind::Limit,
            direction: j,
            kernel: KernelKind::Free,
            disc: self.disc.clone(),
            green: self.green.clone(),
            interior: Some(interior),
            exterior,
            residuals,
        })
    }
}

fn free_piece(
    ops: &LayerMatrices,
    disc: &BoundaryDiscretization,
    mu: Vec<f64>,
    c: f64,
    side: Side,
) -> Result<FieldPiece> {
    let s = mat_vec(&ops.single, &mu);
    let flux = mat_vec(&one_sided(ops, side), &mu);
    Ok(FieldPiece {
        trace: s.iter().map(|s| s + c).collect(),
        flux,
        density: LayerDensity::new(mu, disc)?,
        constant: c,
    })
}

fn free_mid_field(ops: &LayerMatrices, p: &FieldPiece, side: Side) -> (Vec<f64>, Vec<f64>) {
    let s = mat_vec(&ops.single, p.density.values());
    let u = s.iter().map(|s| s + p.constant).collect();
    (u, mat_vec(&one_sided(ops, side), p.density.values()))
}

/// Solves the limiting transmission problem on the unscaled shape.
pub fn solve_limit_problem(
    shape: ShapeSpec,
    phases: &PhaseParameters,
    r_star: f64,
    j: usize,
    n: usize,
) -> Result<TransmissionSolution> {
    LimitProblem::assemble(shape, phases, r_star, n)?.solve(j)
}

/// Assembled exterior Neumann problem `∂νṽ = −νⱼ` on the reference shape.
pub struct ExteriorNeumannProblem {
    disc: BoundaryDiscretization,
    ops: Operators,
    system: FactoredSystem,
    green: PeriodicGreenConfig,
}

impl ExteriorNeumannProblem {
    pub fn assemble(shape: ShapeSpec, n: usize) -> Result<Self> {
        let green = PeriodicGreenConfig::default();
        let disc = discretize(shape, n)?;
        let ops = Operators::new(&disc, KernelKind::Free, &green)?;
        let len = disc.length();
        let mut a = DMatrix::zeros(n + 2, n + 2);
        copy_block(&mut a, 0, 0, &one_sided(&ops.nodes, Side::Exterior), 1.0);
        for i in 0..n {
            a[(i, n + 1)] = 1.0;
        }
        for k in 0..n {
            let w = disc.weights[k] / len;
            a[(n, k)] = w;
            for col in 0..n {
                a[(n + 1, col)] += w * ops.nodes.single[(k, col)];
            }
        }
        a[(n + 1, n)] = 1.0;
        let system = FactoredSystem::new(a)?;
        Ok(ExteriorNeumannProblem { disc, ops, system, green })
    }

    pub fn solve(&self, j: usize) -> Result<TransmissionSolution> {
        check_direction(j)?;
        let n = self.disc.len();
        let mut rhs = DVector::zeros(n + 2);
        for i in 0..n {
            rhs[i] = -self.disc.normals[i][j];
        }
        let sol = self.system.solve(rhs)?;
        let mu: Vec<f64> = sol.rows(0, n).iter().copied().collect();
        let exterior = free_piece(&self.ops.nodes, &self.disc, mu, sol[n], Side::Exterior)?;
        let (_, f_out) = free_mid_field(&self.ops.mids, &exterior, Side::Exterior);
        let residuals = BoundaryResiduals {
            flux: max_abs((0..n).map(|i| f_out[i] + self.ops.mid_disc.normals[i][j])),
            jump: 0.0,
            jump_scale: 1.0,
            normalization: self.disc.integrate(&exterior.trace).abs(),
            side_constraint: self.disc.integrate(exterior.density.values()).abs(),
            multiplier: sol[n + 1].abs(),
            condition: self.system.condition,
        };
        Ok(TransmissionSolution {
            problem: ProblemKind::ExteriorNeumann,
            direction: j,
            kernel: KernelKind::Free,
            disc: self.disc.clone(),
            green: self.green.clone(),
            interior: None,
            exterior,
            residuals,
        })
    }
}

pub fn solve_exterior_neumann(shape: ShapeSpec, j: usize, n: usize) -> Result<TransmissionSolution> {
    ExteriorNeumannProblem::assemble(shape, n)?.solve(j)
}
