//! `verify` and `greens-check` suites.

use std::f64::consts::PI;
use std::fmt;

use crate::effective::{effective_matrix, limit_lambda, limit_lambda_r0};
use crate::error::Result;
use crate::geometry::{PlacedInclusion, Point, ShapeSpec};
use crate::greens::{periodic_green, PeriodicGreenConfig};
use crate::oracles::{ball_limit_lambda, disk_limit_lambda_general, exterior_neumann_ball_field};
use crate::potentials::Side;
use crate::transmission::{evaluate_solution, solve_exterior_neumann, PhaseParameters, RhoModel, TransmissionSolution};

use super::RunConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    /// Measured error (or order, for `at_least` checks).
    pub value: f64,
    pub tolerance: f64,
    pub at_least: bool,
}

impl CheckOutcome {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckOutcome { name: name.into(), value, tolerance, at_least: false }
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.tolerance
        } else {
            self.value < self.tolerance
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (verdict, rel) = (if self.passed() { "PASS" } else { "FAIL" }, if self.at_least { ">=" } else { "<" });
        write!(f, "{verdict}  {}: {:.3e} (want {rel} {:.1e})", self.name, self.value, self.tolerance)
    }
}

fn rel(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

fn max_diff(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    (0..4).map(|i| (a[i / 2][i % 2] - b[i / 2][i % 2]).abs()).fold(0.0, f64::max)
}

/// Oracle suite on the configured phases and shape.
pub fn verify_suite(cfg: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let n = cfg.n;
    let ph = &cfg.phases;
    let (lp, lm) = (ph.lambda_plus, ph.lambda_minus);
    let disk = ShapeSpec::unit_disk();
    let mut out = Vec::new();

    let ball = ball_limit_lambda(2, lm)?;
    let got = limit_lambda(disk, ph, 0.0, n)?;
    out.push(CheckOutcome::below(
        format!("disk Λ[0,0] = {ball:.6} (−2π·λ⁻)"),
        rel(got[0][0], ball).max(rel(got[1][1], ball)).max(got[0][1].abs().max(got[1][0].abs()) / ball.abs()),
        1e-8,
    ));

    let ext = solve_exterior_neumann(disk, 0, 128)?;
    let v = evaluate_solution(&ext, &[Point::new(2.0, 0.0)], Side::Exterior)?[0].value;
    out.push(CheckOutcome::below(
        "exterior Neumann field at (2, 0)",
        (v - exterior_neumann_ball_field(&[2.0, 0.0], 0)?).abs(),
        1e-10,
    ));

    let a = limit_lambda(cfg.shape, ph, 0.0, n)?;
    let b = limit_lambda_r0(cfg.shape, ph, n)?;
    out.push(CheckOutcome::below(
        format!("{} limit formulas agree at r★ = 0", cfg.shape.kind_name()),
        max_diff(&a, &b),
        1e-9,
    ));

    let r_star = ph.r_star();
    let want = disk_limit_lambda_general(lp, lm, r_star, 2)?.lambda_scalar;
    let got = limit_lambda(disk, ph, r_star, n)?;
    out.push(CheckOutcome::below(
        format!("disk Λ[0,{r_star}] against the ansatz value {want:.6}"),
        rel(got[0][0], want).max(rel(got[1][1], want)),
        1e-8,
    ));

    let unit = PhaseParameters::new(1.0, 1.0, RhoModel::Linear { r_star: 1.0 })?;
    let got = limit_lambda(disk, &unit, 1.0, n)?;
    out.push(CheckOutcome::below("disk Λ[0,1] = −2π/3 at λ⁺ = λ⁻ = 1", rel(got[0][0], -2.0 * PI / 3.0), 1e-8));

    let eps = cfg.eps[0];
    let inc = PlacedInclusion::new(cfg.shape, cfg.center, eps)?;
    let green = PeriodicGreenConfig::default();
    let sols = [
        TransmissionSolution::carrier_only(&inc, 0, n, &green)?,
        TransmissionSolution::carrier_only(&inc, 1, n, &green)?,
    ];
    let r = effective_matrix(&sols, &inc, ph)?;
    let area = inc.area(n)?;
    let mut err: f64 = 0.0;
    for k in 0..2 {
        for j in 0..2 {
            let want = if k == j { lm + (lp - lm) * area } else { 0.0 };
            err = err.max((r.lambda_eff[k][j] - want).abs());
        }
    }
    out.push(CheckOutcome::below("zero-density field gives the arithmetic mean", err, 1e-12));
    Ok(out)
}

const SAMPLES: [[f64; 2]; 5] = [[0.3, 0.1], [0.7, 0.45], [0.05, 0.9], [0.5, 0.5], [0.21, 0.77]];

/// Periodicity, split invariance and gradient consistency of the periodic
/// Green's function under the given (possibly under-resolved) settings.
pub fn greens_suite(green: &PeriodicGreenConfig) -> Result<Vec<CheckOutcome>> {
    let reference = PeriodicGreenConfig::new(green.ewald_split + 1.0, 1e-14)?;
    let (mut periodic, mut invariant) = (0.0f64, 0.0f64);
    let mut fd = [0.0f64; 2];
    for p in SAMPLES {
        let x = Point::new(p[0], p[1]);
        let g = periodic_green(x, green)?;
        for shift in [Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(-1.0, 2.0)] {
            periodic = periodic.max((periodic_green(x + shift, green)?.value - g.value).abs());
        }
        invariant = invariant.max((periodic_green(x, &reference)?.value - g.value).abs());
        for (slot, h) in fd.iter_mut().zip([2e-2, 1e-2]) {
            for (axis, e) in [Point::new(h, 0.0), Point::new(0.0, h)].into_iter().enumerate() {
                let d = (periodic_green(x + e, green)?.value - periodic_green(x - e, green)?.value) / (2.0 * h);
                *slot = slot.max((d - g.gradient[axis]).abs());
            }
        }
    }
    let order = (fd[0] / fd[1]).log2();
    Ok(vec![
        CheckOutcome::below("periodicity", periodic, 1e-12),
        CheckOutcome::below(
            format!("split invariance η = {} vs {}", green.ewald_split, reference.ewald_split),
            invariant,
            1e-10,
        ),
        CheckOutcome { name: "gradient finite-difference order".into(), value: order, tolerance: 1.9, at_least: true },
    ])
}
