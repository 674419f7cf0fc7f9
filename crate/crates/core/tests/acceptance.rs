// Acceptance gate. Runs without the libtest harness so that every criterion
// prints its PASS/FAIL line. The volume-quadrature criterion (8) is part of
// the extended suite:
//
//     cargo test --test acceptance -- --include-ignored
//
// or KAPITZA_CELL_EXTENDED=1.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use kapitza_cell::effective::{effective_matrix, limit_lambda, limit_lambda_r0, sweep_and_extrapolate, Mat2};
use kapitza_cell::geometry::{PlacedInclusion, Point, ShapeSpec};
use kapitza_cell::greens::{periodic_green, PeriodicGreenConfig};
use kapitza_cell::potentials::Side;
use kapitza_cell::transmission::{
    evaluate_solution, solve_exterior_neumann, CellProblem, PhaseParameters, RhoModel, SolutionEvaluator,
    TransmissionSolution,
};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

struct Gate {
    failed: Vec<&'static str>,
}

impl Gate {
    fn run(&mut self, id: &'static str, title: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("[{verdict}] {id} {title}: {detail} ({:.2} s)", start.elapsed().as_secs_f64());
        if !ok {
            self.failed.push(id);
        }
    }

    fn skip(&self, id: &str, title: &str, why: &str) {
        println!("[SKIP] {id} {title}: {why}");
    }
}

fn phases(lp: f64, lm: f64, rho: RhoModel) -> PhaseParameters {
    PhaseParameters::new(lp, lm, rho).expect("valid phases")
}

fn max_entry_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for k in 0..2 {
        for j in 0..2 {
            m = m.max((a[k][j] - b[k][j]).abs());
        }
    }
    m
}

fn within_time(start: Instant, budget: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t < budget, format!("runtime {:.2} s < {} s", t.as_secs_f64(), budget.as_secs()))
}

// Λ[0, r★] for the unit disk, n = 2, from the ansatz ũ⁺ = A xⱼ,
// ũ⁻ = B xⱼ/|x|², eliminated by hand:
// B = (λ⁺² − (λ⁺ − λ⁻)(λ⁺ + r)) / (λ⁻(λ⁺ + r) + λ⁺ r), A = (rB − λ⁺)/(λ⁺ + r).
fn disk_lambda_by_hand(lp: f64, lm: f64, r: f64) -> f64 {
    let b = (lp * lp - (lp - lm) * (lp + r)) / (lm * (lp + r) + lp * r);
    let a = (r * b - lp) / (lp + r);
    PI * (lp * a - lm * b + lp - lm)
}

fn c1() -> Outcome {
    let start = Instant::now();
    let lam = limit_lambda(ShapeSpec::unit_disk(), &phases(1.0, 1.0, RhoModel::Constant { rho0: 1.0 }), 0.0, 256)?;
    let (fast, time) = within_time(start, Duration::from_secs(1));
    let want = -2.0 * PI;
    let diag = ((lam[0][0] - want) / want).abs().max(((lam[1][1] - want) / want).abs());
    let off = lam[0][1].abs().max(lam[1][0].abs());
    Ok((
        diag < 1e-8 && off < 1e-10 && fast,
        format!("Λ₁₁ = {:.12}, diagonal rel err {diag:.2e} (< 1e-8), |off-diagonal| {off:.2e} (< 1e-10), {time}", lam[0][0]),
    ))
}

fn c2() -> Outcome {
    let sol = solve_exterior_neumann(ShapeSpec::unit_disk(), 0, 128)?;
    let v = evaluate_solution(&sol, &[Point::new(2.0, 0.0)], Side::Exterior)?[0].value;
    let err = (v - 0.5).abs();
    Ok((err < 1e-10, format!("ṽ₁(2, 0) = {v:.14}, error {err:.2e} (< 1e-10)")))
}

fn c3() -> Outcome {
    let ph = phases(3.0, 1.0, RhoModel::Constant { rho0: 1.0 });
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for shape in [
        ShapeSpec::unit_disk(),
        ShapeSpec::Ellipse { a: 2.0, b: 1.0 },
        ShapeSpec::Star { amplitude: 0.1, waves: 4 },
    ] {
        let d = max_entry_diff(&limit_lambda(shape, &ph, 0.0, 256)?, &limit_lambda_r0(shape, &ph, 256)?);
        parts.push(format!("{} {d:.1e}", shape.kind_name()));
        worst = worst.max(d);
    }
    Ok((worst < 1e-9, format!("max |Δ| {worst:.2e} (< 1e-9): {}", parts.join(", "))))
}

fn c4() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut hand_point = f64::NAN;
    for ratio in [0.1, 1.0, 10.0] {
        let ph = phases(ratio, 1.0, RhoModel::Linear { r_star: 1.0 });
        for r in [0.0, 0.5, 1.0, 10.0] {
            let lam = limit_lambda(ShapeSpec::unit_disk(), &ph, r, 256)?;
            let want = disk_lambda_by_hand(ratio, 1.0, r);
            let library = kapitza_cell::oracles::disk_limit_lambda_general(ratio, 1.0, r, 2)?.lambda_scalar;
            worst = worst
                .max(((lam[0][0] - want) / want).abs())
                .max(((lam[1][1] - want) / want).abs())
                .max(((library - want) / want).abs());
            if ratio == 1.0 && r == 1.0 {
                hand_point = lam[0][0];
            }
        }
    }
    let anchor = ((hand_point + 2.0 * PI / 3.0) / (2.0 * PI / 3.0)).abs();
    Ok((
        worst < 1e-8 && anchor < 1e-8,
        format!("12 cases, max rel err {worst:.2e} (< 1e-8); λ⁺ = λ⁻ = 1, r★ = 1: Λ₁₁ = {hand_point:.12} vs −2π/3"),
    ))
}

const SWEEP_EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

fn c5() -> Outcome {
    let start = Instant::now();
    let ph = phases(1.0, 1.0, RhoModel::Linear { r_star: 1.0 });
    let s = sweep_and_extrapolate(
        ShapeSpec::unit_disk(),
        Point::new(0.5, 0.5),
        &ph,
        &SWEEP_EPS,
        256,
        &PeriodicGreenConfig::default(),
    )?;
    let (fast, time) = within_time(start, Duration::from_secs(60));
    // slope from the raw data, not the library's fit
    let pts: Vec<(f64, f64)> = s.entries.iter().map(|e| (e.eps.ln(), (e.lambda_eff[0][0] - 1.0).abs().ln())).collect();
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / 4.0,
        pts.iter().map(|p| p.1).sum::<f64>() / 4.0,
    );
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let (e1, e2) = (s.entries[2].eps, s.entries[3].eps);
    let (h1, h2) = (s.entries[2].lambda_hat[0][0], s.entries[3].lambda_hat[0][0]);
    let extrapolated = (e1 * h2 - e2 * h1) / (e1 - e2);
    let want = -2.0 * PI / 3.0;
    let rel = ((extrapolated - want) / want).abs();
    Ok((
        (slope - 2.0).abs() <= 0.1 && rel < 0.01 && fast,
        format!(
            "(a) slope {slope:.4} (2 ± 0.1); (b) extrapolated Λ̂₁₁ {extrapolated:.8} vs −2π/3, rel {rel:.2e} (< 1e-2); {time}"
        ),
    ))
}

fn c6() -> Outcome {
    let ph = phases(1.0, 1.0, RhoModel::Constant { rho0: 1.0 });
    let s = sweep_and_extrapolate(
        ShapeSpec::unit_disk(),
        Point::new(0.5, 0.5),
        &ph,
        &SWEEP_EPS,
        256,
        &PeriodicGreenConfig::default(),
    )?;
    let (e1, e2) = (s.entries[2].eps, s.entries[3].eps);
    let (h1, h2) = (s.entries[2].lambda_hat[0][0], s.entries[3].lambda_hat[0][0]);
    let extrapolated = (e1 * h2 - e2 * h1) / (e1 - e2);
    let want = -2.0 * PI;
    let rel = ((extrapolated - want) / want).abs();
    Ok((rel < 0.01, format!("extrapolated Λ̂₁₁ {extrapolated:.8} vs −2π, rel {rel:.2e} (< 1e-2)")))
}

fn c7() -> Outcome {
    let cfg = PeriodicGreenConfig::default();
    let samples = [Point::new(0.3, 0.4), Point::new(0.5, 0.5), Point::new(0.11, 0.83), Point::new(0.9, 0.05)];
    let mut periodic: f64 = 0.0;
    for x in samples {
        let g = periodic_green(x, &cfg)?.value;
        for z in [Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0)] {
            periodic = periodic.max((periodic_green(x + z, &cfg)?.value - g).abs());
        }
    }
    let (c2, c3) = (PeriodicGreenConfig::new(2.0, 1e-13)?, PeriodicGreenConfig::new(3.0, 1e-13)?);
    let mut split: f64 = 0.0;
    for x in samples {
        split = split.max((periodic_green(x, &c2)?.value - periodic_green(x, &c3)?.value).abs());
    }
    let fd_error = |h: f64| -> Result<f64, Box<dyn std::error::Error>> {
        let mut m: f64 = 0.0;
        for x in samples {
            let g = periodic_green(x, &cfg)?;
            for (axis, e) in [Point::new(h, 0.0), Point::new(0.0, h)].into_iter().enumerate() {
                let d = (periodic_green(x + e, &cfg)?.value - periodic_green(x - e, &cfg)?.value) / (2.0 * h);
                m = m.max((d - g.gradient[axis]).abs());
            }
        }
        Ok(m)
    };
    let order = (fd_error(2e-2)? / fd_error(1e-2)?).log2();
    Ok((
        periodic < 1e-12 && split < 1e-10 && order >= 1.9,
        format!("periodicity {periodic:.1e} (< 1e-12), η = 2 vs 3 {split:.1e} (< 1e-10), finite-difference order {order:.3} (≥ 1.9)"),
    ))
}

// Direct midpoint quadrature of
//   λ^eff_kj = λ⁺∫_Ω ∂ₖu⁺ⱼ + λ⁻∫_{Q∖Ω} ∂ₖu⁻ⱼ
// on a 400 × 400 grid. Cells too close to the interface for the refined
// evaluator are dropped and their possible contribution bounded.
fn c8() -> Outcome {
    const M: usize = 400;
    let start = Instant::now();
    let inc = PlacedInclusion::new(ShapeSpec::Ellipse { a: 1.0, b: 0.7 }, Point::new(0.47, 0.52), 0.2)?;
    let ph = phases(3.0, 1.0, RhoModel::Linear { r_star: 2.0 });
    let green = PeriodicGreenConfig::new(4.0, 1e-13)?;
    let problem = CellProblem::assemble(&inc, &ph, 256, &green)?;
    let sols: Vec<TransmissionSolution> = vec![problem.solve(0)?, problem.solve(1)?];
    let boundary = effective_matrix(&sols, &inc, &ph)?.lambda_eff;

    let h = 1.0 / M as f64;
    let mut volume = [[0.0; 2]; 2];
    let mut dropped = 0usize;
    let mut max_flux: f64 = 0.0;
    for (j, sol) in sols.iter().enumerate() {
        let eval = SolutionEvaluator::new(sol, true)?;
        let rows: Vec<(Point, usize, f64)> = {
            use rayon::prelude::*;
            (0..M)
                .into_par_iter()
                .map(|row| {
                    let mut acc = Point::zeros();
                    let mut skipped = 0;
                    let mut peak: f64 = 0.0;
                    for col in 0..M {
                        let x = Point::new((col as f64 + 0.5) * h, (row as f64 + 0.5) * h);
                        match eval.evaluate_refined(x).expect("off-boundary grid point") {
                            Some((side, g)) => {
                                let lam = if side == Side::Interior { ph.lambda_plus } else { ph.lambda_minus };
                                acc += g.gradient * (lam * h * h);
                                peak = peak.max(lam * g.gradient.norm());
                            }
                            None => skipped += 1,
                        }
                    }
                    (acc, skipped, peak)
                })
                .collect()
        };
        for (acc, skipped, peak) in rows {
            for (k, row) in volume.iter_mut().enumerate() {
                row[j] += acc[k];
            }
            dropped += skipped;
            max_flux = max_flux.max(peak);
        }
    }
    let bound = dropped as f64 * h * h * max_flux;
    let diff = max_entry_diff(&boundary, &volume);
    let (fast, time) = within_time(start, Duration::from_secs(300));
    Ok((
        diff < 1e-3 && fast,
        format!(
            "max |boundary − volume| {diff:.2e} (< 1e-3), λ^eff₁₁ {:.8} vs {:.8}, {dropped} cells dropped (bound {bound:.1e}); {time}",
            boundary[0][0], volume[0][0]
        ),
    ))
}

fn c9() -> Outcome {
    let (m, w, eps) = (0.2, 3, 0.3);
    let inc = PlacedInclusion::new(ShapeSpec::Star { amplitude: m, waves: w }, Point::new(0.4, 0.55), eps)?;
    let (lp, lm) = (2.5, 0.7);
    let ph = phases(lp, lm, RhoModel::Constant { rho0: 1.0 });
    let green = PeriodicGreenConfig::default();
    let sols = [
        TransmissionSolution::carrier_only(&inc, 0, 128, &green)?,
        TransmissionSolution::carrier_only(&inc, 1, 128, &green)?,
    ];
    let r = effective_matrix(&sols, &inc, &ph)?;
    // area of r = 1 + m cos(wθ) is π(1 + m²/2)
    let area = PI * (1.0 + m * m / 2.0) * eps * eps;
    let want = [[lm + (lp - lm) * area, 0.0], [0.0, lm + (lp - lm) * area]];
    let err = max_entry_diff(&r.lambda_eff, &want);
    Ok((err < 1e-12, format!("max error {err:.2e} (< 1e-12) against λ⁻ + (λ⁺ − λ⁻)ε²|Ω|")))
}

fn main() {
    let extended = std::env::args().any(|a| a == "--ignored" || a == "--include-ignored")
        || std::env::var("KAPITZA_CELL_EXTENDED").is_ok_and(|v| v == "1");
    // honour libtest-style listing so `cargo test -- --list` keeps working
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }

    let mut gate = Gate { failed: Vec::new() };
    gate.run("C1", "ball constant, r★ = 0", c1);
    gate.run("C2", "exterior Neumann field", c2);
    gate.run("C3", "cross-formula identity at r★ = 0", c3);
    gate.run("C4", "general-r★ disk oracle", c4);
    gate.run("C5", "ε-sweep with ρ(ε) = ε", c5);
    gate.run("C6", "ε-sweep with constant ρ", c6);
    gate.run("C7", "periodic Green's function", c7);
    if extended {
        gate.run("C8", "boundary form vs volume quadrature", c8);
    } else {
        gate.skip("C8", "boundary form vs volume quadrature", "extended suite only (pass --include-ignored)");
    }
    gate.run("C9", "zero-density hook", c9);

    if gate.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: FAILED {:?}", gate.failed);
        std::process::exit(1);
    }
}
