// Solves the periodic cell problem for a star-shaped inclusion with
// imperfect contact, samples the temperature field and reports λ^eff.

use kapitza_cell::effective::effective_matrix;
use kapitza_cell::geometry::{PlacedInclusion, Point, ShapeSpec};
use kapitza_cell::greens::PeriodicGreenConfig;
use kapitza_cell::potentials::Side;
use kapitza_cell::transmission::{evaluate_solution, CellProblem, PhaseParameters, RhoModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let shape = ShapeSpec::Star { amplitude: 0.15, waves: 5 };
    let inc = PlacedInclusion::new(shape, Point::new(0.45, 0.55), 0.25)?;
    let phases = PhaseParameters::new(5.0, 1.0, RhoModel::Linear { r_star: 2.0 })?;
    let green = PeriodicGreenConfig::default();

    let problem = CellProblem::assemble(&inc, &phases, 192, &green)?;
    println!("ρ(ε) = {}, condition ≈ {:.2e}", problem.rho(), problem.condition());
    let solutions = [problem.solve(0)?, problem.solve(1)?];
    for sol in &solutions {
        let r = sol.residuals;
        println!(
            "j = {}: flux residual {:.1e}, jump residual {:.1e}, multiplier {:.1e}",
            sol.direction + 1,
            r.flux,
            r.jump,
            r.multiplier
        );
    }

    let inside = evaluate_solution(&solutions[0], &[Point::new(0.45, 0.55)], Side::Interior)?;
    let outside = evaluate_solution(&solutions[0], &[Point::new(0.05, 0.1), Point::new(1.05, 0.1)], Side::Exterior)?;
    println!("u⁺₁ at the centre: {:.10}", inside[0].value);
    println!("u⁻₁(1.05, 0.1) − u⁻₁(0.05, 0.1) = {:.12}", outside[1].value - outside[0].value);

    let eff = effective_matrix(&solutions, &inc, &phases)?;
    println!("λ^eff = {:?}", eff.lambda_eff);
    println!("Λ̂(ε) = {:?}", eff.lambda_hat);
    println!("|λ^eff₁₂ − λ^eff₂₁| = {:.1e}", eff.symmetry_defect);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("cell_problem example failed");
}
