// Shrinks a disk inclusion with ρ(ε) = ε and extrapolates the scaled
// coefficient Λ̂(ε) = (λ^eff − λ⁻I)/ε² to ε = 0.

use kapitza_cell::effective::sweep_and_extrapolate;
use kapitza_cell::geometry::{Point, ShapeSpec};
use kapitza_cell::greens::PeriodicGreenConfig;
use kapitza_cell::transmission::{PhaseParameters, RhoModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let phases = PhaseParameters::new(1.0, 1.0, RhoModel::Linear { r_star: 1.0 })?;
    let sweep = sweep_and_extrapolate(
        ShapeSpec::unit_disk(),
        Point::new(0.5, 0.5),
        &phases,
        &[0.2, 0.1, 0.05, 0.025],
        128,
        &PeriodicGreenConfig::default(),
    )?;
    println!("{:>8} {:>20} {:>20}", "ε", "λ^eff₁₁", "Λ̂₁₁");
    for e in &sweep.entries {
        println!("{:>8} {:>20.14} {:>20.14}", e.eps, e.lambda_eff[0][0], e.lambda_hat[0][0]);
    }
    println!("extrapolated Λ₁₁      = {:.10}", sweep.extrapolated[0][0]);
    println!("Λ₁₁[0, {}] (limit)     = {:.10}", sweep.r_star, sweep.reference[0][0]);
    println!("relative deviation    = {:.2e}", sweep.relative_deviation[0][0]);
    println!("log-log slope         = {:.4}", sweep.loglog_slope);
    println!("empirical orders      = {:?}", sweep.empirical_order);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("epsilon_sweep example failed");
}
