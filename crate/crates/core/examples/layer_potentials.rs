// Single-layer potential of a constant density on the unit circle and its
// one-sided normal derivatives.

use kapitza_cell::geometry::{discretize, Point, ShapeSpec};
use kapitza_cell::greens::PeriodicGreenConfig;
use kapitza_cell::potentials::{evaluate_potential, normal_derivative_matrix, KernelKind, LayerDensity, Side};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PeriodicGreenConfig::default();
    let disc = discretize(ShapeSpec::unit_disk(), 64)?;
    let mu = LayerDensity::new(vec![1.0; disc.len()], &disc)?;

    // S[1](x) = log|x| outside the unit circle and 0 inside
    let far = evaluate_potential(&mu, &disc, &[Point::new(3.0, 0.0), Point::new(0.2, 0.1)], KernelKind::Free, &cfg)?;
    println!("S[1](3, 0) = {:.12} (log 3 = {:.12})", far[0].value, 3f64.ln());
    println!("S[1](0.2, 0.1) = {:.2e}", far[1].value);

    for side in [Side::Exterior, Side::Interior] {
        let op = normal_derivative_matrix(&disc, KernelKind::Free, side, &cfg)?;
        let dn = op.apply(&mu);
        let worst = dn.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("{side:?} normal derivative: first node {:.12}, max |value| {worst:.12}", dn[0]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("layer_potentials example failed");
}
