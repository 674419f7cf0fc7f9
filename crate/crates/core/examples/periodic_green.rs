// Evaluates the square-lattice Green's function and shows that the Ewald
// split parameter only changes how the sum is organised, not its value.

use kapitza_cell::geometry::Point;
use kapitza_cell::greens::{free_green, periodic_green, regularized_periodic_green, PeriodicGreenConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let x = Point::new(0.5, 0.5);
    let mut values = Vec::new();
    for eta in [2.0, 2.5, 3.0] {
        let cfg = PeriodicGreenConfig::new(eta, 1e-13)?;
        let g = periodic_green(x, &cfg)?;
        println!(
            "η = {eta}: R = {:.2}, K = {:.2}, {} modes, G(0.5, 0.5) = {:.15}",
            cfg.real_cutoff,
            cfg.fourier_cutoff,
            cfg.mode_count(),
            g.value
        );
        values.push(g.value);
    }
    let spread = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - values.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    println!("spread over η: {spread:.2e}");
    assert!(spread < 1e-10);

    let cfg = PeriodicGreenConfig::default();
    let y = Point::new(0.2, 0.1);
    let shifted = periodic_green(y + Point::new(1.0, -3.0), &cfg)?;
    println!("G(y + (1, -3)) - G(y) = {:.2e}", shifted.value - periodic_green(y, &cfg)?.value);

    // the smooth remainder is what the Nyström kernel split integrates by the trapezoid rule
    let reg = regularized_periodic_green(y, &cfg);
    let full = periodic_green(y, &cfg)?;
    println!(
        "G_per - log part = {:.15}, regularized = {:.15}",
        full.value - free_green(y)?.value,
        reg.value
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("periodic_green example failed");
}
