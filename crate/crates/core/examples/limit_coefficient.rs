// The limit coefficient Λ[0, r★] from the free-space transmission problem,
// checked against the closed form for the disk and compared with the
// exterior Neumann formula for other shapes.

use std::f64::consts::PI;

use kapitza_cell::effective::{limit_lambda, limit_lambda_r0};
use kapitza_cell::geometry::ShapeSpec;
use kapitza_cell::oracles::{ball_limit_lambda, disk_limit_lambda_general};
use kapitza_cell::transmission::{PhaseParameters, RhoModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 256;
    let disk = ShapeSpec::unit_disk();

    let phases = PhaseParameters::new(1.0, 1.0, RhoModel::Linear { r_star: 1.0 })?;
    println!("disk, λ⁺ = λ⁻ = 1");
    for r_star in [0.0, 0.5, 1.0, 10.0] {
        let got = limit_lambda(disk, &phases, r_star, n)?;
        let want = disk_limit_lambda_general(1.0, 1.0, r_star, 2)?.lambda_scalar;
        println!("  r★ = {r_star:>4}: Λ₁₁ = {:+.12}  closed form {:+.12}", got[0][0], want);
    }
    println!("  −2π = {:+.12}, −2π/3 = {:+.12}", ball_limit_lambda(2, 1.0)?, -2.0 * PI / 3.0);

    let phases = PhaseParameters::new(4.0, 1.0, RhoModel::Constant { rho0: 1.0 })?;
    for shape in [ShapeSpec::Ellipse { a: 2.0, b: 1.0 }, ShapeSpec::Star { amplitude: 0.1, waves: 4 }] {
        let a = limit_lambda(shape, &phases, 0.0, n)?;
        let b = limit_lambda_r0(shape, &phases, n)?;
        println!("{} (r★ = 0)", shape.kind_name());
        println!("  transmission:      {:?}", a);
        println!("  exterior Neumann:  {:?}", b);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("limit_coefficient example failed");
}
