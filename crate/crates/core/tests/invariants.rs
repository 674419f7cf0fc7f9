use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use kapitza_cell::cli_io::parse_config;
use kapitza_cell::effective::{effective_matrix, limit_lambda, richardson, solve_effective};
use kapitza_cell::geometry::{PlacedInclusion, Point, ShapeSpec};
use kapitza_cell::greens::{periodic_green, regularized_periodic_green, PeriodicGreenConfig};
use kapitza_cell::oracles::disk_limit_lambda_general;
use kapitza_cell::potentials::Side;
use kapitza_cell::transmission::{
    evaluate_solution, solve_cell_problem, solve_limit_problem, PhaseParameters, RhoModel, TransmissionSolution,
};

fn phases(lp: f64, lm: f64, rho: RhoModel) -> PhaseParameters {
    PhaseParameters::new(lp, lm, rho).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn green_is_periodic_and_even(x in 0.01f64..0.99, y in 0.01f64..0.99, i in -2i32..3, k in -2i32..3) {
        let cfg = PeriodicGreenConfig::default();
        let p = Point::new(x, y);
        let g = periodic_green(p, &cfg).unwrap().value;
        let shifted = periodic_green(p + Point::new(i as f64, k as f64), &cfg).unwrap().value;
        prop_assert!((shifted - g).abs() < 1e-12);
        prop_assert!((periodic_green(-p, &cfg).unwrap().value - g).abs() < 1e-12);
    }

    #[test]
    fn disk_oracle_solves_its_interface_system(lp in 0.05f64..20.0, lm in 0.05f64..20.0, r in 0.0f64..50.0) {
        let c = disk_limit_lambda_general(lp, lm, r, 2).unwrap();
        let scale = lp.max(lm).max(r) * (1.0 + c.a.abs() + c.b.abs());
        for res in c.residuals(lp, lm, r, 2) {
            prop_assert!(res.abs() < 1e-14 * scale.max(1.0) * 10.0);
        }
        let higher = disk_limit_lambda_general(lp, lm, r + 0.5, 2).unwrap();
        prop_assert!(higher.lambda_scalar >= c.lambda_scalar - 1e-12);
    }

    #[test]
    fn richardson_is_exact_on_linear_data(limit in -10.0f64..10.0, slope in -5.0f64..5.0, e in 0.01f64..0.5) {
        let (e1, e2) = (e, e / 2.0);
        let r = richardson(e1, limit + slope * e1, e2, limit + slope * e2);
        prop_assert!((r - limit).abs() < 1e-12 * (1.0 + limit.abs() + slope.abs()));
    }

    #[test]
    fn non_positive_conductivity_is_rejected(v in -5.0f64..=0.0, which in prop::bool::ANY) {
        let key = if which { "phases.lambda_plus" } else { "phases.lambda_minus" };
        let err = parse_config(&format!("{key} = {v}\n")).unwrap_err().to_string();
        prop_assert!(err.contains("line 1") && err.contains(key), "{}", err);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn zero_density_hook_is_the_arithmetic_mean(
        a in 0.5f64..1.5, b in 0.5f64..1.5, cx in 0.4f64..0.6, cy in 0.4f64..0.6,
        eps in 0.05f64..0.25, lp in 0.1f64..10.0,
    ) {
        let inc = PlacedInclusion::new(ShapeSpec::Ellipse { a, b }, Point::new(cx, cy), eps).unwrap();
        let ph = phases(lp, 1.0, RhoModel::Constant { rho0: 1.0 });
        let green = PeriodicGreenConfig::default();
        let sols = [
            TransmissionSolution::carrier_only(&inc, 0, 96, &green).unwrap(),
            TransmissionSolution::carrier_only(&inc, 1, 96, &green).unwrap(),
        ];
        let got = effective_matrix(&sols, &inc, &ph).unwrap().lambda_eff;
        let mean = 1.0 + (lp - 1.0) * PI * a * b * eps * eps;
        prop_assert!((got[0][0] - mean).abs() < 1e-12 && (got[1][1] - mean).abs() < 1e-12);
        prop_assert!(got[0][1].abs() < 1e-12 && got[1][0].abs() < 1e-12);
    }

    #[test]
    fn insulating_ellipse_limit(a in 0.5f64..2.0, b in 0.5f64..2.0, lp in 0.2f64..5.0) {
        let lam = limit_lambda(ShapeSpec::Ellipse { a, b }, &phases(lp, 1.0, RhoModel::Constant { rho0: 1.0 }), 0.0, 192)
            .unwrap();
        prop_assert!((lam[0][0] + PI * b * (a + b)).abs() < 1e-8);
        prop_assert!((lam[1][1] + PI * a * (a + b)).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn limit_coefficient_is_continuous_in_r_star(r in 0.0f64..5.0, lp in 0.5f64..5.0) {
        let ph = phases(lp, 1.0, RhoModel::Linear { r_star: 1.0 });
        let shape = ShapeSpec::Star { amplitude: 0.1, waves: 3 };
        let a = limit_lambda(shape, &ph, r, 96).unwrap();
        let b = limit_lambda(shape, &ph, r + 1e-6, 96).unwrap();
        prop_assert!((a[0][0] - b[0][0]).abs() < 1e-4 && (a[1][1] - b[1][1]).abs() < 1e-4);
    }

    #[test]
    fn centred_disk_is_isotropic(eps in 0.05f64..0.3, lp in 0.2f64..5.0, rho0 in 0.1f64..3.0) {
        let inc = PlacedInclusion::new(ShapeSpec::unit_disk(), Point::new(0.5, 0.5), eps).unwrap();
        let ph = phases(lp, 1.0, RhoModel::Constant { rho0 });
        let r = solve_effective(&inc, &ph, 96, &PeriodicGreenConfig::default()).unwrap();
        let m = r.lambda_eff;
        prop_assert!((m[0][0] - m[1][1]).abs() < 1e-8);
        prop_assert!(m[0][1].abs() < 1e-8 && m[1][0].abs() < 1e-8);
    }
}

#[test]
fn periodic_green_has_zero_mean() {
    // midpoint rule on the regular part; the logarithm is integrated exactly
    let cfg = PeriodicGreenConfig::default();
    let m = 400;
    let h = 1.0 / m as f64;
    let mut sum = 0.0;
    for i in 0..m {
        for k in 0..m {
            let x = Point::new(-0.5 + (i as f64 + 0.5) * h, -0.5 + (k as f64 + 0.5) * h);
            sum += regularized_periodic_green(x, &cfg).value;
        }
    }
    let log_part = -1.0611754268825244 / (2.0 * PI);
    assert!((sum * h * h + log_part).abs() < 1e-6, "mean {}", sum * h * h + log_part);
}

#[test]
fn cell_residuals_decay_with_resolution() {
    let inc = PlacedInclusion::new(ShapeSpec::Ellipse { a: 1.0, b: 0.6 }, Point::new(0.45, 0.5), 0.2).unwrap();
    let ph = phases(3.0, 1.0, RhoModel::Constant { rho0: 0.5 });
    let green = PeriodicGreenConfig::default();
    let coarse = solve_cell_problem(&inc, &ph, 0, 16, &green).unwrap().residuals.scaled_max();
    let fine = solve_cell_problem(&inc, &ph, 0, 32, &green).unwrap().residuals.scaled_max();
    assert!(fine < 1e-12 || coarse / fine >= 1e2, "coarse {coarse:.2e}, fine {fine:.2e}");
}

#[test]
fn field_values_converge_in_n() {
    let inc = PlacedInclusion::new(ShapeSpec::Star { amplitude: 0.15, waves: 5 }, Point::new(0.5, 0.5), 0.25).unwrap();
    let ph = phases(5.0, 1.0, RhoModel::Linear { r_star: 2.0 });
    let green = PeriodicGreenConfig::default();
    let a = solve_cell_problem(&inc, &ph, 1, 128, &green).unwrap();
    let b = solve_cell_problem(&inc, &ph, 1, 192, &green).unwrap();
    for (p, side) in [(Point::new(0.5, 0.52), Side::Interior), (Point::new(0.1, 0.9), Side::Exterior)] {
        let va = evaluate_solution(&a, &[p], side).unwrap()[0].value;
        let vb = evaluate_solution(&b, &[p], side).unwrap()[0].value;
        assert_relative_eq!(va, vb, epsilon = 1e-8);
    }
}

#[test]
fn limit_fields_have_zero_boundary_mean() {
    let ph = phases(2.0, 1.0, RhoModel::Linear { r_star: 1.5 });
    for j in 0..2 {
        let sol = solve_limit_problem(ShapeSpec::Ellipse { a: 1.5, b: 1.0 }, &ph, 1.5, j, 128).unwrap();
        let ext = sol.disc.integrate(&sol.exterior.trace);
        let int = sol.disc.integrate(&sol.interior.as_ref().unwrap().trace);
        assert!(ext.abs() < 1e-10 && int.abs() < 1e-10, "means {ext:.2e}, {int:.2e}");
        assert!(sol.residuals.normalization < 1e-10);
    }
}
