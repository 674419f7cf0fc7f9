macro_rules! example_test {
    ($module:ident, $test:ident, $file:literal) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example_test!(periodic_green_example, periodic_green_runs, "periodic_green.rs");
example_test!(layer_potentials_example, layer_potentials_runs, "layer_potentials.rs");
example_test!(limit_coefficient_example, limit_coefficient_runs, "limit_coefficient.rs");
example_test!(cell_problem_example, cell_problem_runs, "cell_problem.rs");
example_test!(epsilon_sweep_example, epsilon_sweep_runs, "epsilon_sweep.rs");
example_test!(config_run_example, config_run_runs, "config_run.rs");
