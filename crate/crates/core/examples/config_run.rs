// Drives the command-line layer from a config string: a sweep that writes
// results.csv, summary.json and plot.svg, then the oracle suite.

use kapitza_cell::cli_io::{parse_config, run, Command, EXIT_OK};

const CONFIG: &str = "
shape.kind = ellipse
shape.a = 1.0
shape.b = 0.6
phases.lambda_plus = 3
phases.lambda_minus = 1
rho.model = constant
rho.rho0 = 0.5
run.eps = 0.2, 0.1, 0.05
discretization.n = 96
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("kapitza-cell-example-{}", std::process::id()));
    let mut cfg = parse_config(CONFIG)?;
    cfg.output_dir = dir.clone();

    for command in [Command::Sweep, Command::Verify] {
        cfg.command = command;
        let outcome = run(&cfg)?;
        print!("{}", outcome.report);
        for f in &outcome.files {
            println!("  wrote {}", f.display());
        }
        assert_eq!(outcome.exit_code, EXIT_OK);
    }
    println!("{}", std::fs::read_to_string(dir.join("results.csv"))?.lines().next().unwrap_or(""));
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("config_run example failed");
}
