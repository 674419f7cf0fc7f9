//! Command-line front end: configuration, orchestration and result files.
//!
//! ```text
//! kapitza-cell <solve|sweep|limit|verify|greens-check> --config <path> [--out <dir>]
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure,
//! 4 verification failure. `KAPITZA_CELL_THREADS` caps the worker pool.

mod checks;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::Parser;
use serde::Serialize;

pub use checks::{greens_suite, verify_suite, CheckOutcome};
pub use config::{parse_config, Command, GreenSettings, RunConfig};

use crate::effective::{limit_lambda, limit_lambda_r0, solve_effective, sweep_and_extrapolate};
use crate::error::{Error, Result};
use crate::geometry::{PlacedInclusion, ShapeSpec};
use crate::transmission::PhaseParameters;
use output::{convergence_svg, mat17, write_json, write_results_csv, EffectiveRecord, SummaryRecord, F17};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub const THREADS_ENV: &str = "KAPITZA_CELL_THREADS";

/// What a command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub report: String,
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Parameter(_)
        | Error::InvalidShape(_)
        | Error::Placement(_)
        | Error::Discretization(_) => EXIT_CONFIG,
        Error::Domain(_) | Error::Solver(_) | Error::Io(_) => EXIT_SOLVER,
    }
}

#[derive(Serialize)]
struct Inputs<'a> {
    shape: &'a ShapeSpec,
    center: [F17; 2],
    phases: &'a PhaseParameters,
    n: usize,
}

impl<'a> Inputs<'a> {
    fn of(cfg: &'a RunConfig) -> Self {
        Inputs { shape: &cfg.shape, center: [F17(cfg.center.x), F17(cfg.center.y)], phases: &cfg.phases, n: cfg.n }
    }
}

#[derive(Serialize)]
struct SolveFile<'a> {
    inputs: Inputs<'a>,
    result: EffectiveRecord,
}

#[derive(Serialize)]
struct LimitFile<'a> {
    inputs: Inputs<'a>,
    r_star: F17,
    lambda: [[F17; 2]; 2],
    /// Exterior Neumann formula, only for `r★ = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_exterior_neumann: Option<[[F17; 2]; 2]>,
}

fn checks_report(title: &str, checks: &[CheckOutcome]) -> (String, bool) {
    let mut report = format!("{title}\n");
    for c in checks {
        report.push_str(&format!("{c}\n"));
    }
    let ok = checks.iter().all(CheckOutcome::passed);
    let passed = checks.iter().filter(|c| c.passed()).count();
    report.push_str(&format!("{passed}/{} checks passed\n", checks.len()));
    (report, ok)
}

/// Executes the configured command and writes its artifacts. Files are only
/// written once every solve has succeeded.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let dir = &cfg.output_dir;
    let mut files = Vec::new();
    let mut exit_code = EXIT_OK;
    let report;
    match cfg.command {
        Command::Solve => {
            let green = cfg.green.build()?;
            let inc = PlacedInclusion::new(cfg.shape, cfg.center, cfg.eps[0])?;
            let r = solve_effective(&inc, &cfg.phases, cfg.n, &green)?;
            fs::create_dir_all(dir)?;
            let path = dir.join("result.json");
            write_json(&path, &SolveFile { inputs: Inputs::of(cfg), result: (&r).into() })?;
            files.push(path);
            report = format!(
                "ε = {}: λ^eff = {:?}, Λ̂ = {:?}, bc residual {:.2e}\n",
                r.eps, r.lambda_eff, r.lambda_hat, r.bc_residual
            );
        }
        Command::Sweep => {
            let green = cfg.green.build()?;
            let s = sweep_and_extrapolate(cfg.shape, cfg.center, &cfg.phases, &cfg.eps, cfg.n, &green)?;
            let eps: Vec<f64> = s.entries.iter().map(|e| e.eps).collect();
            let dev: Vec<f64> =
                s.entries.iter().map(|e| (e.lambda_eff[0][0] - cfg.phases.lambda_minus).abs()).collect();
            fs::create_dir_all(dir)?;
            let csv = dir.join("results.csv");
            write_results_csv(&csv, &s.entries)?;
            let summary = dir.join("summary.json");
            write_json(&summary, &SummaryRecord::from(&s))?;
            let plot = dir.join("plot.svg");
            fs::write(&plot, convergence_svg(&eps, &dev, 2))?;
            files.extend([csv, summary, plot]);
            report = format!(
                "extrapolated Λ₁₁ = {:.10}, reference Λ₁₁[0,{}] = {:.10}, relative deviation {:.2e}, \
                 log-log slope {:.4}\n",
                s.extrapolated[0][0], s.r_star, s.reference[0][0], s.relative_deviation[0][0], s.loglog_slope
            );
        }
        Command::Limit => {
            let r_star = cfg.phases.r_star();
            let lambda = limit_lambda(cfg.shape, &cfg.phases, r_star, cfg.n)?;
            let alt = if r_star == 0.0 { Some(limit_lambda_r0(cfg.shape, &cfg.phases, cfg.n)?) } else { None };
            fs::create_dir_all(dir)?;
            let path = dir.join("limit.json");
            write_json(
                &path,
                &LimitFile {
                    inputs: Inputs::of(cfg),
                    r_star: F17(r_star),
                    lambda: mat17(&lambda),
                    lambda_exterior_neumann: alt.as_ref().map(mat17),
                },
            )?;
            files.push(path);
            report = format!("Λ[0,{r_star}] = {lambda:?}\n");
        }
        Command::Verify | Command::GreensCheck => {
            let (title, checks, name) = if cfg.command == Command::Verify {
                ("oracle verification", verify_suite(cfg)?, "verify.txt")
            } else {
                ("periodic Green's function check", greens_suite(&cfg.green.build_unchecked()?)?, "greens-check.txt")
            };
            let (text, ok) = checks_report(title, &checks);
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, &text)?;
            files.push(path);
            if !ok {
                exit_code = EXIT_VERIFY;
            }
            report = text;
        }
    }
    Ok(RunOutcome { exit_code, files, report })
}

#[derive(Parser, Debug)]
#[command(name = "kapitza-cell", version, about = "Effective conductivity of composites with imperfect interface contact")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Configuration file (`section.key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let text = fs::read_to_string(&cli.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = parse_config(&text)?;
    cfg.command = cli.command;
    if cfg.command == Command::Sweep && cfg.eps.len() < 3 {
        return Err(Error::Config("run.eps: sweep requires ≥ 3 epsilons".into()));
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

/// Full CLI: parses arguments, runs, prints the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = load(&cli).and_then(|cfg| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_count()? {
            pool = pool.num_threads(n);
        }
        let pool = pool.build().map_err(|e| Error::Solver(format!("cannot start worker pool: {e}")))?;
        pool.install(|| run(&cfg))
    });
    match outcome {
        Ok(o) => {
            print!("{}", o.report);
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
