//! Line-oriented `section.key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! shape.kind = star
//! shape.m = 0.1
//! shape.w = 4
//! cell.center = 0.5, 0.5
//! phases.lambda_plus = 1
//! phases.lambda_minus = 1
//! rho.model = linear
//! rho.r_star = 1
//! run.eps = 0.2, 0.1, 0.05, 0.025
//! discretization.n = 256
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;

use crate::error::{Error, Result};
use crate::geometry::{PlacedInclusion, Point, ShapeSpec, MIN_NODES};
use crate::greens::PeriodicGreenConfig;
use crate::transmission::{PhaseParameters, RhoModel, MIN_CELL_EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Solve,
    Sweep,
    Limit,
    Verify,
    GreensCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Limit => "limit",
            Command::Verify => "verify",
            Command::GreensCheck => "greens-check",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Command as ValueEnum>::from_str(s, false)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ewald controls as written in the config; cutoffs are optional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenSettings {
    pub eta: f64,
    pub tail_tol: f64,
    pub real_cutoff: Option<f64>,
    pub fourier_cutoff: Option<f64>,
}

impl Default for GreenSettings {
    fn default() -> Self {
        let d = PeriodicGreenConfig::default();
        GreenSettings { eta: d.ewald_split, tail_tol: d.tail_tol, real_cutoff: None, fourier_cutoff: None }
    }
}

impl GreenSettings {
    /// Builds the Green's-function configuration; explicit cutoffs must
    /// meet the tail tolerance.
    pub fn build(&self) -> Result<PeriodicGreenConfig> {
        match (self.real_cutoff, self.fourier_cutoff) {
            (None, None) => PeriodicGreenConfig::new(self.eta, self.tail_tol),
            _ => {
                let auto = PeriodicGreenConfig::new(self.eta, self.tail_tol)?;
                PeriodicGreenConfig::with_cutoffs(
                    self.eta,
                    self.real_cutoff.unwrap_or(auto.real_cutoff),
                    self.fourier_cutoff.unwrap_or(auto.fourier_cutoff),
                    self.tail_tol,
                )
            }
        }
    }

    /// Same as [`build`](Self::build) but accepts cutoffs that miss the
    /// tolerance, so that the check can report them.
    pub fn build_unchecked(&self) -> Result<PeriodicGreenConfig> {
        let auto = PeriodicGreenConfig::new(self.eta, self.tail_tol)?;
        Ok(PeriodicGreenConfig::with_cutoffs_unchecked(
            self.eta,
            self.real_cutoff.unwrap_or(auto.real_cutoff),
            self.fourier_cutoff.unwrap_or(auto.fourier_cutoff),
            self.tail_tol,
        ))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub shape: ShapeSpec,
    pub center: Point,
    pub phases: PhaseParameters,
    /// Strictly decreasing; `solve` uses the first entry.
    pub eps: Vec<f64>,
    pub n: usize,
    pub green: GreenSettings,
    pub output_dir: PathBuf,
}

const KEYS: &[&str] = &[
    "run.command",
    "shape.kind",
    "shape.radius",
    "shape.a",
    "shape.b",
    "shape.m",
    "shape.w",
    "cell.center",
    "phases.lambda_plus",
    "phases.lambda_minus",
    "rho.model",
    "rho.r_star",
    "rho.rho0",
    "rho.c",
    "rho.beta",
    "run.eps",
    "discretization.n",
    "greens.eta",
    "greens.tail_tol",
    "greens.real_cutoff",
    "greens.fourier_cutoff",
    "output.dir",
];

pub const DEFAULT_EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
pub const DEFAULT_N: usize = 256;

struct Entries {
    map: BTreeMap<&'static str, (usize, String)>,
}

impl Entries {
    fn err(&self, key: &str, msg: impl fmt::Display) -> Error {
        match self.map.get(key) {
            Some((line, _)) => Error::Config(format!("line {line}: {key}: {msg}")),
            None => Error::Config(format!("{key}: {msg}")),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| self.err(key, format!("cannot parse {v:?}: {e}"))),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        let v = self.parse::<f64>(key)?;
        match v {
            Some(x) if !x.is_finite() => Err(self.err(key, "value must be finite")),
            _ => Ok(v),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.err(key, format!("cannot parse {s:?} as a number")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn reject_unless(&self, keys: &[&str], allowed: bool, reason: &str) -> Result<()> {
        for key in keys {
            if !allowed && self.map.contains_key(key) {
                return Err(self.err(key, format!("does not apply to {reason}")));
            }
        }
        Ok(())
    }

    /// Attaches the key and line to a validation error from the library.
    fn wrap<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Config(_) => e,
            other => self.err(key, other),
        })
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {lineno}: expected `section.key = value`, got {content:?}")))?;
        let key = key.trim();
        let value = value.trim().trim_matches('"').to_string();
        let known = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| Error::Config(format!("line {lineno}: unknown key {key:?}")))?;
        if let Some((first, _)) = map.insert(*known, (lineno, value)) {
            return Err(Error::Config(format!("line {lineno}: {key}: duplicate key (first set on line {first})")));
        }
    }
    let e = Entries { map };

    let command = e.parse::<Command>("run.command")?.unwrap_or(Command::Solve);

    let kind = e.raw("shape.kind").unwrap_or("disk");
    e.reject_unless(&["shape.radius"], kind == "disk", "this shape.kind")?;
    e.reject_unless(&["shape.a", "shape.b"], kind == "ellipse", "this shape.kind")?;
    e.reject_unless(&["shape.m", "shape.w"], kind == "star", "this shape.kind")?;
    let shape = match kind {
        "disk" => ShapeSpec::Disk { radius: e.number("shape.radius")?.unwrap_or(1.0) },
        "ellipse" => ShapeSpec::Ellipse {
            a: e.number("shape.a")?.ok_or_else(|| e.err("shape.a", "required for an ellipse"))?,
            b: e.number("shape.b")?.ok_or_else(|| e.err("shape.b", "required for an ellipse"))?,
        },
        "star" => ShapeSpec::Star {
            amplitude: e.number("shape.m")?.ok_or_else(|| e.err("shape.m", "required for a star"))?,
            waves: e.parse::<u32>("shape.w")?.ok_or_else(|| e.err("shape.w", "required for a star"))?,
        },
        other => return Err(e.err("shape.kind", format!("expected disk, ellipse or star, got {other:?}"))),
    };
    e.wrap("shape.kind", shape.validate())?;

    let center = match e.list("cell.center")? {
        None => Point::new(0.5, 0.5),
        Some(v) if v.len() == 2 => Point::new(v[0], v[1]),
        Some(v) => return Err(e.err("cell.center", format!("expected two coordinates, got {}", v.len()))),
    };

    let model = e.raw("rho.model").unwrap_or("linear");
    e.reject_unless(&["rho.r_star"], model == "linear", "this rho.model")?;
    e.reject_unless(&["rho.rho0"], model == "constant", "this rho.model")?;
    e.reject_unless(&["rho.c", "rho.beta"], model == "power", "this rho.model")?;
    let (rho, rho_key) = match model {
        "linear" => (RhoModel::Linear { r_star: e.number("rho.r_star")?.unwrap_or(1.0) }, "rho.r_star"),
        "constant" => (RhoModel::Constant { rho0: e.number("rho.rho0")?.unwrap_or(1.0) }, "rho.rho0"),
        "power" => (
            RhoModel::Power {
                c: e.number("rho.c")?.unwrap_or(1.0),
                beta: e.number("rho.beta")?.ok_or_else(|| e.err("rho.beta", "required for the power model"))?,
            },
            "rho.beta",
        ),
        other => return Err(e.err("rho.model", format!("expected linear, constant or power, got {other:?}"))),
    };
    e.wrap(rho_key, rho.validate())?;

    let lambda_plus = e.number("phases.lambda_plus")?.unwrap_or(1.0);
    let lambda_minus = e.number("phases.lambda_minus")?.unwrap_or(1.0);
    let phase_key = if lambda_plus > 0.0 { "phases.lambda_minus" } else { "phases.lambda_plus" };
    let phases = e.wrap(phase_key, PhaseParameters::new(lambda_plus, lambda_minus, rho))?;

    let eps = e.list("run.eps")?.unwrap_or_else(|| DEFAULT_EPS.to_vec());
    if eps.is_empty() {
        return Err(e.err("run.eps", "at least one value is required"));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(e.err("run.eps", "values must be strictly decreasing"));
    }
    if command == Command::Sweep && eps.len() < 3 {
        return Err(e.err("run.eps", "sweep requires ≥ 3 epsilons"));
    }
    for &x in &eps {
        if x < MIN_CELL_EPS {
            return Err(e.err("run.eps", format!("ε = {x} is below the minimum {MIN_CELL_EPS}")));
        }
        e.wrap("run.eps", PlacedInclusion::new(shape, center, x))?;
        let r = phases.rho.rho(x);
        if !(r.is_finite() && r > 0.0) {
            return Err(e.err("run.eps", format!("ρ(ε) is not positive at ε = {x}")));
        }
    }

    let n = e.parse::<usize>("discretization.n")?.unwrap_or(DEFAULT_N);
    if n < MIN_NODES || n % 2 != 0 {
        return Err(e.err("discretization.n", format!("must be even and at least {MIN_NODES}, got {n}")));
    }

    let defaults = GreenSettings::default();
    let green = GreenSettings {
        eta: e.number("greens.eta")?.unwrap_or(defaults.eta),
        tail_tol: e.number("greens.tail_tol")?.unwrap_or(defaults.tail_tol),
        real_cutoff: e.number("greens.real_cutoff")?,
        fourier_cutoff: e.number("greens.fourier_cutoff")?,
    };
    for (key, v) in [("greens.eta", Some(green.eta)), ("greens.tail_tol", Some(green.tail_tol))]
        .into_iter()
        .chain([("greens.real_cutoff", green.real_cutoff), ("greens.fourier_cutoff", green.fourier_cutoff)])
    {
        if let Some(v) = v {
            if v <= 0.0 {
                return Err(e.err(key, format!("must be positive, got {v}")));
            }
        }
    }
    e.wrap("greens.eta", PeriodicGreenConfig::new(green.eta, green.tail_tol))?;

    let output_dir = PathBuf::from(e.raw("output.dir").unwrap_or("out"));

    Ok(RunConfig { command, shape, center, phases, eps, n, green, output_dir })
}
