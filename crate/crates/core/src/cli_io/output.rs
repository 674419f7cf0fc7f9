//! Result files. Floats are written with 17 significant digits so that
//! identical runs produce byte-identical files.

use std::fs;
use std::fmt::Write;
use std::path::Path;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::effective::{EffectiveResult, Mat2, SweepResult};
use crate::error::{Error, Result};

/// A float serialized as `{:.16e}`; non-finite values become `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F17(pub f64);

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(fmt17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

pub fn mat17(m: &Mat2) -> [[F17; 2]; 2] {
    [[F17(m[0][0]), F17(m[0][1])], [F17(m[1][0]), F17(m[1][1])]]
}

#[derive(Serialize)]
pub struct EffectiveRecord {
    pub eps: F17,
    pub n: usize,
    pub lambda_eff: [[F17; 2]; 2],
    pub lambda_hat: [[F17; 2]; 2],
    pub bc_residual: F17,
    pub symmetry_defect: F17,
    pub condition: F17,
}

impl From<&EffectiveResult> for EffectiveRecord {
    fn from(r: &EffectiveResult) -> Self {
        EffectiveRecord {
            eps: F17(r.eps),
            n: r.n_nodes,
            lambda_eff: mat17(&r.lambda_eff),
            lambda_hat: mat17(&r.lambda_hat),
            bc_residual: F17(r.bc_residual),
            symmetry_defect: F17(r.symmetry_defect),
            condition: F17(r.condition),
        }
    }
}

#[derive(Serialize)]
pub struct SummaryRecord {
    pub eps: Vec<F17>,
    pub n: usize,
    pub r_star: F17,
    pub extrapolated: [[F17; 2]; 2],
    pub reference: [[F17; 2]; 2],
    pub relative_deviation: [[F17; 2]; 2],
    pub richardson_sequence: Vec<[[F17; 2]; 2]>,
    pub empirical_order: Vec<F17>,
    pub loglog_slope: F17,
    pub residual_decay_monotone: bool,
}

impl From<&SweepResult> for SummaryRecord {
    fn from(s: &SweepResult) -> Self {
        SummaryRecord {
            eps: s.entries.iter().map(|e| F17(e.eps)).collect(),
            n: s.entries.first().map_or(0, |e| e.n_nodes),
            r_star: F17(s.r_star),
            extrapolated: mat17(&s.extrapolated),
            reference: mat17(&s.reference),
            relative_deviation: mat17(&s.relative_deviation),
            richardson_sequence: s.richardson_sequence.iter().map(mat17).collect(),
            empirical_order: s.empirical_order.iter().map(|p| F17(*p)).collect(),
            loglog_slope: F17(s.loglog_slope),
            residual_decay_monotone: s.residual_decay_monotone,
        }
    }
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub const CSV_HEADER: [&str; 11] = [
    "eps",
    "N",
    "lam_eff_11",
    "lam_eff_12",
    "lam_eff_21",
    "lam_eff_22",
    "Lambda_hat_11",
    "Lambda_hat_12",
    "Lambda_hat_21",
    "Lambda_hat_22",
    "bc_residual",
];

pub fn write_results_csv(path: &Path, entries: &[EffectiveResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for e in entries {
        let mut row = vec![fmt17(e.eps), e.n_nodes.to_string()];
        row.extend(e.lambda_eff.iter().flatten().map(|v| fmt17(*v)));
        row.extend(e.lambda_hat.iter().flatten().map(|v| fmt17(*v)));
        row.push(fmt17(e.bc_residual));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Log-log plot of `|λ^eff₁₁ − λ⁻|` against ε with a slope-`dim` guide
/// through the smallest-ε point.
pub fn convergence_svg(eps: &[f64], deviation: &[f64], dim: i32) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 56.0;
    let guide: Vec<f64> = {
        let (e0, d0) = (eps[eps.len() - 1], deviation[deviation.len() - 1]);
        eps.iter().map(|e| d0 * (e / e0).powi(dim)).collect()
    };
    let lx: Vec<f64> = eps.iter().map(|v| v.log10()).collect();
    let all_y: Vec<f64> = deviation.iter().chain(&guide).filter(|v| **v > 0.0).map(|v| v.log10()).collect();
    let (x0, x1) = bounds(&lx);
    let (y0, y1) = bounds(&all_y);
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let line = |ys: &[f64]| -> String {
        lx.iter()
            .zip(ys)
            .filter(|(_, y)| **y > 0.0)
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(y.log10())))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for d in (x0.floor() as i32)..=(x1.ceil() as i32) {
        let x = f64::from(d);
        if x >= x0 && x <= x1 {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">1e{d}</text>"#,
                px(x),
                H - PAD + 16.0
            );
        }
    }
    for d in (y0.floor() as i32)..=(y1.ceil() as i32) {
        let y = f64::from(d);
        if y >= y0 && y <= y1 {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
                PAD - 4.0,
                py(y) + 4.0
            );
        }
    }
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#888" stroke-dasharray="6 4"/>"##,
        line(&guide)
    );
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="2"/>"##, line(deviation));
    for (x, y) in lx.iter().zip(deviation).filter(|(_, y)| **y > 0.0) {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f5fa8"/>"##,
            px(*x),
            py(y.log10())
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">ε</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">|λeff₁₁ − λ⁻|</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" fill="#888">slope {dim}</text>"##,
        PAD + 8.0,
        PAD + 16.0
    );
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.05).max(0.05);
    (lo - pad, hi + pad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let json = serde_json::to_string(&[F17(0.1), F17(-2.0), F17(f64::NAN)]).unwrap();
        assert_eq!(json, "[1.0000000000000001e-1,-2.0000000000000000e0,null]");
        let back: Vec<Option<f64>> = serde_json::from_str(&json).unwrap();
        assert_eq!(back[0], Some(0.1));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = convergence_svg(&[0.2, 0.1, 0.05], &[0.08, 0.02, 0.005], 2);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
