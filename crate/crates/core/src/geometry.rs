//! Inclusion shapes, their placement in the unit cell and trapezoid
//! quadrature data on the boundary curve.
//!
//! Curves are parametrized on `[0, 2π)` counterclockwise, so the outward
//! normal is the tangent rotated clockwise. Nodes sit at equispaced
//! parameter values `t_i = (i + shift)·2π/N`; `shift = 0` gives the
//! collocation grid and `shift = 0.5` the midpoints used for residual checks.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Smallest node count accepted by [`discretize`].
pub const MIN_NODES: usize = 16;

/// Reference inclusion shape `Ω`, containing the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeSpec {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
    /// Polar curve `r(θ) = 1 + amplitude·cos(waves·θ)`.
    Star { amplitude: f64, waves: u32 },
}

/// Position, first and second parameter derivatives of a curve point.
#[derive(Clone, Copy, Debug)]
pub struct CurveJet {
    pub position: Point,
    pub tangent: Point,
    pub second: Point,
}

impl ShapeSpec {
    pub fn unit_disk() -> Self {
        ShapeSpec::Disk { radius: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ShapeSpec::Disk { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidShape(format!(
                        "disk radius must be positive, got {radius}"
                    )));
                }
            }
            ShapeSpec::Ellipse { a, b } => {
                if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
                    return Err(Error::InvalidShape(format!(
                        "ellipse semi-axes must be positive, got a={a}, b={b}"
                    )));
                }
            }
            ShapeSpec::Star { amplitude, waves } => {
                if waves == 0 {
                    return Err(Error::InvalidShape("star wave number must be ≥ 1".into()));
                }
                if !amplitude.is_finite() || amplitude.abs() * f64::from(waves) >= 1.0 {
                    return Err(Error::InvalidShape(format!(
                        "star needs |m|·w < 1 to stay simple, got m={amplitude}, w={waves}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn jet(&self, t: f64) -> CurveJet {
        let (s, c) = t.sin_cos();
        match *self {
            ShapeSpec::Disk { radius } => CurveJet {
                position: Point::new(radius * c, radius * s),
                tangent: Point::new(-radius * s, radius * c),
                second: Point::new(-radius * c, -radius * s),
            },
            ShapeSpec::Ellipse { a, b } => CurveJet {
                position: Point::new(a * c, b * s),
                tangent: Point::new(-a * s, b * c),
                second: Point::new(-a * c, -b * s),
            },
            ShapeSpec::Star { amplitude, waves } => {
                let w = f64::from(waves);
                let (sw, cw) = (w * t).sin_cos();
                let r = 1.0 + amplitude * cw;
                let dr = -amplitude * w * sw;
                let ddr = -amplitude * w * w * cw;
                let radial = Point::new(c, s);
                let angular = Point::new(-s, c);
                CurveJet {
                    position: radial * r,
                    tangent: radial * dr + angular * r,
                    second: radial * (ddr - r) + angular * (2.0 * dr),
                }
            }
        }
    }

    /// Strict interior test in reference coordinates.
    pub fn contains(&self, x: &Point) -> bool {
        match *self {
            ShapeSpec::Disk { radius } => x.norm() < radius,
            ShapeSpec::Ellipse { a, b } => (x.x / a).powi(2) + (x.y / b).powi(2) < 1.0,
            ShapeSpec::Star { amplitude, waves } => {
                let theta = x.y.atan2(x.x);
                x.norm() < 1.0 + amplitude * (f64::from(waves) * theta).cos()
            }
        }
    }

    /// Axis-aligned bounding box `(min, max)` of the closed reference shape.
    pub fn bounding_box(&self) -> (Point, Point) {
        match *self {
            ShapeSpec::Disk { radius } => (Point::new(-radius, -radius), Point::new(radius, radius)),
            ShapeSpec::Ellipse { a, b } => (Point::new(-a, -b), Point::new(a, b)),
            ShapeSpec::Star { .. } => {
                // dense sampling, padded by the worst-case chord sag
                let m = 8192;
                let mut lo = Point::repeat(f64::INFINITY);
                let mut hi = Point::repeat(f64::NEG_INFINITY);
                let mut max_second = 0.0f64;
                for i in 0..m {
                    let jet = self.jet(2.0 * PI * i as f64 / m as f64);
                    lo = lo.inf(&jet.position);
                    hi = hi.sup(&jet.position);
                    max_second = max_second.max(jet.second.norm());
                }
                let h = 2.0 * PI / m as f64;
                let pad = max_second * h * h / 8.0;
                (lo - Point::repeat(pad), hi + Point::repeat(pad))
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ShapeSpec::Disk { .. } => "disk",
            ShapeSpec::Ellipse { .. } => "ellipse",
            ShapeSpec::Star { .. } => "star",
        }
    }
}

/// The scaled copy `p + εΩ` of a reference shape inside the unit cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlacedInclusion {
    pub shape: ShapeSpec,
    pub center: [f64; 2],
    pub scale: f64,
}

impl PlacedInclusion {
    pub fn new(shape: ShapeSpec, center: Point, scale: f64) -> Result<Self> {
        shape.validate()?;
        check_fits(&shape, &center, scale)?;
        Ok(PlacedInclusion { shape, center: [center.x, center.y], scale })
    }

    pub fn center(&self) -> Point {
        Point::new(self.center[0], self.center[1])
    }

    pub fn discretize(&self, n: usize) -> Result<BoundaryDiscretization> {
        place(&discretize(self.shape, n)?, self.center(), self.scale)
    }

    /// Interior test for the inclusion or any of its lattice translates.
    pub fn contains_periodic(&self, x: &Point) -> bool {
        let c = self.center();
        let d = x - c;
        let wrapped = Point::new(d.x - d.x.round(), d.y - d.y.round());
        self.shape.contains(&(wrapped / self.scale))
    }

    /// `|Ω_{p,ε}| = εⁿ|Ω|`, from the discretized boundary.
    pub fn area(&self, n: usize) -> Result<f64> {
        Ok(shape_measure(&self.discretize(n)?))
    }
}

fn check_fits(shape: &ShapeSpec, center: &Point, scale: f64) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Placement(format!("scale must be positive, got {scale}")));
    }
    if !(0.0..1.0).contains(&center.x) || !(0.0..1.0).contains(&center.y) || center.x == 0.0 || center.y == 0.0 {
        return Err(Error::Placement(format!(
            "center ({}, {}) must lie in the open unit cell",
            center.x, center.y
        )));
    }
    let (lo, hi) = shape.bounding_box();
    let lo = center + lo * scale;
    let hi = center + hi * scale;
    if lo.x <= 0.0 || lo.y <= 0.0 || hi.x >= 1.0 || hi.y >= 1.0 {
        return Err(Error::Placement(format!(
            "closure spans [{:.6}, {:.6}]×[{:.6}, {:.6}], which leaves the open cell ]0,1[²",
            lo.x, hi.x, lo.y, hi.y
        )));
    }
    Ok(())
}

/// Trapezoid quadrature data on a closed curve.
#[derive(Clone, Debug)]
pub struct BoundaryDiscretization {
    shape: ShapeSpec,
    center: Point,
    scale: f64,
    shift: f64,
    pub params: Vec<f64>,
    pub nodes: Vec<Point>,
    pub normals: Vec<Point>,
    /// `|γ'(t_i)|`, including the placement scale.
    pub speeds: Vec<f64>,
    /// `speed × 2π/N`.
    pub weights: Vec<f64>,
    /// Signed curvature, positive on convex arcs.
    pub curvature: Vec<f64>,
}

/// Samples `shape` at `n` equispaced parameter values.
pub fn discretize(shape: ShapeSpec, n: usize) -> Result<BoundaryDiscretization> {
    shape.validate()?;
    if n < MIN_NODES || n % 2 != 0 {
        return Err(Error::Discretization(format!(
            "node count must be even and at least {MIN_NODES}, got {n}"
        )));
    }
    Ok(BoundaryDiscretization::sample(shape, Point::zeros(), 1.0, n, 0.0))
}

/// Maps a discretization through `x ↦ p + εx`, checking that the closure
/// stays inside the open unit cell.
pub fn place(disc: &BoundaryDiscretization, p: Point, eps: f64) -> Result<BoundaryDiscretization> {
    let center = p + disc.center * eps;
    let scale = disc.scale * eps;
    check_fits(&disc.shape, &center, scale)?;
    Ok(BoundaryDiscretization {
        shape: disc.shape,
        center,
        scale,
        shift: disc.shift,
        params: disc.params.clone(),
        nodes: disc.nodes.iter().map(|x| p + x * eps).collect(),
        normals: disc.normals.clone(),
        speeds: disc.speeds.iter().map(|s| s * eps).collect(),
        weights: disc.weights.iter().map(|w| w * eps).collect(),
        curvature: disc.curvature.iter().map(|k| k / eps).collect(),
    })
}

/// `(1/n)∮ x·ν dσ`, the area enclosed by the curve.
pub fn shape_measure(disc: &BoundaryDiscretization) -> f64 {
    0.5 * disc
        .nodes
        .iter()
        .zip(&disc.normals)
        .zip(&disc.weights)
        .map(|((x, nu), w)| x.dot(nu) * w)
        .sum::<f64>()
}

impl BoundaryDiscretization {
    fn sample(shape: ShapeSpec, center: Point, scale: f64, n: usize, shift: f64) -> Self {
        let h = 2.0 * PI / n as f64;
        let mut out = BoundaryDiscretization {
            shape,
            center,
            scale,
            shift,
            params: Vec::with_capacity(n),
            nodes: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            speeds: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            curvature: Vec::with_capacity(n),
        };
        for i in 0..n {
            let t = (i as f64 + shift) * h;
            let jet = shape.jet(t);
            let speed = jet.tangent.norm();
            let cross = jet.tangent.x * jet.second.y - jet.tangent.y * jet.second.x;
            out.params.push(t);
            out.nodes.push(center + jet.position * scale);
            out.normals.push(Point::new(jet.tangent.y, -jet.tangent.x) / speed);
            out.speeds.push(speed * scale);
            out.weights.push(speed * scale * h);
            out.curvature.push(cross / (speed * speed * speed * scale));
        }
        out
    }

    /// Same curve and placement, nodes offset by `shift` grid spacings.
    pub fn shifted(&self, shift: f64) -> Self {
        Self::sample(self.shape, self.center, self.scale, self.len(), shift)
    }

    /// Same curve and placement with a different node count.
    pub fn resampled(&self, n: usize) -> Result<Self> {
        if n < MIN_NODES || n % 2 != 0 {
            return Err(Error::Discretization(format!(
                "node count must be even and at least {MIN_NODES}, got {n}"
            )));
        }
        Ok(Self::sample(self.shape, self.center, self.scale, n, self.shift))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self) -> ShapeSpec {
        self.shape
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Parameter spacing `2π/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    /// Largest arc length between consecutive nodes (approximately).
    pub fn max_arc_spacing(&self) -> f64 {
        self.speeds.iter().fold(0.0f64, |m, s| m.max(*s)) * self.spacing()
    }

    pub fn length(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Trapezoid approximation of `∮ f dσ` for nodal values `f`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    /// Point on the placed curve at parameter `t`.
    pub fn point_at(&self, t: f64) -> CurveJet {
        let jet = self.shape.jet(t);
        CurveJet {
            position: self.center + jet.position * self.scale,
            tangent: jet.tangent * self.scale,
            second: jet.second * self.scale,
        }
    }

    /// Interior test against the placed curve (no lattice translates).
    pub fn encloses(&self, x: &Point) -> bool {
        self.shape.contains(&((x - self.center) / self.scale))
    }

    /// Distance from `x` to the placed curve and the parameter of the
    /// closest point, refined by Newton iteration from the nearest node.
    pub fn distance_to(&self, x: &Point) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        for (node, t) in self.nodes.iter().zip(&self.params) {
            let d = (x - node).norm();
            if d < best.0 {
                best = (d, *t);
            }
        }
        let mut t = best.1;
        let h = self.spacing();
        for _ in 0..30 {
            let jet = self.point_at(t);
            let r = jet.position - x;
            let g = r.dot(&jet.tangent);
            let gp = jet.tangent.norm_squared() + r.dot(&jet.second);
            if gp <= 0.0 {
                break;
            }
            let step = (g / gp).clamp(-h, h);
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let d = (self.point_at(t).position - x).norm();
        if d < best.0 {
            (d, t)
        } else {
            best
        }
    }
}
