//! Pinned open polylines and their geometric functionals.
//!
//! A [`DiscreteCurve`] with nodes `p_0, ..., p_N` carries its curvature at the
//! interior nodes: the signed turning angle between consecutive edges divided
//! by the averaged length of the two edges. With this choice the total
//! curvature is an exact telescoping sum of edge angles. End nodes carry no
//! turning angle.

mod io;
mod spline;

pub use io::{read_curve_csv, write_curve_csv, write_report_csv, REPORT_HEADER};

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Tolerance for "endpoint lies on the axis line".
pub const AXIS_TOL: f64 = 1e-12;

/// Default bound on `max h / min h` after a remesh.
pub const QUASI_UNIFORM_RATIO: f64 = 10.0;

/// Relative tolerance for equal spacing produced by [`resample_uniform`].
pub const REMESH_TOL: f64 = 1e-6;

/// A pinned open polyline with at least [`DiscreteCurve::MIN_EDGES`] edges, all of positive length.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    points: Vec<Point>,
}

impl DiscreteCurve {
    pub const MIN_EDGES: usize = 8;

    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < Self::MIN_EDGES + 1 {
            return Err(Error::TooFewNodes {
                min: Self::MIN_EDGES,
                got: points.len().saturating_sub(1),
            });
        }
        for (i, w) in points.windows(2).enumerate() {
            let h = (w[1] - w[0]).norm();
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::ImmersionViolation { edge: i, length: h });
            }
        }
        Ok(Self { points })
    }

    pub fn from_xy(xy: &[(f64, f64)]) -> Result<Self> {
        Self::new(xy.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    /// Uniformly sampled straight segment from `(0,0)` to `(ell,0)`.
    pub fn segment(ell: f64, edges: usize) -> Result<Self> {
        Self::new(
            (0..=edges)
                .map(|i| Point::new(ell * i as f64 / edges as f64, 0.0))
                .collect(),
        )
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Number of edges `N`.
    pub fn edges(&self) -> usize {
        self.points.len() - 1
    }

    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn end(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
    }

    /// `max h_i / min h_i`.
    pub fn quasi_uniformity(&self) -> f64 {
        let h = self.edge_lengths();
        let (lo, hi) = h
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi / lo
    }

    /// Mirror image across the axis line `y = 0`.
    pub fn reflect_axis(&self) -> Self {
        Self {
            points: self.points.iter().map(|p| Point::new(p.x, -p.y)).collect(),
        }
    }

    /// Rotation by `angle` about the origin followed by translation.
    pub fn rigid_motion(&self, angle: f64, shift: Point) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            points: self
                .points
                .iter()
                .map(|p| Point::new(c * p.x - s * p.y, s * p.x + c * p.y) + shift)
                .collect(),
        }
    }

    /// Same nodes traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }

    /// Replaces the node positions without re-validating; callers guarantee immersedness.
    pub(crate) fn from_points_unchecked(points: Vec<Point>) -> Self {
        Self { points }
    }
}

/// Signed angle turning from direction `a` to direction `b`, in `(-π, π]`.
pub fn turning_angle(a: &Point, b: &Point) -> f64 {
    let cross = a.x * b.y - a.y * b.x;
    let dot = a.dot(b);
    cross.atan2(dot)
}

/// Edge angles `θ_0, ..., θ_{N-1}`, continued edge to edge onto the nearest branch.
pub fn tangent_angles(curve: &DiscreteCurve) -> Vec<f64> {
    let p = curve.points();
    let mut out = Vec::with_capacity(p.len() - 1);
    let e0 = p[1] - p[0];
    let mut theta = e0.y.atan2(e0.x);
    out.push(theta);
    for i in 1..p.len() - 1 {
        let a = p[i] - p[i - 1];
        let b = p[i + 1] - p[i];
        theta += turning_angle(&a, &b);
        out.push(theta);
    }
    out
}

/// Turning angles at the interior nodes `1..N`.
pub fn turning_angles(curve: &DiscreteCurve) -> Vec<f64> {
    curve
        .points()
        .windows(3)
        .map(|w| turning_angle(&(w[1] - w[0]), &(w[2] - w[1])))
        .collect()
}

/// Signed curvature at the interior nodes: turning angle over dual length.
pub fn curvatures(curve: &DiscreteCurve) -> Vec<f64> {
    let h = curve.edge_lengths();
    turning_angles(curve)
        .iter()
        .enumerate()
        .map(|(j, a)| a / (0.5 * (h[j] + h[j + 1])))
        .collect()
}

/// Length, bending energy, penalized energy and total curvature of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricReport {
    pub length: f64,
    pub bending: f64,
    pub energy: f64,
    pub total_curvature: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub lambda: f64,
}

pub fn report(curve: &DiscreteCurve, lambda: f64) -> GeometricReport {
    let h = curve.edge_lengths();
    let length: f64 = h.iter().sum();
    let mut bending = 0.0;
    let mut total_curvature = 0.0;
    for (j, w) in curve.points().windows(3).enumerate() {
        let alpha = turning_angle(&(w[1] - w[0]), &(w[2] - w[1]));
        bending += 2.0 * alpha * alpha / (h[j] + h[j + 1]);
        total_curvature += alpha;
    }
    let interior = &curve.points()[1..curve.points().len() - 1];
    let (y_min, y_max) = interior
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.y), hi.max(p.y))
        });
    GeometricReport {
        length,
        bending,
        energy: bending + lambda * length,
        total_curvature,
        y_min,
        y_max,
        lambda,
    }
}

/// Dilation of all nodes by `rho > 0` about the origin.
pub fn rescale(curve: &DiscreteCurve, rho: f64) -> Result<DiscreteCurve> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!("scale factor must be positive, got {rho}")));
    }
    Ok(DiscreteCurve {
        points: curve.points().iter().map(|p| p * rho).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfPlaneTag {
    StrictUpper,
    StrictLower,
    Mixed,
}

impl HalfPlaneTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            HalfPlaneTag::StrictUpper => "upper",
            HalfPlaneTag::StrictLower => "lower",
            HalfPlaneTag::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "upper" => Some(HalfPlaneTag::StrictUpper),
            "lower" => Some(HalfPlaneTag::StrictLower),
            "mixed" => Some(HalfPlaneTag::Mixed),
            _ => None,
        }
    }
}

/// Location of the interior nodes relative to the axis line.
///
/// `margin` is the smallest interior distance to the line, positive for
/// [`HalfPlaneTag::StrictUpper`], negative for [`HalfPlaneTag::StrictLower`]
/// and zero for [`HalfPlaneTag::Mixed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneLocation {
    pub tag: HalfPlaneTag,
    pub margin: f64,
}

pub fn half_plane_location(curve: &DiscreteCurve) -> Result<HalfPlaneLocation> {
    for (index, p) in [(0, curve.start()), (curve.edges(), curve.end())] {
        if p.y.abs() >= AXIS_TOL {
            return Err(Error::EndpointOffAxis { index, y: p.y });
        }
    }
    let interior = &curve.points()[1..curve.points().len() - 1];
    let min_abs = interior.iter().map(|p| p.y.abs()).fold(f64::INFINITY, f64::min);
    let location = if interior.iter().all(|p| p.y > 0.0) {
        HalfPlaneLocation {
            tag: HalfPlaneTag::StrictUpper,
            margin: min_abs,
        }
    } else if interior.iter().all(|p| p.y < 0.0) {
        HalfPlaneLocation {
            tag: HalfPlaneTag::StrictLower,
            margin: -min_abs,
        }
    } else {
        HalfPlaneLocation {
            tag: HalfPlaneTag::Mixed,
            margin: 0.0,
        }
    };
    Ok(location)
}

/// Remeshes to `edges` edges of equal length along a natural cubic spline
/// through the input nodes. Endpoints are preserved exactly.
pub fn resample_uniform(curve: &DiscreteCurve, edges: usize) -> Result<DiscreteCurve> {
    if edges < DiscreteCurve::MIN_EDGES {
        return Err(Error::TooFewNodes {
            min: DiscreteCurve::MIN_EDGES,
            got: edges,
        });
    }
    let spline = spline::ChordSpline::new(curve.points());
    let mut params = spline.uniform_arclength_params(edges);
    let eval = |params: &[f64]| -> Vec<Point> {
        let mut pts: Vec<Point> = params.iter().map(|&t| spline.eval(t)).collect();
        pts[0] = curve.start();
        pts[edges] = curve.end();
        pts
    };
    let mut pts = eval(&params);
    // equalize chords: invert cumulative chord length against the parameter
    for _ in 0..30 {
        let mut cum = vec![0.0; edges + 1];
        for j in 0..edges {
            cum[j + 1] = cum[j] + (pts[j + 1] - pts[j]).norm();
        }
        let mean = cum[edges] / edges as f64;
        let spread = (0..edges)
            .map(|j| ((cum[j + 1] - cum[j]) / mean - 1.0).abs())
            .fold(0.0, f64::max);
        if spread < 0.1 * REMESH_TOL {
            break;
        }
        let mut next = params.clone();
        let mut seg = 0;
        for (j, t) in next.iter_mut().enumerate().take(edges).skip(1) {
            let target = mean * j as f64;
            while seg + 1 < edges && cum[seg + 1] < target {
                seg += 1;
            }
            let frac = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
            *t = params[seg] + frac * (params[seg + 1] - params[seg]);
        }
        params = next;
        pts = eval(&params);
    }
    DiscreteCurve::new(pts)
}

fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

fn directed_hausdorff(from: &DiscreteCurve, to: &DiscreteCurve) -> f64 {
    from.points()
        .iter()
        .map(|p| {
            to.points()
                .windows(2)
                .map(|w| point_segment_distance(p, &w[0], &w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polylines, evaluated from the
/// nodes of each to the edges of the other.
pub fn hausdorff(a: &DiscreteCurve, b: &DiscreteCurve) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Upper unit semicircle from `(0,0)` to `(2,0)`, traversed left to right
/// with `edges` equal chords.
pub fn semicircle(edges: usize) -> Result<DiscreteCurve> {
    DiscreteCurve::new(
        (0..=edges)
            .map(|i| {
                let phi = PI - PI * i as f64 / edges as f64;
                Point::new(1.0 + phi.cos(), phi.sin())
            })
            .collect(),
    )
}
