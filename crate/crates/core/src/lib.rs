//! Numerical laboratory for length-penalized elastic flows of planar open
//! curves with pinned endpoints and vanishing end curvature.
//!
//! * [`curve`]: polylines and their functionals (length, bending energy, total curvature).
//! * [`elastica`]: stationary solutions by shooting, their classification and the
//!   half-fold figure-eight.
//! * [`barrier`]: minimum energy at prescribed endpoint distance and total curvature.
//! * [`flow`]: minimizing-movement discretization of the flow.
//! * [`experiments`]: the migration construction end to end.
//! * [`svg`]: plain SVG frames of curves.

pub mod barrier;
pub mod curve;
pub mod elastica;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod linalg;
pub mod optim;
pub mod svg;

pub use curve::{
    half_plane_location, report, rescale, resample_uniform, tangent_angles, DiscreteCurve,
    GeometricReport, HalfPlaneLocation, HalfPlaneTag, Point,
};
pub use error::{Error, Result};
