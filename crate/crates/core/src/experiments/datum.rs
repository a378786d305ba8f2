//! Perturbations of the upper loop that serve as initial data.

use serde::{Deserialize, Serialize};

use crate::curve::{half_plane_location, report, DiscreteCurve, HalfPlaneTag};
use crate::elastica::enumerate_low_energy;
use crate::error::{Error, Result};
use crate::flow::movement::{constrained_lowest_mode, critical_point, displaced, Polygon};
use crate::flow::{equilateral, natural_bc_residual};

/// Nodes at each end that the bumps leave in place; the end-curvature
/// extrapolation only sees these.
pub const FROZEN_END_NODES: usize = 4;

/// Each failed attempt halves `ε`, at most this many times.
pub const MAX_EPS_HALVINGS: usize = 10;

/// Tolerance of the end-curvature check, relative to the unperturbed loop.
pub const END_CURVATURE_TOL: f64 = 1e-8;

const BUMP_HALF_WIDTH: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PerturbMode {
    /// Most negative direction of the second variation of the equal-edge
    /// polygon energy among variations that keep both endpoints.
    HessianDirection,
    /// Smooth downward bump centred a quarter of the way along the loop.
    DownwardBump,
    /// Symmetric upward bump at the top of the loop (control).
    UpwardBump,
}

impl PerturbMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hessian" | "hessianDirection" => Some(Self::HessianDirection),
            "bump" | "down" | "downwardBump" => Some(Self::DownwardBump),
            "up" | "upwardBump" => Some(Self::UpwardBump),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::HessianDirection => "hessian",
            Self::DownwardBump => "bump",
            Self::UpwardBump => "up",
        }
    }

    /// Whether all four checks must hold. A localized bump raises the
    /// energy of the loop for every amplitude, so for bumps the energy
    /// check is only recorded.
    pub fn requires_energy_drop(&self) -> bool {
        matches!(self, Self::HessianDirection)
    }

    /// The control keeps its amplitude: only strict containment in the
    /// upper half-plane is enforced, the other checks are recorded.
    pub fn is_control(&self) -> bool {
        matches!(self, Self::UpwardBump)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InitialChecks {
    pub energy_below_loop: bool,
    /// `E[loop] - E[γ0]`.
    pub energy_margin: f64,
    pub end_curvature_zero: bool,
    /// Extrapolated end curvature of `γ0` minus that of the loop at the
    /// same resolution, the latter rescaled to the edge length of `γ0`.
    pub end_curvature_residual: f64,
    pub tc_within_quarter_r_star: bool,
    /// `TC[γ0] - (TC[loop] - r_*/4)`.
    pub tc_margin: f64,
    pub strictly_upper: bool,
    /// Smallest height of an interior node.
    pub min_height: f64,
}

impl InitialChecks {
    pub fn all_pass(&self) -> bool {
        self.energy_below_loop && self.end_curvature_zero && self.tc_within_quarter_r_star && self.strictly_upper
    }

    fn acceptable(&self, mode: PerturbMode) -> bool {
        if mode.is_control() {
            return self.strictly_upper;
        }
        (self.energy_below_loop || !mode.requires_energy_drop())
            && self.end_curvature_zero
            && self.tc_within_quarter_r_star
            && self.strictly_upper
    }
}

#[derive(Debug, Clone)]
pub struct InitialDatum {
    /// Equal-edge polygon the flow starts from.
    pub curve: DiscreteCurve,
    /// The upper loop at the same resolution.
    pub reference: DiscreteCurve,
    pub epsilon: f64,
    pub halvings: usize,
    pub checks: InitialChecks,
    /// Lowest eigenvalue of the second variation in edge-angle coordinates
    /// (Hessian mode only).
    pub eigenvalue: Option<f64>,
}

/// `cos²` bump of unit height centred at arclength fraction `center`.
fn bump_profile(curve: &DiscreteCurve, center: f64) -> Vec<f64> {
    let h = curve.edge_lengths();
    let total: f64 = h.iter().sum();
    let mut s = 0.0;
    let mut out = vec![0.0; curve.edges() + 1];
    for i in 1..curve.edges() {
        s += h[i - 1];
        let u = (s / total - center) / BUMP_HALF_WIDTH;
        if u.abs() < 1.0 {
            out[i] = (std::f64::consts::FRAC_PI_2 * u).cos().powi(2);
        }
    }
    for v in out.iter_mut().take(FROZEN_END_NODES) {
        *v = 0.0;
    }
    let n = out.len();
    for v in out.iter_mut().skip(n - FROZEN_END_NODES) {
        *v = 0.0;
    }
    out
}

pub fn evaluate_checks(datum: &DiscreteCurve, reference: &DiscreteCurve, r_star: f64) -> Result<InitialChecks> {
    let d = report(datum, 1.0);
    let r = report(reference, 1.0);
    let h_ratio = r.length / d.length;
    let residual = natural_bc_residual(datum) - natural_bc_residual(reference) * h_ratio;
    let tc_margin = d.total_curvature - (r.total_curvature - 0.25 * r_star);
    let loc = half_plane_location(datum)?;
    Ok(InitialChecks {
        energy_below_loop: d.energy < r.energy,
        energy_margin: r.energy - d.energy,
        end_curvature_zero: residual.abs() <= END_CURVATURE_TOL,
        end_curvature_residual: residual,
        tc_within_quarter_r_star: tc_margin >= 0.0,
        tc_margin,
        strictly_upper: loc.tag == HalfPlaneTag::StrictUpper,
        min_height: d.y_min,
    })
}

/// Perturbs the upper loop at `ell` (normalized units) by `eps` in the given
/// mode, halving `eps` until the checks hold.
pub fn build_initial_datum(
    ell: f64,
    eps: f64,
    mode: PerturbMode,
    edges: usize,
    r_star: f64,
) -> Result<InitialDatum> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let catalogue = enumerate_low_energy(ell)?;
    let start = Polygon::from_curve(&catalogue.loop_plus.sampled(edges)?, edges, ell)?;
    let critical = critical_point(&start, ell, 1e-12, 30)?;
    let reference = critical.curve(ell)?;
    let field = match mode {
        PerturbMode::HessianDirection => {
            let (dtheta, dh, lambda) = constrained_lowest_mode(&critical, ell)?;
            Direction::Mode(dtheta, dh, lambda)
        }
        PerturbMode::DownwardBump => Direction::Vertical(bump_profile(&reference, 0.25), -1.0),
        PerturbMode::UpwardBump => Direction::Vertical(bump_profile(&reference, 0.5), 1.0),
    };
    let eigenvalue = match &field {
        Direction::Mode(_, _, lambda) => Some(*lambda),
        Direction::Vertical(..) => None,
    };
    let mut last = None;
    for halvings in 0..=MAX_EPS_HALVINGS {
        let e = eps * 0.5f64.powi(halvings as i32);
        let candidate = match &field {
            Direction::Mode(dtheta, dh, _) => displaced(&critical, ell, dtheta, *dh, e).and_then(|p| p.curve(ell)),
            Direction::Vertical(b, sign) => {
                let mut pts = reference.points().to_vec();
                for i in 1..edges {
                    pts[i].y += sign * e * b[i];
                }
                DiscreteCurve::new(pts).and_then(|c| equilateral(&c, edges))
            }
        };
        let Ok(curve) = candidate else {
            continue;
        };
        let checks = evaluate_checks(&curve, &reference, r_star)?;
        if checks.acceptable(mode) {
            return Ok(InitialDatum {
                curve,
                reference,
                epsilon: e,
                halvings,
                checks,
                eigenvalue,
            });
        }
        last = Some(checks);
    }
    Err(Error::PreparationFailure(match last {
        Some(c) => format!(
            "checks still failing at eps = {:e}: energy margin {:e}, end curvature {:e}, TC margin {:e}, min height {:e}",
            eps * 0.5f64.powi(MAX_EPS_HALVINGS as i32),
            c.energy_margin,
            c.end_curvature_residual,
            c.tc_margin,
            c.min_height
        ),
        None => "every perturbation degenerated".into(),
    }))
}

enum Direction {
    Mode(Vec<f64>, f64, f64),
    Vertical(Vec<f64>, f64),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_parse() {
        for m in [PerturbMode::HessianDirection, PerturbMode::DownwardBump, PerturbMode::UpwardBump] {
            assert_eq!(PerturbMode::parse(m.as_str()), Some(m));
        }
        assert_eq!(PerturbMode::parse("sideways"), None);
    }

    #[test]
    fn bump_vanishes_near_ends() {
        let c = DiscreteCurve::segment(1.0, 64).unwrap();
        let b = bump_profile(&c, 0.5);
        assert!(b[..FROZEN_END_NODES].iter().all(|&v| v == 0.0));
        assert!((b[32] - 1.0).abs() < 1e-12);
        assert!(b.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
