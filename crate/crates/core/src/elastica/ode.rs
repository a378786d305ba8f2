//! Integration of the stationary equation `-2 k'' - k^3 + k = 0` written as the
//! first-order system `θ' = k, x' = cos θ, y' = sin θ, k' = w, w' = (k - k^3)/2`.

use serde::{Deserialize, Serialize};

use crate::curve::{DiscreteCurve, Point};
use crate::error::{Error, Result};

/// Unknowns of the pinned boundary value problem (λ = 1 normalization).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingState {
    /// Initial tangent angle.
    pub theta0: f64,
    /// Initial curvature derivative `k'(0)`.
    pub slope: f64,
    /// Total length.
    pub length: f64,
}

impl ShootingState {
    pub fn new(theta0: f64, slope: f64, length: f64) -> Self {
        Self {
            theta0,
            slope,
            length,
        }
    }

    pub fn mirrored(&self) -> Self {
        Self {
            theta0: -self.theta0,
            slope: -self.slope,
            length: self.length,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta0.is_finite() && self.slope.is_finite() && self.length.is_finite()
    }
}

/// `[θ, x, y, k, w]`
pub(crate) type OdeState = [f64; 5];

#[inline]
fn rhs(z: &OdeState) -> OdeState {
    let (s, c) = z[0].sin_cos();
    [z[3], c, s, z[4], 0.5 * (z[3] - z[3] * z[3] * z[3])]
}

#[inline]
pub(crate) fn rk4_step(z: &OdeState, h: f64) -> OdeState {
    let add = |a: &OdeState, b: &OdeState, t: f64| -> OdeState {
        [
            a[0] + t * b[0],
            a[1] + t * b[1],
            a[2] + t * b[2],
            a[3] + t * b[3],
            a[4] + t * b[4],
        ]
    };
    let k1 = rhs(z);
    let k2 = rhs(&add(z, &k1, 0.5 * h));
    let k3 = rhs(&add(z, &k2, 0.5 * h));
    let k4 = rhs(&add(z, &k3, h));
    let mut out = *z;
    for i in 0..5 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn initial(state: &ShootingState) -> OdeState {
    [state.theta0, 0.0, 0.0, 0.0, state.slope]
}

fn check_finite(z: &OdeState, at: f64) -> Result<()> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { at })
    }
}

/// State at `s = length` after `steps` RK4 steps.
pub(crate) fn integrate_end(state: &ShootingState, steps: usize) -> Result<OdeState> {
    let h = state.length / steps as f64;
    let mut z = initial(state);
    for i in 0..steps {
        z = rk4_step(&z, h);
        if i % 64 == 63 {
            check_finite(&z, (i + 1) as f64 * h)?;
        }
    }
    check_finite(&z, state.length)?;
    Ok(z)
}

/// Sampled trajectory of one integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub curve: DiscreteCurve,
    /// Curvature at the nodes, `steps + 1` values.
    pub curvature: Vec<f64>,
    /// Tangent angle at the nodes.
    pub theta: Vec<f64>,
    pub step: f64,
}

impl Trajectory {
    /// `∫ k² ds + L` by composite Simpson (trapezoid fallback for odd step counts).
    pub fn quadrature_energy(&self) -> f64 {
        let n = self.curvature.len() - 1;
        let sq: Vec<f64> = self.curvature.iter().map(|k| k * k).collect();
        let bending = if n.is_multiple_of(2) {
            let mut s = sq[0] + sq[n];
            for (i, v) in sq.iter().enumerate().take(n).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            s * self.step / 3.0
        } else {
            (sq.iter().sum::<f64>() - 0.5 * (sq[0] + sq[n])) * self.step
        };
        bending + self.step * n as f64
    }

    /// Max-norm residual of `-2 k'' - k^3 + k` by central differences.
    pub fn ode_residual(&self) -> f64 {
        let h2 = self.step * self.step;
        self.curvature
            .windows(3)
            .map(|w| {
                let kss = (w[2] - 2.0 * w[1] + w[0]) / h2;
                (-2.0 * kss - w[1].powi(3) + w[1]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Integrates the initial value problem from the origin with `k(0) = 0`.
pub fn integrate_elastica(state: &ShootingState, steps: usize) -> Result<Trajectory> {
    if steps < 64 {
        return Err(Error::InvalidArgument(format!("need at least 64 steps, got {steps}")));
    }
    if !(state.length > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "length must be positive, got {}",
            state.length
        )));
    }
    let h = state.length / steps as f64;
    let mut z = initial(state);
    let mut points = Vec::with_capacity(steps + 1);
    let mut curvature = Vec::with_capacity(steps + 1);
    let mut theta = Vec::with_capacity(steps + 1);
    points.push(Point::new(z[1], z[2]));
    curvature.push(z[3]);
    theta.push(z[0]);
    for i in 0..steps {
        z = rk4_step(&z, h);
        check_finite(&z, (i + 1) as f64 * h)?;
        points.push(Point::new(z[1], z[2]));
        curvature.push(z[3]);
        theta.push(z[0]);
    }
    Ok(Trajectory {
        curve: DiscreteCurve::new(points)?,
        curvature,
        theta,
        step: h,
    })
}

/// Shape data of the one-lobe solution with `k(0) = 0`, `k'(0) = slope`,
/// integrated up to the first return of `k` to zero, with `θ(0) = 0`.
#[derive(Debug, Clone, Copy)]
pub struct LobeShape {
    pub slope: f64,
    pub half_period: f64,
    pub total_curvature: f64,
    /// Endpoint displacement `(x, y)` at `θ(0) = 0`.
    pub chord: Point,
    /// Chord projected on the tangent at the midpoint; negative for crossed loops.
    pub signed_chord: f64,
}

impl LobeShape {
    /// Tangent angle that rotates the chord onto the positive x-axis.
    pub fn aligning_angle(&self) -> f64 {
        -self.chord.y.atan2(self.chord.x)
    }
}

/// Integrates one lobe with step `h` and locates the zero of `k` by bisection
/// on the last step.
pub fn lobe_shape(slope: f64, h: f64) -> Result<LobeShape> {
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::InvalidArgument("lobe needs a nonzero slope".into()));
    }
    let sign = slope.signum();
    let mut z: OdeState = [0.0, 0.0, 0.0, 0.0, slope];
    let mut s = 0.0;
    let max_len = 200.0;
    loop {
        let next = rk4_step(&z, h);
        check_finite(&next, s + h)?;
        if sign * next[3] <= 0.0 && s > 0.0 {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let zm = rk4_step(&z, mid);
                if sign * zm[3] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            let end = rk4_step(&z, t);
            let half_period = s + t;
            let tc = end[0];
            let mid_angle = 0.5 * tc;
            let chord = Point::new(end[1], end[2]);
            return Ok(LobeShape {
                slope,
                half_period,
                total_curvature: tc,
                chord,
                signed_chord: chord.x * mid_angle.cos() + chord.y * mid_angle.sin(),
            });
        }
        z = next;
        s += h;
        if s > max_len {
            return Err(Error::Divergence { at: s });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{report, tangent_angles};

    #[test]
    fn zero_slope_is_straight() {
        let t = integrate_elastica(&ShootingState::new(0.4, 0.0, 0.3), 128).unwrap();
        assert!(t.curvature.iter().all(|&k| k == 0.0));
        for th in tangent_angles(&t.curve) {
            assert!((th - 0.4).abs() < 1e-14);
        }
        assert!((report(&t.curve, 1.0).length - 0.3).abs() < 1e-14);
    }

    #[test]
    fn mirrored_state_gives_mirror_curve() {
        let s = ShootingState::new(0.3, 1.2, 4.0);
        let a = integrate_elastica(&s, 512).unwrap();
        let b = integrate_elastica(&s.mirrored(), 512).unwrap();
        for (p, q) in a.curve.points().iter().zip(b.curve.points()) {
            assert!((p.x - q.x).abs() < 1e-13 && (p.y + q.y).abs() < 1e-13);
        }
        let (ra, rb) = (report(&a.curve, 1.0), report(&b.curve, 1.0));
        assert!((ra.total_curvature + rb.total_curvature).abs() < 1e-12);
    }

    #[test]
    fn polyline_energy_matches_quadrature() {
        let s = ShootingState::new(0.0, 0.9, 4.5);
        let t = integrate_elastica(&s, 4096).unwrap();
        let e_poly = report(&t.curve, 1.0).energy;
        let e_quad = t.quadrature_energy();
        assert!((e_poly - e_quad).abs() / e_quad < 1e-4, "{e_poly} {e_quad}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(integrate_elastica(&ShootingState::new(0.0, 1.0, 1.0), 10).is_err());
        assert!(integrate_elastica(&ShootingState::new(0.0, 1.0, -1.0), 100).is_err());
        assert!(matches!(
            integrate_elastica(&ShootingState::new(0.0, f64::NAN, 1.0), 100),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn lobe_shape_is_symmetric() {
        let lobe = lobe_shape(1.0, 1e-3).unwrap();
        // a lobe of k(s) ends where it starts: k(L) = 0 and w(L) = -w(0)
        let end = integrate_end(&ShootingState::new(0.0, 1.0, lobe.half_period), 4000).unwrap();
        assert!(end[3].abs() < 1e-9);
        assert!((end[4] + 1.0).abs() < 1e-9);
        assert!((end[0] - lobe.total_curvature).abs() < 1e-9);
    }
}
