//! Minimum energy over curves with prescribed endpoint distance and total
//! curvature, `m(ℓ, r)`, and the barrier constants derived from it.
//!
//! Competitors are written in the angle representation
//! `θ(u) = c + r·u + φ(u)`, `φ(0) = φ(1) = 0`, so the total curvature is fixed
//! by construction and only the two closure constraints remain.

mod map;
mod solver;

pub use map::{
    admissible_ell_bound, barrier_c1, barrier_constants, discontinuity_probe, BarrierCell,
    BarrierConfig, BarrierConstants, BarrierMap, BarrierRow, DiscontinuityEvidence, MAP_HEADER,
};
pub use solver::{
    continue_in_r, default_seeds, lobe_profile, minimize_constrained, minimize_from, warm_seed,
    AugmentedLagrangian, ConstrainedMin, ConstrainedOptions,
};

use crate::curve::{DiscreteCurve, Point};
use crate::error::{Error, Result};

/// Tangent-angle-plus-length representation on the uniform grid `u_j = j/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleCurve {
    pub c: f64,
    /// `M + 1` samples with both end values exactly zero.
    pub phi: Vec<f64>,
    pub r: f64,
    pub length: f64,
}

/// Gradient of [`energy_angle`] with respect to `(φ interior, c, Lc)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGradient {
    pub phi: Vec<f64>,
    pub c: f64,
    pub length: f64,
}

impl AngleCurve {
    pub fn new(c: f64, phi: Vec<f64>, r: f64, length: f64) -> Result<Self> {
        if phi.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "profile needs at least 3 samples, got {}",
                phi.len()
            )));
        }
        if phi[0] != 0.0 || phi[phi.len() - 1] != 0.0 {
            return Err(Error::InvalidArgument("profile must vanish at both ends".into()));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidArgument(format!("length must be positive, got {length}")));
        }
        if !c.is_finite() || !r.is_finite() || phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite angle data".into()));
        }
        Ok(Self { c, phi, r, length })
    }

    /// Grid resolution `M`.
    pub fn resolution(&self) -> usize {
        self.phi.len() - 1
    }

    pub fn theta(&self) -> Vec<f64> {
        theta_samples(self.c, &self.phi, self.r)
    }

    /// `∫ θ'(u)² du` by forward differences.
    pub fn dirichlet(&self) -> f64 {
        dirichlet(&self.theta())
    }

    /// Trapezoidal `(∫ cos θ du, ∫ sin θ du)`.
    pub fn closure(&self) -> (f64, f64) {
        closure(&self.theta())
    }

    pub fn bending(&self) -> f64 {
        self.dirichlet() / self.length
    }

    /// Endpoint displacement `Lc·(∫cos θ, ∫sin θ)`.
    pub fn displacement(&self) -> Point {
        let (c, s) = self.closure();
        Point::new(self.length * c, self.length * s)
    }

    /// Polyline whose edge vectors are trapezoidal averages of the unit
    /// tangents, so its end point is exactly [`Self::displacement`].
    pub fn to_curve(&self) -> Result<DiscreteCurve> {
        let theta = self.theta();
        let m = theta.len() - 1;
        let h = self.length / m as f64;
        let mut points = Vec::with_capacity(m + 1);
        let mut p = Point::zeros();
        points.push(p);
        for j in 0..m {
            let (s0, c0) = theta[j].sin_cos();
            let (s1, c1) = theta[j + 1].sin_cos();
            p += Point::new(0.5 * h * (c0 + c1), 0.5 * h * (s0 + s1));
            points.push(p);
        }
        DiscreteCurve::new(points)
    }

    /// Mirror image across the horizontal axis: `(c, φ, r) → (-c, -φ, -r)`.
    pub fn mirrored(&self) -> Self {
        Self {
            c: -self.c,
            phi: self.phi.iter().map(|v| -v).collect(),
            r: -self.r,
            length: self.length,
        }
    }

    /// Rotates so the closure vector points along `+x` and sets the length
    /// to close at distance `ell`; for `ell = 0` (or a nearly closed shape)
    /// the length minimizing `I/Lc + Lc` is used instead.
    pub fn aligned(phi: Vec<f64>, r: f64, ell: f64) -> Result<Self> {
        let probe = theta_samples(0.0, &phi, r);
        let (zc, zs) = closure(&probe);
        let modulus = zc.hypot(zs);
        let c = if modulus > 0.0 { -zs.atan2(zc) } else { 0.0 };
        let i = dirichlet(&probe);
        let length = if ell > 0.0 && modulus > 1e-3 {
            ell / modulus
        } else {
            i.sqrt()
        };
        Self::new(c, phi, r, length)
    }

    /// Same rotation as [`Self::aligned`] with a prescribed length.
    pub fn aligned_with_length(phi: Vec<f64>, r: f64, length: f64) -> Result<Self> {
        let probe = theta_samples(0.0, &phi, r);
        let (zc, zs) = closure(&probe);
        let c = if zc.hypot(zs) > 0.0 { -zs.atan2(zc) } else { 0.0 };
        Self::new(c, phi, r, length)
    }

    /// Aligned, with the length `√I` that minimizes `I/Lc + Lc` for the shape.
    pub fn balanced(phi: Vec<f64>, r: f64) -> Result<Self> {
        let i = dirichlet(&theta_samples(0.0, &phi, r));
        Self::aligned_with_length(phi, r, i.sqrt())
    }
}

pub(crate) fn theta_samples(c: f64, phi: &[f64], r: f64) -> Vec<f64> {
    let m = (phi.len() - 1) as f64;
    phi.iter()
        .enumerate()
        .map(|(j, p)| c + r * j as f64 / m + p)
        .collect()
}

pub(crate) fn dirichlet(theta: &[f64]) -> f64 {
    let m = (theta.len() - 1) as f64;
    m * theta.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>()
}

pub(crate) fn trapezoid_weight(j: usize, m: usize) -> f64 {
    if j == 0 || j == m {
        0.5 / m as f64
    } else {
        1.0 / m as f64
    }
}

pub(crate) fn closure(theta: &[f64]) -> (f64, f64) {
    let m = theta.len() - 1;
    theta.iter().enumerate().fold((0.0, 0.0), |(c, s), (j, t)| {
        let w = trapezoid_weight(j, m);
        (c + w * t.cos(), s + w * t.sin())
    })
}

/// `E = (1/Lc)·∫θ'² du + Lc` (λ = 1).
pub fn energy_angle(ac: &AngleCurve) -> f64 {
    ac.dirichlet() / ac.length + ac.length
}

pub fn energy_angle_gradient(ac: &AngleCurve) -> AngleGradient {
    let theta = ac.theta();
    let m = theta.len() - 1;
    let mf = m as f64;
    let i = dirichlet(&theta);
    let phi = (1..m)
        .map(|j| 2.0 * mf * ((theta[j] - theta[j - 1]) - (theta[j + 1] - theta[j])) / ac.length)
        .collect();
    AngleGradient {
        phi,
        c: 0.0,
        length: 1.0 - i / (ac.length * ac.length),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::finite_difference_gradient;
    use std::f64::consts::PI;

    #[test]
    fn segment_energy() {
        let ac = AngleCurve::new(0.0, vec![0.0; 65], 0.0, 0.3).unwrap();
        assert_eq!(energy_angle(&ac), 0.3);
        let p = ac.displacement();
        assert!((p.x - 0.3).abs() < 1e-15 && p.y == 0.0);
    }

    #[test]
    fn semicircle_energy_is_two_pi() {
        let mut last = f64::INFINITY;
        for m in [32, 64, 128, 256] {
            let ac = AngleCurve::new(PI / 2.0, vec![0.0; m + 1], -PI, PI).unwrap();
            assert!((energy_angle(&ac) - 2.0 * PI).abs() < 1e-12);
            let d = ac.displacement();
            let err = (d.x - 2.0).abs();
            assert!(err < 10.0 / (m * m) as f64 && err < last, "{d:?}");
            last = err;
        }
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(AngleCurve::new(0.0, vec![0.1, 0.0, 0.0], 0.0, 1.0).is_err());
        assert!(AngleCurve::new(0.0, vec![0.0, 0.0, 0.0], 0.0, 0.0).is_err());
        assert!(AngleCurve::new(0.0, vec![0.0, 0.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn gradient_matches_differences() {
        let m = 32;
        let mut phi: Vec<f64> = (0..=m)
            .map(|j| (PI * j as f64 / m as f64).sin() * 0.7)
            .collect();
        phi[m] = 0.0;
        let ac = AngleCurve::new(0.3, phi, 2.0, 1.7).unwrap();
        let g = energy_angle_gradient(&ac);
        let pack = |ac: &AngleCurve| {
            let mut x = ac.phi[1..m].to_vec();
            x.push(ac.c);
            x.push(ac.length);
            x
        };
        let f = |x: &[f64]| {
            let mut phi = vec![0.0; m + 1];
            phi[1..m].copy_from_slice(&x[..m - 1]);
            energy_angle(&AngleCurve::new(x[m - 1], phi, 2.0, x[m]).unwrap())
        };
        let fd = finite_difference_gradient(f, &pack(&ac), 1e-6);
        for j in 0..m - 1 {
            assert!((fd[j] - g.phi[j]).abs() < 1e-6 * g.phi[j].abs().max(1.0));
        }
        assert!(fd[m - 1].abs() < 1e-8);
        assert!((fd[m] - g.length).abs() < 1e-7);
    }

    #[test]
    fn curve_ends_at_displacement() {
        let m = 64;
        let mut phi: Vec<f64> = (0..=m)
            .map(|j| (2.0 * PI * j as f64 / m as f64).sin() * 0.4)
            .collect();
        phi[m] = 0.0;
        let ac = AngleCurve::aligned(phi, 1.5, 0.4).unwrap();
        let curve = ac.to_curve().unwrap();
        assert!((curve.end() - Point::new(0.4, 0.0)).norm() < 1e-12);
        assert_eq!(curve.edges(), m);
    }
}
