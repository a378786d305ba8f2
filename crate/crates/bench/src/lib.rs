//! Fixtures shared by the benchmarks.

use elflow::barrier::AngleCurve;
use elflow::elastica::{enumerate_low_energy, ShootingState};
use elflow::flow::equilateral;
use elflow::{DiscreteCurve, Result};

/// Equal-edge polygon through the upper loop at `ell`.
pub fn upper_loop(ell: f64, edges: usize) -> Result<DiscreteCurve> {
    let cat = enumerate_low_energy(ell)?;
    equilateral(&cat.loop_plus.sampled(edges)?, edges)
}

/// Shooting state of the upper arc at `ell`, detuned by one percent so that
/// the Newton iteration has work to do.
pub fn detuned_arc(ell: f64) -> Result<ShootingState> {
    let s = enumerate_low_energy(ell)?.arc_plus.shooting;
    Ok(ShootingState::new(s.theta0 * 1.01, s.slope * 1.01, s.length * 1.01))
}

/// Closed-up angle curve with a few sine modes at resolution `m`.
pub fn wavy_angle_curve(m: usize, r: f64, ell: f64) -> Result<AngleCurve> {
    let mut phi: Vec<f64> = (0..=m)
        .map(|j| {
            let u = j as f64 / m as f64;
            let s = std::f64::consts::PI * u;
            0.8 * s.sin() + 0.3 * (2.0 * s).sin() - 0.1 * (3.0 * s).sin()
        })
        .collect();
    phi[0] = 0.0;
    phi[m] = 0.0;
    AngleCurve::aligned(phi, r, ell)
}
