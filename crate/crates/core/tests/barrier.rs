use std::f64::consts::PI;

use proptest::prelude::*;

use elflow::barrier::{
    barrier_constants, energy_angle, energy_angle_gradient, AngleCurve, BarrierConfig,
};
use elflow::elastica::FigureEightConstants;

// Brute-force oracle: 24 sine modes on top of the linear angle, free
// rotation and length, SLSQP from 40 random starts, trapezoid rule on 4001
// points.
const M_HALF_AT_0: f64 = 14.170681681282655;
const M_FULL_AT_0: f64 = 10.603798381820166;
const M_HALF_AT_01: f64 = 13.962621916511427;

const F8: FigureEightConstants = FigureEightConstants {
    r_star: 4.562636593396884,
    e_star: 10.603754493428045,
};

#[test]
fn small_map_matches_fourier_oracle() {
    let cfg = BarrierConfig {
        ell_max: 0.1,
        ell_points: 3,
        r_points: 2,
        r_min_factor: 0.0,
        r_max_factor: 1.0,
        resolution: 512,
        rng_seed: 0,
    };
    let map = barrier_constants(&cfg, &F8).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(rel(map.rows[0].m_half, M_HALF_AT_0) < 1e-4);
    assert!(rel(map.m_full, M_FULL_AT_0) < 1e-4);
    assert!(rel(map.rows[2].m_half, M_HALF_AT_01) < 1e-4);
    assert!(rel(map.constants.m_star, M_HALF_AT_0 - M_FULL_AT_0) < 1e-3);
    assert!(map.rows.windows(2).all(|w| w[1].m_half < w[0].m_half));
    assert!(map.barrier_verified);
    assert!(map.figure_eight_minimal);
}

fn profile(amps: &[f64], m: usize) -> Vec<f64> {
    let mut phi: Vec<f64> = (0..=m)
        .map(|j| {
            let u = j as f64 / m as f64;
            amps.iter()
                .enumerate()
                .map(|(k, a)| a * ((k + 1) as f64 * PI * u).sin())
                .sum()
        })
        .collect();
    phi[0] = 0.0;
    phi[m] = 0.0;
    phi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_ignores_rotation(amps in prop::collection::vec(-1.0..1.0f64, 1..5), r in -8.0..8.0f64,
                               length in 0.2..5.0f64, c in -PI..PI) {
        let phi = profile(&amps, 64);
        let a = AngleCurve::new(0.0, phi.clone(), r, length).unwrap();
        let b = AngleCurve::new(c, phi, r, length).unwrap();
        prop_assert!((energy_angle(&a) - energy_angle(&b)).abs() <= 1e-12 * energy_angle(&a));
        let d = b.displacement();
        prop_assert!((a.displacement().norm() - d.norm()).abs() < 1e-12);
    }

    #[test]
    fn mirror_keeps_energy_and_flips_turning(amps in prop::collection::vec(-1.0..1.0f64, 1..5),
                                             r in -8.0..8.0f64, length in 0.2..5.0f64) {
        let a = AngleCurve::new(0.3, profile(&amps, 64), r, length).unwrap();
        let b = a.mirrored();
        prop_assert!((energy_angle(&a) - energy_angle(&b)).abs() <= 1e-12 * energy_angle(&a));
        prop_assert_eq!(b.r, -a.r);
    }

    #[test]
    fn energy_is_at_least_length_and_balanced_at_sqrt_dirichlet(amps in prop::collection::vec(-1.0..1.0f64, 1..5),
                                                                 r in -8.0..8.0f64) {
        let ac = AngleCurve::balanced(profile(&amps, 64), r).unwrap();
        prop_assert!(energy_angle(&ac) >= ac.length);
        prop_assert!(energy_angle_gradient(&ac).length.abs() < 1e-10);
    }
}
