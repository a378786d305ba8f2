use std::f64::consts::PI;

use proptest::prelude::*;

use elflow::curve::hausdorff;
use elflow::elastica::{enumerate_low_energy, ElasticaClass};
use elflow::flow::{equilateral, natural_bc_residual, run, step, FlowConfig};
use elflow::{report, DiscreteCurve, Point};

fn bumped_segment(ell: f64, edges: usize, amps: &[f64]) -> DiscreteCurve {
    let pts = (0..=edges)
        .map(|i| {
            let u = i as f64 / edges as f64;
            let y: f64 = amps
                .iter()
                .enumerate()
                .map(|(k, a)| a * ((k + 1) as f64 * PI * u).sin())
                .sum();
            Point::new(ell * u, if i == 0 || i == edges { 0.0 } else { y })
        })
        .collect();
    DiscreteCurve::new(pts).unwrap()
}

fn lower_arc(ell: f64, edges: usize) -> DiscreteCurve {
    let cat = enumerate_low_energy(ell).unwrap();
    equilateral(&cat.arc_minus.sampled(edges).unwrap(), edges).unwrap()
}

fn drift(start: &DiscreteCurve, steps: usize, tau: f64) -> f64 {
    let config = FlowConfig {
        nodes: start.edges(),
        ..FlowConfig::default()
    };
    let mut c = start.clone();
    for _ in 0..steps {
        c = step(&c, tau, &config).unwrap().0;
    }
    hausdorff(start, &c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn implicit_step_never_raises_energy(amps in prop::collection::vec(-0.2..0.2f64, 1..4),
                                         tau in 1e-4..1e-1f64) {
        let c = bumped_segment(1.0, 32, &amps);
        let config = FlowConfig { nodes: 32, ..FlowConfig::default() };
        let (next, info) = step(&c, tau, &config).unwrap();
        prop_assert!(info.energy_after <= info.energy_before + 1e-12);
        prop_assert_eq!(next.start(), Point::zeros());
        prop_assert_eq!(next.end(), Point::new(1.0, 0.0));
        prop_assert!(next.quasi_uniformity() < 1.0 + 1e-9);
    }

    #[test]
    fn report_is_invariant_under_rigid_motions(amps in prop::collection::vec(-0.5..0.5f64, 1..4),
                                               angle in -PI..PI, dx in -3.0..3.0f64, dy in -3.0..3.0f64) {
        let c = bumped_segment(0.7, 48, &amps);
        let a = report(&c, 1.0);
        let b = report(&c.rigid_motion(angle, Point::new(dx, dy)), 1.0);
        prop_assert!((a.energy - b.energy).abs() < 1e-10 * a.energy);
        prop_assert!((a.total_curvature - b.total_curvature).abs() < 1e-10);
        let m = report(&c.reflect_axis(), 1.0);
        prop_assert!((m.total_curvature + a.total_curvature).abs() < 1e-12);
        prop_assert!((m.energy - a.energy).abs() < 1e-12 * a.energy);
    }
}

#[test]
fn arc_drift_is_second_order_in_the_edge_length() {
    let coarse = drift(&lower_arc(0.1, 64), 300, 1e-2);
    let fine = drift(&lower_arc(0.1, 128), 300, 1e-2);
    let ratio = coarse / fine;
    assert!((3.0..5.5).contains(&ratio), "{coarse:e} / {fine:e} = {ratio}");
}

#[test]
fn perturbed_upper_arc_returns_to_it() {
    let cat = enumerate_low_energy(0.3).unwrap();
    let arc = cat.arc_plus.sampled(128).unwrap();
    let pts = arc
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let u = i as f64 / 128.0;
            *p + Point::new(0.0, 0.02 * (PI * u).sin().powi(2))
        })
        .collect();
    let start = DiscreteCurve::new(pts).unwrap();
    let config = FlowConfig {
        nodes: 128,
        ..FlowConfig::default()
    };
    let result = run(&start, &config).unwrap();
    assert_eq!(result.limit_class, Some(ElasticaClass::ArcPlus));
    assert!(result.max_energy_increase() <= 1e-10);
    for w in result.samples.windows(2) {
        assert!(w[1].energy <= w[0].energy + 1e-10);
    }
}

#[test]
fn natural_boundary_condition_improves_with_resolution() {
    let residual = |n: usize| {
        let config = FlowConfig {
            nodes: n,
            ..FlowConfig::default()
        };
        let start = bumped_segment(0.3, n, &[0.6, 0.0, 0.1]);
        natural_bc_residual(&run(&start, &config).unwrap().final_curve)
    };
    let coarse = residual(64);
    let fine = residual(128);
    assert!(fine < coarse / 3.0, "{coarse:e} -> {fine:e}");
}
