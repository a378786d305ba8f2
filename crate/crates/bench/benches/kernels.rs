use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use elflow::barrier::{energy_angle, energy_angle_gradient};
use elflow::elastica::shoot_pinned;
use elflow::flow::{step, FlowConfig};
use elflow_bench::{detuned_arc, upper_loop, wavy_angle_curve};

fn flow_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow_step");
    group.sample_size(20);
    for edges in [64, 128, 256] {
        let curve = upper_loop(0.1, edges).expect("loop");
        let config = FlowConfig {
            nodes: edges,
            ..FlowConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(edges), &curve, |b, curve| {
            b.iter(|| step(black_box(curve), 1e-2, &config).expect("step"))
        });
    }
    group.finish();
}

fn shooting(c: &mut Criterion) {
    let seed = detuned_arc(0.3).expect("arc");
    c.bench_function("shoot_pinned_arc", |b| b.iter(|| shoot_pinned(0.3, black_box(seed)).expect("converged")));
}

fn angle_energy(c: &mut Criterion) {
    let mut group = c.benchmark_group("energy_angle");
    for m in [128, 512, 2048] {
        let ac = wavy_angle_curve(m, 2.0, 0.1).expect("angle curve");
        group.bench_with_input(BenchmarkId::new("value", m), &ac, |b, ac| b.iter(|| energy_angle(black_box(ac))));
        group.bench_with_input(BenchmarkId::new("gradient", m), &ac, |b, ac| {
            b.iter(|| energy_angle_gradient(black_box(ac)))
        });
    }
    group.finish();
}

criterion_group!(kernels, flow_step, shooting, angle_energy);
criterion_main!(kernels);
