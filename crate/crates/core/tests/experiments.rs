use std::fs;
use std::path::Path;

use elflow::experiments::{
    build_initial_datum, evaluate_checks, render_report, run_theorem_experiment, sweep_ell, BarrierRefs, Estimates,
    PerturbMode, ReportSummary, ScenarioConfig, ScenarioConstants, Verdict, SUMMARY_FILE, SWEEP_HEADER,
};

// Frozen output of compute_constants with the default estimate grid.
const CONSTANTS: ScenarioConstants = ScenarioConstants {
    barrier: BarrierRefs {
        m_star: 3.566659970565361,
        e_star: 10.603754493428045,
        r_star: 4.562636593396884,
    },
    estimates: Estimates {
        c1: 0.3,
        c2: 0.35,
        usable_ell: 0.3,
        ell_admissible: 0.35,
    },
};

fn scenario(nodes: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        constants: Some(CONSTANTS),
        ..ScenarioConfig::default()
    };
    cfg.flow.nodes = nodes;
    cfg
}

#[test]
fn energy_drop_along_the_unstable_mode_is_quadratic() {
    let r_star = CONSTANTS.barrier.r_star;
    let a = build_initial_datum(0.1, 0.04, PerturbMode::HessianDirection, 128, r_star).unwrap();
    let b = build_initial_datum(0.1, 0.02, PerturbMode::HessianDirection, 128, r_star).unwrap();
    assert!(a.eigenvalue.unwrap() < 0.0);
    assert!(a.checks.all_pass() && b.checks.all_pass());
    assert_eq!((a.halvings, b.halvings), (0, 0));
    let ratio = a.checks.energy_margin / b.checks.energy_margin;
    assert!((3.6..4.4).contains(&ratio), "margin ratio {ratio}");
}

#[test]
fn unperturbed_loop_fails_the_energy_check() {
    let d = build_initial_datum(0.1, 0.05, PerturbMode::HessianDirection, 128, CONSTANTS.barrier.r_star).unwrap();
    let c = evaluate_checks(&d.reference, &d.reference, CONSTANTS.barrier.r_star).unwrap();
    assert!(!c.energy_below_loop);
    assert!(c.end_curvature_zero && c.tc_within_quarter_r_star && c.strictly_upper);
}

#[test]
fn bad_eps_is_rejected() {
    assert!(build_initial_datum(0.1, 0.0, PerturbMode::DownwardBump, 64, 4.5).is_err());
    assert!(run_theorem_experiment(&ScenarioConfig {
        eps: -1.0,
        ..scenario(64)
    })
    .is_err());
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn migrating_run_renders_deterministically() {
    let cfg = scenario(128);
    let first = run_theorem_experiment(&cfg).unwrap();
    assert_eq!(first.verdict, Verdict::Migrated, "{:?}", first.failure);
    let second = run_theorem_experiment(&cfg).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    render_report(&first, a.path()).unwrap();
    render_report(&second, b.path()).unwrap();
    let la = listing(a.path());
    assert_eq!(la, listing(b.path()));
    let svgs = la.iter().filter(|(n, _)| n.ends_with(".svg")).count();
    assert!(svgs >= 4, "{svgs} frames");
    for name in ["near_t0.svg", "near_t1.svg", "timeseries.csv"] {
        assert!(la.iter().any(|(n, _)| n == name), "{name} missing");
    }
    let summary: ReportSummary = serde_json::from_slice(&fs::read(a.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary, first.summary());
    assert!(summary.t0_est.unwrap() < summary.t1_est.unwrap());
}

#[test]
fn sweep_writes_one_row_per_ell() {
    let report = sweep_ell(&[0.1, 0.2], &scenario(64)).unwrap();
    assert_eq!(report.rows.len(), 2);
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(report.rows.iter().all(|r| r.verdict == Verdict::Migrated), "{:?}", report.rows);
    assert_eq!(report.largest_migrating_ell, Some(0.2));
}
