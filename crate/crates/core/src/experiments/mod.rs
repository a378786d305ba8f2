//! The migration construction end to end: barrier constants, a perturbed
//! upper loop as initial datum, the flow, and a verdict on where it ended.
//!
//! Everything is computed at `λ = 1` with endpoint distance `√λ·ℓ` and mapped
//! back with `E_λ[γ] = √λ·E_1[√λ·γ]`, `t_λ = t_1/λ²`.

mod datum;
mod render;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier::{barrier_constants, BarrierConfig};
use crate::curve::{rescale, HalfPlaneTag};
use crate::elastica::{figure_eight, loop_convergence_sweep, threshold_ell, ElasticaClass};
use crate::error::{Error, Result};
use crate::flow::{detect_migration, run, FlowConfig, FlowResult, FlowSample};

pub use datum::{
    build_initial_datum, evaluate_checks, InitialChecks, InitialDatum, PerturbMode,
    END_CURVATURE_TOL, FROZEN_END_NODES, MAX_EPS_HALVINGS,
};
pub use render::{render_report, SUMMARY_FILE, TIMESERIES_FILE};

/// Slack on the energy side of the barrier cross-check.
pub const BARRIER_CHECK_TOL: f64 = 1e-9;

/// Figure-eight and barrier constants at `λ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BarrierRefs {
    pub m_star: f64,
    pub e_star: f64,
    pub r_star: f64,
}

/// Empirical versions of the smallness thresholds on `ℓ`, at `λ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Estimates {
    /// Largest probed `ℓ` up to which `m(ℓ, r_*/2) ≥ E_* + m_*/2`.
    pub c1: f64,
    /// Largest probed `ℓ` up to which the upper loop is within `m_*/2` in
    /// energy and `r_*/4` in total curvature of the figure-eight.
    pub c2: f64,
    /// `min(c1, c2)`.
    pub usable_ell: f64,
    /// Largest probed `ℓ` up to which `max_{r∈[0,r_*]} m(ℓ, r) ≥ E[loop]`.
    pub ell_admissible: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioConstants {
    pub barrier: BarrierRefs,
    pub estimates: Estimates,
}

/// Grid of the small barrier map behind [`Estimates`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct EstimateConfig {
    pub ell_max: f64,
    pub ell_points: usize,
    pub r_points: usize,
    pub resolution: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            ell_max: 0.35,
            ell_points: 8,
            r_points: 5,
            resolution: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ScenarioConfig {
    pub ell: f64,
    pub lambda: f64,
    /// Largest node displacement of the perturbation.
    pub eps: f64,
    pub perturb_mode: PerturbMode,
    /// Flow parameters in normalized (`λ = 1`) units.
    pub flow: FlowConfig,
    /// Seeds the multi-start of the barrier minimizations.
    pub rng_seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Precomputed constants; computed from `estimate` when absent.
    pub constants: Option<ScenarioConstants>,
    pub estimate: EstimateConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            ell: 0.1,
            lambda: 1.0,
            eps: 0.05,
            perturb_mode: PerturbMode::HessianDirection,
            flow: FlowConfig {
                snapshot_every: 5,
                ..FlowConfig::default()
            },
            rng_seed: 0,
            output_dir: None,
            constants: None,
            estimate: EstimateConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Endpoint distance of the equivalent problem at `λ = 1`.
    pub fn normalized_ell(&self) -> f64 {
        self.lambda.sqrt() * self.ell
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("ell", self.ell), ("lambda", self.lambda), ("eps", self.eps)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        let bound = threshold_ell();
        if self.normalized_ell() >= bound {
            return Err(Error::InvalidArgument(format!(
                "sqrt(lambda)*ell = {} must stay below {bound:.5}",
                self.normalized_ell()
            )));
        }
        self.flow.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Migrated,
    StayedUpper,
    ConvergedToSegment,
    Unresolved,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Migrated => "Migrated",
            Self::StayedUpper => "StayedUpper",
            Self::ConvergedToSegment => "ConvergedToSegment",
            Self::Unresolved => "Unresolved",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Conditions linking the datum to the barrier: `E[γ0] < E_* + m_*/2` and
/// `TC[γ0] ≥ r_*/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BarrierEntry {
    pub energy_below_barrier: bool,
    pub energy_margin: f64,
    pub tc_above_half: bool,
    pub tc_margin: f64,
    /// `√λ·ℓ ≤ usableEll`.
    pub ell_within_estimates: bool,
}

/// A crossing of `TC = r_*/2` at an energy below `E_* + m_*/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BarrierAnomaly {
    pub t: f64,
    pub energy: f64,
    pub threshold: f64,
}

/// Outcome of one experiment. Times, energies and lengths are in the units
/// of the scenario's `λ`; barrier constants and estimates are at `λ = 1`.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ScenarioConfig,
    pub constants: Option<ScenarioConstants>,
    pub datum: Option<InitialDatum>,
    pub entry: Option<BarrierEntry>,
    pub flow: Option<FlowResult>,
    pub verdict: Verdict,
    pub limit_class: Option<ElasticaClass>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub anomalies: Vec<BarrierAnomaly>,
    pub failure: Option<String>,
}

/// Serializable digest of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportSummary {
    pub ell: f64,
    pub lambda: f64,
    pub perturb_mode: PerturbMode,
    pub rng_seed: u64,
    pub epsilon: Option<f64>,
    pub eps_halvings: Option<usize>,
    pub unstable_eigenvalue: Option<f64>,
    pub initial_checks: Option<InitialChecks>,
    pub barrier_entry: Option<BarrierEntry>,
    pub barrier_refs: Option<BarrierRefs>,
    pub estimates: Option<Estimates>,
    pub verdict: Verdict,
    pub limit_class: Option<ElasticaClass>,
    pub limit_distance: Option<f64>,
    pub t0_est: Option<f64>,
    pub t1_est: Option<f64>,
    pub steps: Option<usize>,
    pub final_energy: Option<f64>,
    pub final_total_curvature: Option<f64>,
    pub natural_bc_residual: Option<f64>,
    pub max_energy_increase: Option<f64>,
    pub anomalies: Vec<BarrierAnomaly>,
    pub failure: Option<String>,
}

impl ExperimentReport {
    pub fn summary(&self) -> ReportSummary {
        let flow = self.flow.as_ref();
        ReportSummary {
            ell: self.config.ell,
            lambda: self.config.lambda,
            perturb_mode: self.config.perturb_mode,
            rng_seed: self.config.rng_seed,
            epsilon: self.datum.as_ref().map(|d| d.epsilon),
            eps_halvings: self.datum.as_ref().map(|d| d.halvings),
            unstable_eigenvalue: self.datum.as_ref().and_then(|d| d.eigenvalue),
            initial_checks: self.datum.as_ref().map(|d| d.checks),
            barrier_entry: self.entry,
            barrier_refs: self.constants.map(|c| c.barrier),
            estimates: self.constants.map(|c| c.estimates),
            verdict: self.verdict,
            limit_class: self.limit_class,
            limit_distance: flow.and_then(|f| f.limit_distance),
            t0_est: self.t0,
            t1_est: self.t1,
            steps: flow.map(|f| f.steps),
            final_energy: flow.map(|f| f.final_sample().energy),
            final_total_curvature: flow.map(|f| f.final_sample().total_curvature),
            natural_bc_residual: flow.map(|f| f.natural_bc_residual),
            max_energy_increase: flow.map(|f| f.max_energy_increase()),
            anomalies: self.anomalies.clone(),
            failure: self.failure.clone(),
        }
    }
}

/// Figure-eight constants, a small barrier map and a loop sweep on its `ℓ`
/// grid, condensed into the barrier references and the `ℓ` estimates.
pub fn compute_constants(cfg: &EstimateConfig, rng_seed: u64) -> Result<ScenarioConstants> {
    let f8 = figure_eight()?.constants();
    let map = barrier_constants(
        &BarrierConfig {
            ell_max: cfg.ell_max,
            ell_points: cfg.ell_points,
            r_points: cfg.r_points,
            r_min_factor: 0.0,
            r_max_factor: 1.0,
            resolution: cfg.resolution,
            rng_seed,
        },
        &f8,
    )?;
    let m_star = map.constants.m_star;
    if !(m_star > 0.0) {
        return Err(Error::InvalidArgument(format!("barrier gap is not positive: {m_star}")));
    }
    let bound = threshold_ell();
    let sweep_ells: Vec<f64> = map.ells.iter().copied().filter(|&l| l > 0.0 && l < bound).collect();
    let rows = loop_convergence_sweep(&sweep_ells, &f8)?;
    let mut c2 = 0.0;
    for row in &rows {
        if row.energy_gap <= 0.5 * m_star && row.curvature_gap <= 0.25 * f8.r_star {
            c2 = row.ell;
        } else {
            break;
        }
    }
    let c1 = map.constants.c1;
    Ok(ScenarioConstants {
        barrier: BarrierRefs {
            m_star,
            e_star: f8.e_star,
            r_star: f8.r_star,
        },
        estimates: Estimates {
            c1,
            c2,
            usable_ell: c1.min(c2),
            ell_admissible: map.constants.ell_admissible,
        },
    })
}

/// Crossings of `TC = r_*/2` between consecutive samples whose interpolated
/// energy lies below `E_* + m_*/2`.
pub fn barrier_cross_check(samples: &[FlowSample], refs: &BarrierRefs) -> Vec<BarrierAnomaly> {
    let level = 0.5 * refs.r_star;
    let threshold = refs.e_star + 0.5 * refs.m_star;
    let mut out = Vec::new();
    for w in samples.windows(2) {
        let (a, b) = (w[0].total_curvature - level, w[1].total_curvature - level);
        if a == 0.0 || a.signum() != b.signum() {
            let s = if a == b { 0.0 } else { a / (a - b) };
            let energy = w[0].energy + s * (w[1].energy - w[0].energy);
            if energy < threshold - BARRIER_CHECK_TOL {
                out.push(BarrierAnomaly {
                    t: w[0].t + s * (w[1].t - w[0].t),
                    energy,
                    threshold,
                });
            }
        }
    }
    out
}

/// Verdict from a finished (or failed) run.
pub fn verdict_of(result: &FlowResult, failed: bool) -> Verdict {
    if failed {
        return Verdict::Unresolved;
    }
    if result.limit_class == Some(ElasticaClass::ArcMinus) && detect_migration(&result.samples).is_some() {
        return Verdict::Migrated;
    }
    if result.limit_class == Some(ElasticaClass::Segment) {
        return Verdict::ConvergedToSegment;
    }
    if result.samples.iter().all(|s| s.location == HalfPlaneTag::StrictUpper) {
        return Verdict::StayedUpper;
    }
    Verdict::Unresolved
}

/// Maps a normalized result to the scenario's `λ`.
pub fn to_lambda_units(mut result: FlowResult, lambda: f64) -> Result<FlowResult> {
    if lambda == 1.0 {
        return Ok(result);
    }
    let root = lambda.sqrt();
    let time = 1.0 / (lambda * lambda);
    for s in &mut result.samples {
        s.t *= time;
        s.energy *= root;
        s.y_min /= root;
        s.y_max /= root;
    }
    for snap in &mut result.snapshots {
        snap.t *= time;
        snap.curve = rescale(&snap.curve, 1.0 / root)?;
    }
    for ev in &mut result.remesh_log {
        ev.t *= time;
        ev.energy_change *= root;
    }
    result.final_curve = rescale(&result.final_curve, 1.0 / root)?;
    result.ell /= root;
    result.limit_distance = result.limit_distance.map(|d| d / root);
    result.natural_bc_residual *= root;
    Ok(result)
}

/// Prepares the datum, runs the flow and assesses the outcome. Only an
/// invalid configuration is an error; later failures end up in the report.
pub fn run_theorem_experiment(config: &ScenarioConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let ell = config.normalized_ell();
    let mut report = ExperimentReport {
        config: config.clone(),
        constants: None,
        datum: None,
        entry: None,
        flow: None,
        verdict: Verdict::Unresolved,
        limit_class: None,
        t0: None,
        t1: None,
        anomalies: Vec::new(),
        failure: None,
    };
    let constants = match config.constants {
        Some(c) => c,
        None => match compute_constants(&config.estimate, config.rng_seed) {
            Ok(c) => c,
            Err(e) => {
                report.failure = Some(format!("barrier constants: {e}"));
                return Ok(report);
            }
        },
    };
    report.constants = Some(constants);
    let refs = constants.barrier;

    let datum = match build_initial_datum(ell, config.eps, config.perturb_mode, config.flow.nodes, refs.r_star) {
        Ok(d) => d,
        Err(e) => {
            report.failure = Some(e.to_string());
            return Ok(report);
        }
    };
    let start = crate::curve::report(&datum.curve, 1.0);
    let energy_margin = refs.e_star + 0.5 * refs.m_star - start.energy;
    let tc_margin = start.total_curvature - 0.5 * refs.r_star;
    report.entry = Some(BarrierEntry {
        energy_below_barrier: energy_margin > 0.0,
        energy_margin,
        tc_above_half: tc_margin >= 0.0,
        tc_margin,
        ell_within_estimates: ell <= constants.estimates.usable_ell,
    });

    let (result, failed) = match run(&datum.curve, &config.flow) {
        Ok(r) => (r, false),
        Err(f) => {
            report.failure = Some(f.to_string());
            (*f.partial, true)
        }
    };
    report.anomalies = barrier_cross_check(&result.samples, &refs);
    report.verdict = verdict_of(&result, failed);
    report.limit_class = result.limit_class;
    let result = to_lambda_units(result, config.lambda)?;
    if let Some((t0, t1)) = detect_migration(&result.samples) {
        report.t0 = Some(t0);
        report.t1 = Some(t1);
    }
    report.anomalies.iter_mut().for_each(|a| {
        let root = config.lambda.sqrt();
        a.t /= config.lambda * config.lambda;
        a.energy *= root;
        a.threshold *= root;
    });
    report.datum = Some(if config.lambda == 1.0 {
        datum
    } else {
        let root = config.lambda.sqrt();
        InitialDatum {
            curve: rescale(&datum.curve, 1.0 / root)?,
            reference: rescale(&datum.reference, 1.0 / root)?,
            epsilon: datum.epsilon / root,
            eigenvalue: datum.eigenvalue.map(|m| m * root),
            ..datum
        }
    });
    report.flow = Some(result);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub ell: f64,
    pub verdict: Verdict,
    pub limit_class: Option<ElasticaClass>,
    pub t0_est: Option<f64>,
    pub t1_est: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepReport {
    pub lambda: f64,
    pub rows: Vec<SweepRow>,
    /// Largest `ℓ` of the grid whose run migrated.
    pub largest_migrating_ell: Option<f64>,
    pub constants: ScenarioConstants,
}

pub const SWEEP_HEADER: &str = "ell,verdict,limitClass,t0,t1";

impl SweepReport {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SWEEP_HEADER}")?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        for r in &self.rows {
            writeln!(
                out,
                "{:?},{},{},{},{}",
                r.ell,
                r.verdict,
                r.limit_class.map_or("unresolved", |c| c.as_str()),
                opt(r.t0_est),
                opt(r.t1_est)
            )?;
        }
        Ok(())
    }
}

/// `count` equally spaced values from `lo` to `hi`.
pub fn ell_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// One experiment per `ℓ`, in parallel, sharing the constants of the template.
pub fn sweep_ell(ells: &[f64], template: &ScenarioConfig) -> Result<SweepReport> {
    let constants = match template.constants {
        Some(c) => c,
        None => compute_constants(&template.estimate, template.rng_seed)?,
    };
    let rows = ells
        .par_iter()
        .map(|&ell| {
            let cfg = ScenarioConfig {
                ell,
                output_dir: None,
                constants: Some(constants),
                ..template.clone()
            };
            match run_theorem_experiment(&cfg) {
                Ok(rep) => SweepRow {
                    ell,
                    verdict: rep.verdict,
                    limit_class: rep.limit_class,
                    t0_est: rep.t0,
                    t1_est: rep.t1,
                    failure: rep.failure,
                },
                Err(e) => SweepRow {
                    ell,
                    verdict: Verdict::Unresolved,
                    limit_class: None,
                    t0_est: None,
                    t1_est: None,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect::<Vec<_>>();
    let largest_migrating_ell = rows
        .iter()
        .filter(|r| r.verdict == Verdict::Migrated)
        .map(|r| r.ell)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    Ok(SweepReport {
        lambda: template.lambda,
        rows,
        largest_migrating_ell,
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::StopReason;
    use crate::curve::DiscreteCurve;

    fn sample(t: f64, e: f64, tc: f64, loc: HalfPlaneTag) -> FlowSample {
        FlowSample {
            t,
            energy: e,
            total_curvature: tc,
            y_min: 0.0,
            y_max: 0.0,
            location: loc,
        }
    }

    fn refs() -> BarrierRefs {
        BarrierRefs {
            m_star: 3.5,
            e_star: 10.6,
            r_star: 4.5,
        }
    }

    fn result(samples: Vec<FlowSample>, class: Option<ElasticaClass>) -> FlowResult {
        let c = DiscreteCurve::segment(0.1, 8).unwrap();
        FlowResult {
            ell: 0.1,
            samples,
            snapshots: Vec::new(),
            remesh_log: Vec::new(),
            final_curve: c,
            steps: 1,
            stop: StopReason::Stationary,
            limit_class: class,
            limit_distance: None,
            natural_bc_residual: 0.0,
        }
    }

    #[test]
    fn cross_check_flags_low_energy_crossing() {
        use HalfPlaneTag::*;
        let s = vec![sample(0.0, 11.0, 3.0, StrictUpper), sample(1.0, 10.0, 2.0, Mixed)];
        let a = barrier_cross_check(&s, &refs());
        assert_eq!(a.len(), 1);
        assert!((a[0].t - 0.75).abs() < 1e-12);
        let s = vec![sample(0.0, 13.0, 3.0, StrictUpper), sample(1.0, 12.8, 2.0, Mixed)];
        assert!(barrier_cross_check(&s, &refs()).is_empty());
        let s = vec![sample(0.0, 11.0, 4.0, StrictUpper), sample(1.0, 10.0, 3.0, StrictLower)];
        assert!(barrier_cross_check(&s, &refs()).is_empty());
    }

    #[test]
    fn verdicts_follow_the_taxonomy() {
        use HalfPlaneTag::*;
        let migrating = vec![
            sample(0.0, 1.0, 1.0, StrictUpper),
            sample(1.0, 1.0, 1.0, Mixed),
            sample(2.0, 1.0, 1.0, StrictLower),
        ];
        let r = result(migrating.clone(), Some(ElasticaClass::ArcMinus));
        assert_eq!(verdict_of(&r, false), Verdict::Migrated);
        assert_eq!(verdict_of(&r, true), Verdict::Unresolved);
        let r = result(migrating, Some(ElasticaClass::Segment));
        assert_eq!(verdict_of(&r, false), Verdict::ConvergedToSegment);
        let upper = vec![sample(0.0, 1.0, 1.0, StrictUpper), sample(1.0, 1.0, 1.0, StrictUpper)];
        let r = result(upper, Some(ElasticaClass::LoopPlus));
        assert_eq!(verdict_of(&r, false), Verdict::StayedUpper);
    }

    #[test]
    fn lambda_units_follow_the_scaling_identity() {
        use HalfPlaneTag::*;
        let r = result(vec![sample(16.0, 3.0, 2.0, StrictUpper)], None);
        let s = to_lambda_units(r, 4.0).unwrap();
        assert_eq!(s.samples[0].t, 1.0);
        assert_eq!(s.samples[0].energy, 6.0);
        assert_eq!(s.samples[0].total_curvature, 2.0);
        assert!((s.ell - 0.05).abs() < 1e-15);
    }

    #[test]
    fn scenario_config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        let bad = ScenarioConfig {
            ell: 0.3,
            lambda: 4.0,
            ..ScenarioConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig {
            eps: 0.0,
            ..ScenarioConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn scenario_config_json_uses_camel_case() {
        let s = serde_json::to_string(&ScenarioConfig::default()).unwrap();
        assert!(s.contains("perturbMode") && s.contains("rngSeed") && s.contains("hessianDirection"));
        let back: ScenarioConfig = serde_json::from_str(r#"{"ell": 0.2, "perturbMode": "downwardBump"}"#).unwrap();
        assert_eq!(back.ell, 0.2);
        assert_eq!(back.perturb_mode, PerturbMode::DownwardBump);
        assert_eq!(back.lambda, 1.0);
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(ell_grid(0.05, 0.2, 4), vec![0.05, 0.1, 0.15000000000000002, 0.2]);
        assert_eq!(ell_grid(0.1, 0.3, 1), vec![0.1]);
    }
}
