//! Implicit minimizing-movement scheme for the length-penalized elastic flow
//! with pinned endpoints.
//!
//! The state is an equal-edge polygon (edge angles and a common edge length).
//! One step from `p⁰` minimizes `E_h(p) + (1/2τ) Σ w_i ((p_i − p⁰_i)·n_i)²`
//! over polygons ending at `(ℓ, 0)`, with normals `n_i` and dual lengths `w_i`
//! of `p⁰`. Only normal displacement is penalized; the equal-edge constraint
//! fixes the parametrization, so the mesh stays uniform without remeshing.
//! Since `p⁰` is admissible, `E_h(p) ≤ E_h(p⁰)` for every accepted step.

pub(crate) mod discrete;
pub(crate) mod movement;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::curve::{
    curvatures, half_plane_location, report, DiscreteCurve, HalfPlaneTag, Point,
};
use crate::elastica::{enumerate_low_energy, threshold_ell, ElasticaClass};
use crate::error::{Error, Result};
use crate::linalg::BandedSym;
use movement::{Polygon, StepProblem};

/// Hausdorff tolerance for identifying the limit with a catalogued elastica.
pub const LIMIT_TOLERANCE: f64 = 1e-2;

/// Consecutive step-size halvings before a step is declared failed.
pub const MAX_HALVINGS: usize = 20;

pub const TIMESERIES_HEADER: &str = "t,E,TC,yMin,yMax,location";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FlowConfig {
    /// Initial time step.
    pub tau: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Number of edges.
    pub nodes: usize,
    pub t_max: f64,
    /// Stop once `max_i |Δp_i| / τ` falls below this.
    pub grad_tol: f64,
    /// Tolerance of the implicit subproblem: size of the remaining Newton
    /// correction relative to the mean edge length.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Mesh quality is checked every this many steps (0 disables remeshing).
    pub remesh_every: usize,
    /// Remesh when `max h / min h` exceeds this.
    pub remesh_ratio: f64,
    /// Keep a snapshot every this many steps (0 keeps only first and last).
    pub snapshot_every: usize,
    pub max_steps: usize,
    /// Identify the limit against the elastica catalogue.
    pub classify: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tau: 1e-4,
            tau_min: 1e-12,
            tau_max: 4.0,
            nodes: 256,
            t_max: 1e4,
            grad_tol: 1e-6,
            inner_tol: 1e-9,
            inner_max_iter: 40,
            remesh_every: 50,
            remesh_ratio: 10.0,
            snapshot_every: 100,
            max_steps: 200_000,
            classify: true,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau", self.tau),
            ("tauMin", self.tau_min),
            ("tauMax", self.tau_max),
            ("tMax", self.t_max),
            ("gradTol", self.grad_tol),
            ("innerTol", self.inner_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.tau_min > self.tau || self.tau > self.tau_max {
            return Err(Error::InvalidArgument("need tauMin <= tau <= tauMax".into()));
        }
        if self.nodes < DiscreteCurve::MIN_EDGES {
            return Err(Error::TooFewNodes {
                min: DiscreteCurve::MIN_EDGES,
                got: self.nodes,
            });
        }
        if !(self.remesh_ratio > 1.0) {
            return Err(Error::InvalidArgument("remeshRatio must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub energy: f64,
    pub total_curvature: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub location: HalfPlaneTag,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub curve: DiscreteCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemeshEvent {
    pub t: f64,
    pub energy_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Stationary,
    TimeLimit,
    StepLimit,
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub ell: f64,
    pub samples: Vec<FlowSample>,
    pub snapshots: Vec<Snapshot>,
    pub remesh_log: Vec<RemeshEvent>,
    pub final_curve: DiscreteCurve,
    pub steps: usize,
    pub stop: StopReason,
    /// `None` when the limit matches no catalogued elastica.
    pub limit_class: Option<ElasticaClass>,
    pub limit_distance: Option<f64>,
    pub natural_bc_residual: f64,
}

impl FlowResult {
    pub fn limit_label(&self) -> &'static str {
        self.limit_class.map_or("unresolved", |c| c.as_str())
    }

    pub fn final_sample(&self) -> &FlowSample {
        self.samples.last().expect("a flow result always holds the initial sample")
    }

    /// Largest energy increase between consecutive samples (positive means
    /// monotonicity was violated).
    pub fn max_energy_increase(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].energy - w[0].energy)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn snapshot_near(&self, t: f64) -> &Snapshot {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("a flow result always holds the initial snapshot")
    }

    pub fn write_timeseries<W: Write>(&self, out: W) -> Result<()> {
        write_timeseries(&self.samples, out)
    }
}

pub fn write_timeseries<W: Write>(samples: &[FlowSample], mut out: W) -> Result<()> {
    writeln!(out, "{TIMESERIES_HEADER}")?;
    for s in samples {
        writeln!(
            out,
            "{:.12e},{:.15e},{:.15e},{:.12e},{:.12e},{}",
            s.t,
            s.energy,
            s.total_curvature,
            s.y_min,
            s.y_max,
            s.location.as_str()
        )?;
    }
    Ok(())
}

/// A failed run together with everything computed before the failure.
#[derive(Debug)]
pub struct FlowFailure {
    pub error: Error,
    pub partial: Box<FlowResult>,
}

impl std::fmt::Display for FlowFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} steps)", self.error, self.partial.steps)
    }
}

impl std::error::Error for FlowFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<FlowFailure> for Error {
    fn from(f: FlowFailure) -> Self {
        f.error
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub tau: f64,
    pub inner_iterations: usize,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `max_i |Δp_i| / τ`.
    pub velocity: f64,
}

/// Unit normals at the nodes from central chords (zero at the two ends).
fn node_normals(points: &[Point]) -> Vec<Point> {
    let n = points.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                return Point::zeros();
            }
            let t = (points[i + 1] - points[i - 1]).normalize();
            Point::new(-t.y, t.x)
        })
        .collect()
}

/// `Nᵀ H N` for the node normals `N`; nodes two apart still couple.
fn project_hessian(h: &BandedSym, normals: &[Point]) -> BandedSym {
    let m = normals.len() - 2;
    let mut out = BandedSym::zeros(m, 2);
    for a in 0..m {
        let na = normals[a + 1];
        for b in a.saturating_sub(2)..=a {
            let nb = normals[b + 1];
            let (ra, rb) = (2 * a, 2 * b);
            let mut v = 0.0;
            for (da, ca) in [(0, na.x), (1, na.y)] {
                for (db, cb) in [(0, nb.x), (1, nb.y)] {
                    let (i, j) = (ra + da, rb + db);
                    let hij = if i >= j { h.get(i, j) } else { h.get(j, i) };
                    v += ca * hij * cb;
                }
            }
            out.add(a, b, v);
        }
    }
    out
}

fn dual_weights(points: &[Point]) -> Vec<f64> {
    let n = points.len();
    let h: Vec<f64> = points.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    (0..n)
        .map(|i| {
            let left = if i > 0 { h[i - 1] } else { 0.0 };
            let right = if i + 1 < n { h[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Discrete energy (λ = 1) of a polyline.
pub fn discrete_energy(curve: &DiscreteCurve) -> f64 {
    discrete::energy(curve.points(), 1.0)
}

/// Energy gradient per unit dual length at the interior nodes (λ = 1).
pub fn energy_force(curve: &DiscreteCurve) -> Vec<Point> {
    let p = curve.points();
    let g = discrete::gradient(p, 1.0);
    let w = dual_weights(p);
    (1..p.len() - 1)
        .map(|i| Point::new(g[2 * (i - 1)], g[2 * i - 1]) / w[i])
        .collect()
}

/// Dense Hessian of the discrete energy restricted to normal node
/// displacements `p_i + s_i n_i`, and the dual-length mass of each node.
pub fn normal_hessian(curve: &DiscreteCurve) -> (nalgebra::DMatrix<f64>, Vec<f64>) {
    let p = curve.points();
    let normals = node_normals(p);
    let h = project_hessian(&discrete::hessian(p, 1.0), &normals);
    let n = h.dim();
    let mut dense = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i.saturating_sub(2)..=i {
            let v = h.get(i, j);
            dense[(i, j)] = v;
            dense[(j, i)] = v;
        }
    }
    let w = dual_weights(p);
    (dense, w[1..p.len() - 1].to_vec())
}

/// Unit normals used for normal displacements of the interior nodes.
pub fn interior_normals(curve: &DiscreteCurve) -> Vec<Point> {
    let n = node_normals(curve.points());
    n[1..n.len() - 1].to_vec()
}

/// One implicit step of size `tau` from an equal-edge polygon.
fn advance(poly: &Polygon, ell: f64, tau: f64, config: &FlowConfig) -> Result<(Polygon, StepInfo)> {
    let old = poly.curve(ell)?;
    let problem = StepProblem::new(old.points(), ell, tau);
    let sol = problem.solve(poly, config.inner_tol, config.inner_max_iter);
    if !sol.converged {
        return Err(Error::StepFailure {
            t: f64::NAN,
            reason: format!(
                "implicit step with tau = {tau:e} stalled with relative correction {:e}",
                sol.correction
            ),
        });
    }
    let new = sol.poly.curve(ell)?;
    let velocity = new
        .points()
        .iter()
        .zip(old.points())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / tau;
    let info = StepInfo {
        tau,
        inner_iterations: sol.iterations,
        energy_before: discrete_energy(&old),
        energy_after: discrete_energy(&new),
        velocity,
    };
    Ok((sol.poly, info))
}

/// One implicit step of size `tau` from `curve`, which is first converted to
/// an equal-edge polygon with the same number of edges.
pub fn step(curve: &DiscreteCurve, tau: f64, config: &FlowConfig) -> Result<(DiscreteCurve, StepInfo)> {
    let ell = curve.end().x;
    let poly = Polygon::from_curve(curve, curve.edges(), ell)?;
    let (next, info) = advance(&poly, ell, tau, config)?;
    Ok((next.curve(ell)?, info))
}

/// The equal-edge polygon with `edges` edges that the flow starts from.
pub fn equilateral(curve: &DiscreteCurve, edges: usize) -> Result<DiscreteCurve> {
    let ell = curve.end().x;
    Polygon::from_curve(curve, edges, ell)?.curve(ell)
}

/// Equal-edge polygon with `edges` edges, close to `curve`, at which the
/// discrete energy is stationary among polygons with the same endpoints.
/// Saddles are found as well as minima.
pub fn discrete_critical_point(curve: &DiscreteCurve, edges: usize) -> Result<DiscreteCurve> {
    let ell = curve.end().x;
    let start = Polygon::from_curve(curve, edges, ell)?;
    movement::critical_point(&start, ell, 1e-12, 30)?.curve(ell)
}

fn sample(curve: &DiscreteCurve, t: f64) -> Result<FlowSample> {
    let r = report(curve, 1.0);
    let loc = half_plane_location(curve)?;
    Ok(FlowSample {
        t,
        energy: r.energy,
        total_curvature: r.total_curvature,
        y_min: r.y_min,
        y_max: r.y_max,
        location: loc.tag,
    })
}

/// Runs the flow from `initial` (resampled to `config.nodes` edges if needed)
/// until it is stationary, `t_max` is reached or the step budget runs out.
pub fn run(initial: &DiscreteCurve, config: &FlowConfig) -> std::result::Result<FlowResult, FlowFailure> {
    let start = initial.start();
    let end = initial.end();
    let ell = end.x - start.x;
    let mut result = FlowResult {
        ell,
        samples: Vec::new(),
        snapshots: Vec::new(),
        remesh_log: Vec::new(),
        final_curve: initial.clone(),
        steps: 0,
        stop: StopReason::StepLimit,
        limit_class: None,
        limit_distance: None,
        natural_bc_residual: f64::NAN,
    };
    let fail = |error: Error, result: FlowResult| FlowFailure {
        error,
        partial: Box::new(result),
    };
    if let Err(e) = config.validate() {
        return Err(fail(e, result));
    }
    let mut poly = match Polygon::from_curve(initial, config.nodes, ell) {
        Ok(p) => p,
        Err(e) => return Err(fail(e, result)),
    };
    let mut curve = match poly.curve(ell) {
        Ok(c) => c,
        Err(e) => return Err(fail(e, result)),
    };
    match sample(&curve, 0.0) {
        Ok(s) => result.samples.push(s),
        Err(e) => return Err(fail(e, result)),
    }
    result.snapshots.push(Snapshot {
        t: 0.0,
        curve: curve.clone(),
    });

    let mut t = 0.0;
    let mut tau = config.tau;
    let mut last_snapshot = 0;
    let mut halvings = 0;
    loop {
        if t >= config.t_max {
            result.stop = StopReason::TimeLimit;
            break;
        }
        if result.steps >= config.max_steps {
            result.stop = StopReason::StepLimit;
            break;
        }
        let tau_try = tau.min(config.t_max - t).max(config.tau_min);
        let tolerance = |e: f64| 1e-12 * e.abs().max(1.0);
        let (next, info) = match advance(&poly, ell, tau_try, config) {
            Ok(ok) if ok.1.energy_after <= ok.1.energy_before + tolerance(ok.1.energy_before) => ok,
            outcome => {
                let reason = match outcome {
                    Ok(ok) => format!(
                        "energy rose from {} to {}",
                        ok.1.energy_before, ok.1.energy_after
                    ),
                    Err(e) => e.to_string(),
                };
                halvings += 1;
                tau = tau_try * 0.5;
                if halvings > MAX_HALVINGS || tau < config.tau_min {
                    result.final_curve = curve;
                    return Err(fail(Error::StepFailure { t, reason }, result));
                }
                continue;
            }
        };
        halvings = 0;
        t += info.tau;
        result.steps += 1;
        poly = next;
        curve = match poly.curve(ell) {
            Ok(c) => c,
            Err(e) => {
                let min_edge = poly.h;
                let err = match e {
                    Error::ImmersionViolation { .. } => Error::Degeneracy { t, min_edge },
                    other => other,
                };
                return Err(fail(err, result));
            }
        };
        if poly.h < 1e-8 {
            result.final_curve = curve;
            return Err(fail(Error::Degeneracy { t, min_edge: poly.h }, result));
        }
        if config.remesh_every > 0 && result.steps.is_multiple_of(config.remesh_every) {
            // re-derive the polygon from the nodes: clears rounding drift in
            // the closure and re-checks mesh quality
            let before = discrete_energy(&curve);
            let remeshed = Polygon::from_curve(&curve, config.nodes, ell).and_then(|p| {
                let c = p.curve(ell)?;
                Ok((p, c))
            });
            match remeshed {
                Ok((p, c)) => {
                    poly = p;
                    curve = c;
                }
                Err(e) => {
                    result.final_curve = curve;
                    return Err(fail(e, result));
                }
            }
            result.remesh_log.push(RemeshEvent {
                t,
                energy_change: discrete_energy(&curve) - before,
            });
        }
        match sample(&curve, t) {
            Ok(s) => result.samples.push(s),
            Err(e) => {
                result.final_curve = curve;
                return Err(fail(e, result));
            }
        }
        if config.snapshot_every > 0 && result.steps - last_snapshot >= config.snapshot_every {
            result.snapshots.push(Snapshot {
                t,
                curve: curve.clone(),
            });
            last_snapshot = result.steps;
        }

        if info.velocity < config.grad_tol {
            result.stop = StopReason::Stationary;
            break;
        }
        tau = if info.inner_iterations <= 4 {
            (info.tau * 2.0).min(config.tau_max)
        } else if info.inner_iterations > 12 {
            (info.tau * 0.5).max(config.tau_min)
        } else {
            info.tau
        };
    }

    if result.snapshots.last().is_some_and(|s| s.t < t) {
        result.snapshots.push(Snapshot {
            t,
            curve: curve.clone(),
        });
    }
    result.natural_bc_residual = natural_bc_residual(&curve);
    if config.classify {
        if let Some((class, dist)) = classify_limit(&curve, ell) {
            result.limit_class = Some(class);
            result.limit_distance = Some(dist);
        }
    }
    result.final_curve = curve;
    Ok(result)
}

/// Nearest low-energy elastica within [`LIMIT_TOLERANCE`] in Hausdorff distance.
pub fn classify_limit(curve: &DiscreteCurve, ell: f64) -> Option<(ElasticaClass, f64)> {
    if !(ell > 0.0 && ell < threshold_ell()) {
        return None;
    }
    let catalogue = enumerate_low_energy(ell).ok()?;
    catalogue.nearest(curve, LIMIT_TOLERANCE)
}

/// Largest end curvature obtained by linear extrapolation of the curvature
/// at the first two interior nodes of each end.
pub fn natural_bc_residual(curve: &DiscreteCurve) -> f64 {
    let k = curvatures(curve);
    let h = curve.edge_lengths();
    let n = k.len();
    if n < 2 {
        return f64::NAN;
    }
    let extrapolate = |k1: f64, k2: f64, s1: f64, s2: f64| k1 - s1 * (k2 - k1) / (s2 - s1);
    let start = extrapolate(k[0], k[1], h[0], h[0] + h[1]);
    let m = h.len();
    let end = extrapolate(k[n - 1], k[n - 2], h[m - 1], h[m - 1] + h[m - 2]);
    start.abs().max(end.abs())
}

/// Times `(t0, t1)` of a migration: the samples up to `t0` all lie strictly
/// in the upper half-plane, those from `t1` on all lie strictly in the lower
/// one, and `t0 < t1`.
pub fn detect_migration(samples: &[FlowSample]) -> Option<(f64, f64)> {
    let prefix = samples
        .iter()
        .take_while(|s| s.location == HalfPlaneTag::StrictUpper)
        .count();
    let suffix = samples
        .iter()
        .rev()
        .take_while(|s| s.location == HalfPlaneTag::StrictLower)
        .count();
    if prefix == 0 || suffix == 0 || prefix + suffix > samples.len() {
        return None;
    }
    let t0 = samples[prefix - 1].t;
    let t1 = samples[samples.len() - suffix].t;
    (t0 < t1).then_some((t0, t1))
}
