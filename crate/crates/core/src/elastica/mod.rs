//! Stationary solutions of the λ = 1 flow with pinned ends and zero end
//! curvature, found by shooting on `(θ0, k'(0), L)`.
//!
//! Every solution with `k(0) = 0` is an orbit of `k'' = (k - k^3)/2` that
//! leaves the saddle level of `k = 0`, so `k` returns to zero after a fixed
//! half-period and the one-lobe solutions form a one-parameter family in
//! the slope `a = k'(0)`. Along this family the chord projected on the
//! midpoint tangent decreases through zero at the half-fold figure-eight:
//! larger slopes give arcs (uncrossed), smaller slopes give loops (crossed).

mod ode;

pub use ode::{integrate_elastica, lobe_shape, LobeShape, ShootingState, Trajectory};

use std::io::Write;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::curve::{hausdorff, report, DiscreteCurve, GeometricReport, Point};
use crate::error::{Error, Result};

/// Threshold `λ_†` of the ordering of low-energy pinned elasticae; below
/// `ℓ_† = √λ_†` loops have less energy than shorter arcs.
pub const LAMBDA_DAGGER: f64 = 0.32241;

/// Convergence tolerance on the shooting residual `|(x(L) - ℓ, y(L), k(L))|`.
pub const SHOOTING_TOL: f64 = 1e-10;

/// Default number of RK4 steps per shooting integration.
pub const DEFAULT_STEPS: usize = 4096;

const SCAN_STEP: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElasticaClass {
    Segment,
    ArcPlus,
    ArcMinus,
    LoopPlus,
    LoopMinus,
    ShorterArc,
    Other,
}

impl ElasticaClass {
    pub const LOW_ENERGY: [ElasticaClass; 5] = [
        ElasticaClass::Segment,
        ElasticaClass::ArcPlus,
        ElasticaClass::ArcMinus,
        ElasticaClass::LoopPlus,
        ElasticaClass::LoopMinus,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ElasticaClass::Segment => "segment",
            ElasticaClass::ArcPlus => "arc+",
            ElasticaClass::ArcMinus => "arc-",
            ElasticaClass::LoopPlus => "loop+",
            ElasticaClass::LoopMinus => "loop-",
            ElasticaClass::ShorterArc => "shorter-arc",
            ElasticaClass::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            ElasticaClass::Segment,
            ElasticaClass::ArcPlus,
            ElasticaClass::ArcMinus,
            ElasticaClass::LoopPlus,
            ElasticaClass::LoopMinus,
            ElasticaClass::ShorterArc,
            ElasticaClass::Other,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
    }

    pub fn mirror(&self) -> Self {
        match self {
            ElasticaClass::ArcPlus => ElasticaClass::ArcMinus,
            ElasticaClass::ArcMinus => ElasticaClass::ArcPlus,
            ElasticaClass::LoopPlus => ElasticaClass::LoopMinus,
            ElasticaClass::LoopMinus => ElasticaClass::LoopPlus,
            other => *other,
        }
    }
}

impl std::fmt::Display for ElasticaClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One converged solution of the pinned boundary value problem.
#[derive(Debug, Clone)]
pub struct ElasticaSolution {
    pub ell: f64,
    pub shooting: ShootingState,
    pub trajectory: Trajectory,
    pub report: GeometricReport,
    pub class: ElasticaClass,
    /// Interior sign changes of `k` plus one.
    pub lobes: usize,
    pub residual: f64,
}

impl ElasticaSolution {
    pub fn curve(&self) -> &DiscreteCurve {
        &self.trajectory.curve
    }

    pub fn energy(&self) -> f64 {
        self.report.energy
    }

    pub fn total_curvature(&self) -> f64 {
        self.report.total_curvature
    }

    /// The solution sampled at `edges + 1` equally spaced arclength nodes,
    /// integrated on a refined grid, with the endpoints placed exactly at
    /// `(0, 0)` and `(ℓ, 0)`.
    pub fn sampled(&self, edges: usize) -> Result<DiscreteCurve> {
        let refine = DEFAULT_STEPS.div_ceil(edges).max(1);
        let fine = integrate_elastica(&self.shooting, edges * refine)?;
        let mut points: Vec<Point> = fine.curve.points().iter().step_by(refine).copied().collect();
        points[0] = Point::zeros();
        points[edges] = Point::new(self.ell, 0.0);
        DiscreteCurve::new(points)
    }
}

/// Landmarks of the one-lobe family: the slope of the half-fold figure-eight
/// (signed chord zero) and the slope of maximal chord, which separates
/// longer arcs from shorter arcs.
#[derive(Debug, Clone, Copy)]
pub struct LobeLandmarks {
    pub slope_figure_eight: f64,
    pub slope_max_chord: f64,
    pub max_chord: f64,
}

pub fn lobe_landmarks() -> &'static LobeLandmarks {
    static CELL: OnceLock<LobeLandmarks> = OnceLock::new();
    CELL.get_or_init(|| {
        let chord = |a: f64| lobe_shape(a, SCAN_STEP).map(|l| l.signed_chord).unwrap_or(f64::NAN);
        let slope_figure_eight = bisect(&chord, 0.1, 1.5, 1e-14);
        // golden section for the maximum of the signed chord
        let (mut lo, mut hi) = (slope_figure_eight, 20.0);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (chord(x1), chord(x2));
        while hi - lo > 1e-9 {
            if f1 > f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = chord(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = chord(x2);
            }
        }
        let slope_max_chord = 0.5 * (lo + hi);
        LobeLandmarks {
            slope_figure_eight,
            slope_max_chord,
            max_chord: chord(slope_max_chord),
        }
    })
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        if hi - lo <= tol * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn residual_vector(ell: f64, state: &ShootingState, steps: usize) -> Result<Vector3<f64>> {
    let z = ode::integrate_end(state, steps)?;
    Ok(Vector3::new(z[1] - ell, z[2], z[3]))
}

/// Newton iteration on `(x(L) - ℓ, y(L), k(L))` with a finite-difference
/// Jacobian. The step is the least-norm solution through an SVD, which also
/// handles the rotational degeneracy at `ℓ = 0`.
pub fn shoot_pinned(ell: f64, seed: ShootingState) -> Result<ElasticaSolution> {
    shoot_pinned_with(ell, seed, DEFAULT_STEPS)
}

pub fn shoot_pinned_with(ell: f64, seed: ShootingState, steps: usize) -> Result<ElasticaSolution> {
    if !seed.is_finite() || !(seed.length > 0.0) {
        return Err(Error::InvalidArgument(format!("bad shooting seed {seed:?}")));
    }
    if ell < 0.0 {
        return Err(Error::InvalidArgument(format!("ell must be nonnegative, got {ell}")));
    }
    const MAX_ITER: usize = 100;
    let mut x = Vector3::new(seed.theta0, seed.slope, seed.length);
    let to_state = |v: &Vector3<f64>| ShootingState::new(v[0], v[1], v[2]);
    let mut f = residual_vector(ell, &to_state(&x), steps)?;
    let mut iterations = 0;
    while f.norm() > SHOOTING_TOL {
        if iterations == MAX_ITER {
            return Err(Error::ShootingFailure {
                iterations,
                residual: f.norm(),
            });
        }
        iterations += 1;
        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x;
            xp[j] += h;
            let mut xm = x;
            xm[j] -= h;
            let col = (residual_vector(ell, &to_state(&xp), steps)?
                - residual_vector(ell, &to_state(&xm), steps)?)
                / (2.0 * h);
            jac.set_column(j, &col);
        }
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let dx = svd
            .solve(&(-f), 1e-9 * smax)
            .map_err(|e| Error::ShootingFailure {
                iterations,
                residual: f64::from(e.len() as u32),
            })?;
        // damped update: halve until the residual decreases and length stays positive
        let mut t = 1.0;
        loop {
            let trial = x + dx * t;
            if trial[2] > 0.0 {
                if let Ok(ft) = residual_vector(ell, &to_state(&trial), steps) {
                    if ft.norm() < f.norm() || t < 1e-3 {
                        x = trial;
                        f = ft;
                        break;
                    }
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                return Err(Error::ShootingFailure {
                    iterations,
                    residual: f.norm(),
                });
            }
        }
    }
    let mut state = to_state(&x);
    state.theta0 = wrap_angle(state.theta0);
    finish_solution(ell, state, steps, f.norm())
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut v = a.rem_euclid(two_pi);
    if v > std::f64::consts::PI {
        v -= two_pi;
    }
    v
}

fn finish_solution(
    ell: f64,
    state: ShootingState,
    steps: usize,
    residual: f64,
) -> Result<ElasticaSolution> {
    let trajectory = integrate_elastica(&state, steps)?;
    let report = report(&trajectory.curve, 1.0);
    let (class, lobes) = classify(ell, &state, &trajectory);
    Ok(ElasticaSolution {
        ell,
        shooting: state,
        trajectory,
        report,
        class,
        lobes,
        residual,
    })
}

/// Class tag from the sign of the curvature, the lobe count, the signed
/// chord and the position of the slope relative to the maximal-chord slope.
fn classify(ell: f64, state: &ShootingState, traj: &Trajectory) -> (ElasticaClass, usize) {
    let kmax = traj.curvature.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    if kmax < 1e-9 {
        return (ElasticaClass::Segment, 1);
    }
    let tol = 1e-8 * kmax;
    let inner = &traj.curvature[1..traj.curvature.len() - 1];
    let mut lobes = 1;
    let mut last = 0.0;
    for &k in inner {
        if k.abs() <= tol {
            continue;
        }
        if last != 0.0 && (k > 0.0) != (last > 0.0) {
            lobes += 1;
        }
        last = k;
    }
    if lobes != 1 {
        return (ElasticaClass::Other, lobes);
    }
    let positive = state.slope > 0.0;
    let mid = traj.theta.len() / 2;
    let signed_chord = ell * traj.theta[mid].cos();
    let class = if signed_chord <= 0.0 {
        if positive {
            ElasticaClass::LoopPlus
        } else {
            ElasticaClass::LoopMinus
        }
    } else if state.slope.abs() > lobe_landmarks().slope_max_chord {
        ElasticaClass::ShorterArc
    } else if positive {
        ElasticaClass::ArcMinus
    } else {
        ElasticaClass::ArcPlus
    };
    (class, lobes)
}

/// Seed for the one-lobe solution of slope `a` rotated so its chord is horizontal.
fn lobe_seed(a: f64) -> Option<ShootingState> {
    let lobe = lobe_shape(a, SCAN_STEP).ok()?;
    Some(ShootingState::new(lobe.aligning_angle(), a, lobe.half_period))
}

/// Seeds from a scan of the one-lobe family: every root of `signed_chord = ±ℓ`.
pub fn scan_seeds(ell: f64) -> Vec<ShootingState> {
    let grid: Vec<f64> = (0..=160)
        .map(|i| (0.02f64.ln() + (80f64.ln() - 0.02f64.ln()) * i as f64 / 160.0).exp())
        .collect();
    let chords: Vec<f64> = grid
        .iter()
        .map(|&a| lobe_shape(a, SCAN_STEP).map(|l| l.signed_chord).unwrap_or(f64::NAN))
        .collect();
    let mut seeds = Vec::new();
    for target in [ell, -ell] {
        for i in 0..grid.len() - 1 {
            let (f0, f1) = (chords[i] - target, chords[i + 1] - target);
            if f0.is_finite() && f1.is_finite() && (f0 > 0.0) != (f1 > 0.0) {
                let root = bisect(
                    |a| lobe_shape(a, SCAN_STEP).map(|l| l.signed_chord - target).unwrap_or(f64::NAN),
                    grid[i],
                    grid[i + 1],
                    1e-12,
                );
                if let Some(s) = lobe_seed(root) {
                    seeds.push(s);
                    seeds.push(s.mirrored());
                }
            }
        }
        if ell == 0.0 {
            break;
        }
    }
    seeds
}

/// Fixed seed bank: shallow-arc seeds at slopes ±{0.5, 1, 2} and loop seeds
/// from the rescaled figure-eight.
pub fn standard_seeds(ell: f64) -> Vec<ShootingState> {
    let mut seeds = Vec::new();
    for a in [0.5, 1.0, 2.0] {
        if let Some(s) = lobe_seed(a) {
            seeds.push(s);
            seeds.push(s.mirrored());
        }
    }
    let a_star = lobe_landmarks().slope_figure_eight;
    for factor in [0.9, 0.95] {
        if let Some(s) = lobe_seed(a_star * factor) {
            seeds.push(s);
            seeds.push(s.mirrored());
        }
    }
    let _ = ell;
    seeds
}

/// The five lowest-energy stationary solutions at one endpoint distance,
/// plus any further solutions the seeds converged to.
#[derive(Debug, Clone)]
pub struct Catalogue {
    pub ell: f64,
    pub segment: ElasticaSolution,
    pub arc_plus: ElasticaSolution,
    pub arc_minus: ElasticaSolution,
    pub loop_plus: ElasticaSolution,
    pub loop_minus: ElasticaSolution,
    pub extras: Vec<ElasticaSolution>,
}

impl Catalogue {
    pub fn get(&self, class: ElasticaClass) -> Option<&ElasticaSolution> {
        match class {
            ElasticaClass::Segment => Some(&self.segment),
            ElasticaClass::ArcPlus => Some(&self.arc_plus),
            ElasticaClass::ArcMinus => Some(&self.arc_minus),
            ElasticaClass::LoopPlus => Some(&self.loop_plus),
            ElasticaClass::LoopMinus => Some(&self.loop_minus),
            _ => self.extras.iter().find(|s| s.class == class),
        }
    }

    pub fn low_energy(&self) -> [&ElasticaSolution; 5] {
        [
            &self.segment,
            &self.arc_plus,
            &self.arc_minus,
            &self.loop_plus,
            &self.loop_minus,
        ]
    }

    pub fn all(&self) -> impl Iterator<Item = &ElasticaSolution> {
        self.low_energy().into_iter().chain(self.extras.iter())
    }

    /// Class of the catalogue member nearest to `curve` in Hausdorff
    /// distance, if that distance is at most `threshold`.
    pub fn nearest(&self, curve: &DiscreteCurve, threshold: f64) -> Option<(ElasticaClass, f64)> {
        self.all()
            .map(|s| (s.class, hausdorff(s.curve(), curve)))
            .filter(|(_, d)| *d <= threshold)
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CATALOGUE_HEADER}")?;
        for s in self.all() {
            write_catalogue_row(&mut out, s)?;
        }
        Ok(())
    }
}

pub const CATALOGUE_HEADER: &str = "ell,class,E,TC,L,B,theta0,a";

pub fn write_catalogue_row<W: Write>(out: &mut W, s: &ElasticaSolution) -> Result<()> {
    writeln!(
        out,
        "{:?},{},{:?},{:?},{:?},{:?},{:?},{:?}",
        s.ell,
        s.class,
        s.report.energy,
        s.report.total_curvature,
        s.report.length,
        s.report.bending,
        s.shooting.theta0,
        s.shooting.slope
    )?;
    Ok(())
}

fn exact_segment(ell: f64) -> Result<ElasticaSolution> {
    let state = ShootingState::new(0.0, 0.0, ell);
    let residual = residual_vector(ell, &state, DEFAULT_STEPS)?.norm();
    finish_solution(ell, state, DEFAULT_STEPS, residual)
}

/// Solves from every seed and keeps the least-energy solution per class.
pub fn enumerate_low_energy(ell: f64) -> Result<Catalogue> {
    let ell_dagger = threshold_ell();
    if !(ell > 0.0 && ell < ell_dagger) {
        return Err(Error::InvalidArgument(format!(
            "ell must lie in (0, {ell_dagger:.5}), got {ell}"
        )));
    }
    let mut seeds = scan_seeds(ell);
    seeds.extend(standard_seeds(ell));
    let mut found: Vec<ElasticaSolution> = Vec::new();
    for seed in seeds {
        let Ok(sol) = shoot_pinned(ell, seed) else {
            continue;
        };
        let duplicate = found.iter().any(|f| {
            f.class == sol.class && (f.report.energy - sol.report.energy).abs() < 1e-7
        });
        if !duplicate {
            found.push(sol);
        }
    }
    let mut take = |class: ElasticaClass| -> Result<ElasticaSolution> {
        let idx = found
            .iter()
            .enumerate()
            .filter(|(_, s)| s.class == class)
            .min_by(|a, b| a.1.report.energy.total_cmp(&b.1.report.energy))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::EnumerationIncomplete {
                ell,
                missing: class.to_string(),
            })?;
        Ok(found.swap_remove(idx))
    };
    let arc_plus = take(ElasticaClass::ArcPlus)?;
    let arc_minus = take(ElasticaClass::ArcMinus)?;
    let loop_plus = take(ElasticaClass::LoopPlus)?;
    let loop_minus = take(ElasticaClass::LoopMinus)?;
    found.sort_by(|a, b| a.report.energy.total_cmp(&b.report.energy));
    Ok(Catalogue {
        ell,
        segment: exact_segment(ell)?,
        arc_plus,
        arc_minus,
        loop_plus,
        loop_minus,
        extras: found,
    })
}

/// The half-fold figure-eight: endpoints at the origin, positive total
/// curvature, image in the closed upper half-plane, symmetric under `x → -x`.
#[derive(Debug, Clone)]
pub struct FigureEightData {
    pub curve: DiscreteCurve,
    pub shooting: ShootingState,
    pub r_star: f64,
    pub e_star: f64,
}

/// `{rStar, eStar}` document shared with the other modules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureEightConstants {
    #[serde(rename = "rStar")]
    pub r_star: f64,
    #[serde(rename = "eStar")]
    pub e_star: f64,
}

impl FigureEightData {
    pub fn constants(&self) -> FigureEightConstants {
        FigureEightConstants {
            r_star: self.r_star,
            e_star: self.e_star,
        }
    }

    /// Hausdorff distance between the curve and its mirror image `x → -x`.
    pub fn symmetry_residual(&self) -> f64 {
        let mirrored = DiscreteCurve::from_points_unchecked(
            self.curve.points().iter().map(|p| Point::new(-p.x, p.y)).collect(),
        );
        hausdorff(&self.curve, &mirrored)
    }
}

pub fn figure_eight() -> Result<FigureEightData> {
    figure_eight_with(16384)
}

/// Shoots at `ℓ = 0` from the scanned figure-eight slope and the standard
/// loop seeds, keeps the least-energy non-straight solution and orients it.
pub fn figure_eight_with(steps: usize) -> Result<FigureEightData> {
    let mut seeds = scan_seeds(0.0);
    let a_star = lobe_landmarks().slope_figure_eight;
    for factor in [0.95, 1.05] {
        if let Some(s) = lobe_seed(a_star * factor) {
            seeds.push(s);
        }
    }
    let mut best: Option<ElasticaSolution> = None;
    let mut last_err = None;
    for seed in seeds {
        match shoot_pinned_with(0.0, seed, steps) {
            Ok(sol) if sol.class != ElasticaClass::Segment && sol.lobes == 1 => {
                if best
                    .as_ref()
                    .is_none_or(|b| sol.report.energy < b.report.energy)
                {
                    best = Some(sol);
                }
            }
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    let best = best.ok_or_else(|| {
        last_err.unwrap_or(Error::ShootingFailure {
            iterations: 0,
            residual: f64::NAN,
        })
    })?;
    // positive curvature, midpoint tangent pointing in -x so the lobe sits on top
    let mut state = best.shooting;
    if state.slope < 0.0 {
        state = state.mirrored();
    }
    let tc = best.report.total_curvature.abs();
    state.theta0 = std::f64::consts::PI - 0.5 * tc;
    let trajectory = integrate_elastica(&state, steps)?;
    let rep = report(&trajectory.curve, 1.0);
    Ok(FigureEightData {
        curve: trajectory.curve,
        shooting: state,
        r_star: rep.total_curvature,
        e_star: rep.energy,
    })
}

/// `ℓ_† = √λ_†`.
pub fn threshold_ell() -> f64 {
    LAMBDA_DAGGER.sqrt()
}

/// Energy gap `E[loop] - E[shorter arc]` at `ell`, from shooting both families.
pub fn loop_minus_shorter_arc(ell: f64) -> Result<f64> {
    let lm = lobe_landmarks();
    if ell >= lm.max_chord {
        return Err(Error::InvalidArgument(format!(
            "no shorter arc beyond chord {:.4}",
            lm.max_chord
        )));
    }
    let chord = |a: f64, target: f64| {
        lobe_shape(a, SCAN_STEP)
            .map(|l| l.signed_chord - target)
            .unwrap_or(f64::NAN)
    };
    let a_loop = bisect(|a| chord(a, -ell), 1e-3, lm.slope_figure_eight, 1e-13);
    let mut hi = lm.slope_max_chord * 2.0;
    while chord(hi, ell) > 0.0 {
        hi *= 2.0;
    }
    let a_short = bisect(|a| chord(a, ell), lm.slope_max_chord, hi, 1e-13);
    let loop_sol = shoot_pinned(ell, lobe_seed(a_loop).ok_or(Error::Divergence { at: 0.0 })?)?;
    let short = shoot_pinned(ell, lobe_seed(a_short).ok_or(Error::Divergence { at: 0.0 })?)?;
    Ok(loop_sol.report.energy - short.report.energy)
}

/// Recomputes `ℓ_†` as the root of [`loop_minus_shorter_arc`] by bisection.
pub fn verify_threshold(lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut glo = loop_minus_shorter_arc(lo)?;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let g = loop_minus_shorter_arc(mid)?;
        if (g > 0.0) == (glo > 0.0) {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LoopSweepRow {
    pub ell: f64,
    pub energy: f64,
    pub total_curvature: f64,
    pub energy_gap: f64,
    pub curvature_gap: f64,
}

/// Upper-loop energy and total curvature along a decreasing sequence of `ℓ`,
/// with the deviations from the figure-eight constants.
pub fn loop_convergence_sweep(
    ells: &[f64],
    figure_eight: &FigureEightConstants,
) -> Result<Vec<LoopSweepRow>> {
    ells.iter()
        .map(|&ell| {
            let cat = enumerate_low_energy(ell)?;
            let lp = &cat.loop_plus;
            Ok(LoopSweepRow {
                ell,
                energy: lp.report.energy,
                total_curvature: lp.report.total_curvature,
                energy_gap: (lp.report.energy - figure_eight.e_star).abs(),
                curvature_gap: (lp.report.total_curvature - figure_eight.r_star).abs(),
            })
        })
        .collect()
}
