use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{closure, dirichlet, trapezoid_weight, AngleCurve};
#[cfg(test)]
use super::theta_samples;
use crate::elastica::{integrate_elastica, lobe_landmarks, lobe_shape, ShootingState};
use crate::error::{Error, Result};
use crate::linalg::TridiagonalLdl;
use crate::optim::{minimize_newton, NewtonProblem, NewtonSettings};

#[derive(Debug, Clone, Copy)]
pub struct ConstrainedOptions {
    /// Stationarity tolerance (scaled max norm of the Lagrangian gradient).
    pub tol: f64,
    /// Closure residual tolerance.
    pub constraint_tol: f64,
    pub initial_penalty: f64,
    pub max_penalty: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for ConstrainedOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            constraint_tol: 1e-9,
            initial_penalty: 10.0,
            max_penalty: 1e6,
            max_outer: 60,
            max_inner: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedMin {
    pub curve: AngleCurve,
    pub ell: f64,
    pub energy: f64,
    pub constraint_residual: f64,
    pub stationarity: f64,
    pub multipliers: [f64; 2],
    pub converged: bool,
    pub seed_index: usize,
}

/// Augmented Lagrangian
/// `E - μ·g + (ρ/2)|g|²` with `g = (Lc∫cos θ - ℓ, Lc∫sin θ)` (the factor
/// `Lc` dropped when `ℓ = 0`) over `x = (φ_1..φ_{M-1}, c, Lc)`.
#[derive(Debug, Clone)]
pub struct AugmentedLagrangian {
    pub m: usize,
    pub r: f64,
    pub ell: f64,
    pub mu: [f64; 2],
    pub rho: f64,
}

struct Pieces {
    theta: Vec<f64>,
    length: f64,
    dirichlet: f64,
    cos: f64,
    sin: f64,
}

impl Pieces {
    /// Constraint scale `s(Lc)` and its derivative: closed curves (`ℓ = 0`)
    /// use the scale-free closure `∫e^{iθ} = 0`, so shrinking cannot reduce
    /// the violation.
    fn scale(&self, ell: f64) -> (f64, f64) {
        if ell == 0.0 {
            (1.0, 0.0)
        } else {
            (self.length, 1.0)
        }
    }

    fn g(&self, ell: f64) -> [f64; 2] {
        let (s, _) = self.scale(ell);
        [s * self.cos - ell, s * self.sin]
    }

    fn displacement_residual(&self, ell: f64) -> f64 {
        (self.length * self.cos - ell)
            .abs()
            .max((self.length * self.sin).abs())
    }
}

impl AugmentedLagrangian {
    pub fn pack(ac: &AngleCurve) -> Vec<f64> {
        let m = ac.resolution();
        let mut x = ac.phi[1..m].to_vec();
        x.push(ac.c);
        x.push(ac.length);
        x
    }

    pub fn unpack(&self, x: &[f64]) -> Result<AngleCurve> {
        let mut phi = vec![0.0; self.m + 1];
        phi[1..self.m].copy_from_slice(&x[..self.m - 1]);
        AngleCurve::new(x[self.m - 1], phi, self.r, x[self.m])
    }

    fn pieces(&self, x: &[f64]) -> Pieces {
        let m = self.m;
        let c = x[m - 1];
        let mf = m as f64;
        let mut theta = Vec::with_capacity(m + 1);
        theta.push(c);
        for j in 1..m {
            theta.push(c + self.r * j as f64 / mf + x[j - 1]);
        }
        theta.push(c + self.r);
        let (cos, sin) = closure(&theta);
        Pieces {
            dirichlet: dirichlet(&theta),
            theta,
            length: x[m],
            cos,
            sin,
        }
    }

    pub fn constraints(&self, x: &[f64]) -> [f64; 2] {
        self.pieces(x).g(self.ell)
    }

    /// Max-norm distance of the end point from `(ℓ, 0)`.
    pub fn closure_residual(&self, x: &[f64]) -> f64 {
        self.pieces(x).displacement_residual(self.ell)
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        let p = self.pieces(x);
        p.dirichlet / p.length + p.length
    }

    /// First-order multiplier estimate: least-squares fit of `∇E` by the
    /// constraint gradients, in the `L²(du)` inner product on `φ`.
    pub fn multiplier_estimate(&self, x: &[f64]) -> [f64; 2] {
        let with = |mu: [f64; 2]| {
            let p = AugmentedLagrangian {
                mu,
                rho: 0.0,
                ..self.clone()
            };
            p.gradient(x)
        };
        let ge = with([0.0, 0.0]);
        let j1: Vec<f64> = ge.iter().zip(with([1.0, 0.0])).map(|(a, b)| a - b).collect();
        let j2: Vec<f64> = ge.iter().zip(with([0.0, 1.0])).map(|(a, b)| a - b).collect();
        let n = self.m - 1;
        let mf = self.m as f64;
        let dot = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .enumerate()
                .map(|(i, (x, y))| if i < n { mf * x * y } else { x * y })
                .sum::<f64>()
        };
        let (a11, a12, a22) = (dot(&j1, &j1), dot(&j1, &j2), dot(&j2, &j2));
        let (b1, b2) = (dot(&j1, &ge), dot(&j2, &ge));
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 1e-14 * (a11 * a22).max(1e-300)) {
            return [0.0, 0.0];
        }
        [(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det]
    }

    fn multiplier_terms(&self, p: &Pieces) -> (f64, f64) {
        let g = p.g(self.ell);
        (
            -self.mu[0] + self.rho * g[0],
            -self.mu[1] + self.rho * g[1],
        )
    }
}

impl NewtonProblem for AugmentedLagrangian {
    fn dim(&self) -> usize {
        self.m + 1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let length = x[self.m];
        if !(length > 0.0) {
            return f64::INFINITY;
        }
        let p = self.pieces(x);
        let g = p.g(self.ell);
        p.dirichlet / length + length - self.mu[0] * g[0] - self.mu[1] * g[1]
            + 0.5 * self.rho * (g[0] * g[0] + g[1] * g[1])
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mf = m as f64;
        let p = self.pieces(x);
        let lc = p.length;
        let (a1, a2) = self.multiplier_terms(&p);
        let (sc, dsc) = p.scale(self.ell);
        let th = &p.theta;
        let mut out = vec![0.0; m + 1];
        let mut gc = 0.0;
        for j in 0..=m {
            let w = trapezoid_weight(j, m);
            let (s, c) = th[j].sin_cos();
            let left = if j > 0 { th[j] - th[j - 1] } else { 0.0 };
            let right = if j < m { th[j + 1] - th[j] } else { 0.0 };
            let i_theta = 2.0 * mf * (left - right);
            let gj = i_theta / lc + sc * (a1 * (-w * s) + a2 * (w * c));
            gc += gj;
            if j > 0 && j < m {
                out[j - 1] = gj;
            }
        }
        out[m - 1] = gc;
        out[m] = -p.dirichlet / (lc * lc) + 1.0 + dsc * (a1 * p.cos + a2 * p.sin);
        out
    }

    fn newton_step(&self, x: &[f64], g: &[f64], shift: f64) -> Option<Vec<f64>> {
        let m = self.m;
        let n = m - 1;
        let mf = m as f64;
        let p = self.pieces(x);
        let lc = p.length;
        let (a1, a2) = self.multiplier_terms(&p);
        let rho = self.rho;
        let (sc, dsc) = p.scale(self.ell);
        let th = &p.theta;

        let mut diag = vec![0.0; n];
        let off = vec![-2.0 * mf / lc; n.saturating_sub(1)];
        let mut b_c = vec![0.0; n];
        let mut b_l = vec![0.0; n];
        let mut g1 = vec![0.0; n];
        let mut g2 = vec![0.0; n];
        let (mut h_cc, mut h_cl) = (0.0, 0.0);
        let (mut sum_ct, mut sum_st) = (0.0, 0.0);
        for j in 0..=m {
            let w = trapezoid_weight(j, m);
            let (s, c) = th[j].sin_cos();
            let (ct, st) = (-w * s, w * c);
            let (ctt, stt) = (-w * c, -w * s);
            let d = sc * (a1 * ctt + a2 * stt);
            let mixed = dsc * (a1 * ct + a2 * st);
            let left = if j > 0 { th[j] - th[j - 1] } else { 0.0 };
            let right = if j < m { th[j + 1] - th[j] } else { 0.0 };
            let i_theta = 2.0 * mf * (left - right);
            h_cc += d;
            h_cl += mixed;
            sum_ct += ct;
            sum_st += st;
            if j > 0 && j < m {
                let k = j - 1;
                diag[k] = 4.0 * mf / lc + d + shift;
                b_c[k] = d;
                b_l[k] = -i_theta / (lc * lc) + mixed;
                g1[k] = sc * ct;
                g2[k] = sc * st;
            }
        }
        let h_ll = 2.0 * p.dirichlet / (lc * lc * lc);
        let (g1c, g1l) = (sc * sum_ct, dsc * p.cos);
        let (g2c, g2l) = (sc * sum_st, dsc * p.sin);

        let t = TridiagonalLdl::factor(&diag, &off)?;
        // K = T + W Wᵀ, W = √ρ [g1 g2]
        let sr = rho.sqrt();
        let w1: Vec<f64> = g1.iter().map(|v| sr * v).collect();
        let w2: Vec<f64> = g2.iter().map(|v| sr * v).collect();
        let tw1 = t.solve(&w1);
        let tw2 = t.solve(&w2);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let cap = [
            [1.0 + dot(&w1, &tw1), dot(&w1, &tw2)],
            [dot(&w2, &tw1), 1.0 + dot(&w2, &tw2)],
        ];
        let cap_det = cap[0][0] * cap[1][1] - cap[0][1] * cap[1][0];
        if !(cap_det > 0.0) {
            return None;
        }
        let k_solve = |v: &[f64]| -> Vec<f64> {
            let tv = t.solve(v);
            let (r1, r2) = (dot(&w1, &tv), dot(&w2, &tv));
            let y1 = (cap[1][1] * r1 - cap[0][1] * r2) / cap_det;
            let y2 = (cap[0][0] * r2 - cap[1][0] * r1) / cap_det;
            tv.iter()
                .zip(tw1.iter().zip(&tw2))
                .map(|(a, (b, c))| a - b * y1 - c * y2)
                .collect()
        };

        let u_c: Vec<f64> = (0..n)
            .map(|k| b_c[k] + rho * (g1[k] * g1c + g2[k] * g2c))
            .collect();
        let u_l: Vec<f64> = (0..n)
            .map(|k| b_l[k] + rho * (g1[k] * g1l + g2[k] * g2l))
            .collect();
        let q = [
            [
                h_cc + rho * (g1c * g1c + g2c * g2c) + shift,
                h_cl + rho * (g1c * g1l + g2c * g2l),
            ],
            [
                h_cl + rho * (g1c * g1l + g2c * g2l),
                h_ll + rho * (g1l * g1l + g2l * g2l) + shift,
            ],
        ];
        let ku_c = k_solve(&u_c);
        let ku_l = k_solve(&u_l);
        let schur = [
            [q[0][0] - dot(&u_c, &ku_c), q[0][1] - dot(&u_c, &ku_l)],
            [q[1][0] - dot(&u_l, &ku_c), q[1][1] - dot(&u_l, &ku_l)],
        ];
        let s_det = schur[0][0] * schur[1][1] - schur[0][1] * schur[1][0];
        if !(schur[0][0] > 0.0 && s_det > 0.0) {
            return None;
        }
        let kg = k_solve(&g[..n]);
        let rhs = [-g[n] + dot(&u_c, &kg), -g[n + 1] + dot(&u_l, &kg)];
        let pc = (schur[1][1] * rhs[0] - schur[0][1] * rhs[1]) / s_det;
        let pl = (schur[0][0] * rhs[1] - schur[1][0] * rhs[0]) / s_det;
        let mut step: Vec<f64> = (0..n).map(|k| -kg[k] - ku_c[k] * pc - ku_l[k] * pl).collect();
        step.push(pc);
        step.push(pl);
        if step.iter().all(|v| v.is_finite()) {
            Some(step)
        } else {
            None
        }
    }

    fn stationarity(&self, _x: &[f64], g: &[f64]) -> f64 {
        let n = self.m - 1;
        let phi = g[..n].iter().fold(0.0f64, |a, v| a.max(v.abs())) * self.m as f64;
        phi.max(g[n].abs()).max(g[n + 1].abs())
    }
}

/// Near a feasible point the rotation `c` is not a feasible direction, and
/// the Lagrangian curves along it by `μ1·ℓ`; a tensile multiplier (`μ1 < 0`)
/// needs `ρ·ℓ² > -μ1·ℓ` for the inner problem to be locally convex there.
fn rotation_penalty(ell: f64, mu: [f64; 2], opts: &ConstrainedOptions) -> f64 {
    if ell > 0.0 && mu[0] < 0.0 {
        (-4.0 * mu[0] / ell).min(opts.max_penalty)
    } else {
        0.0
    }
}

/// Augmented-Lagrangian minimization from a single seed.
pub fn minimize_from(
    ell: f64,
    seed: &AngleCurve,
    opts: &ConstrainedOptions,
) -> Result<ConstrainedMin> {
    let m = seed.resolution();
    if m < 4 {
        return Err(Error::InvalidArgument(format!("resolution {m} too small")));
    }
    let r = seed.r;
    let degenerate = |length: f64| Error::LengthDegeneracy { ell, r, length };
    if seed.length < 1e-6 {
        return Err(degenerate(seed.length));
    }
    let mut problem = AugmentedLagrangian {
        m,
        r,
        ell,
        mu: [0.0, 0.0],
        rho: opts.initial_penalty,
    };
    let settings = NewtonSettings {
        tol: opts.tol,
        max_iter: opts.max_inner,
        ..NewtonSettings::default()
    };
    let mut x = AugmentedLagrangian::pack(seed);
    problem.mu = problem.multiplier_estimate(&x);
    problem.rho = problem.rho.max(rotation_penalty(ell, problem.mu, opts));
    let mut previous = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    let mut stalled = 0;
    let mut last_stat = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..opts.max_outer {
        let out = minimize_newton(&problem, x, &settings);
        x = out.x;
        if x[m] < 1e-6 {
            return Err(degenerate(x[m]));
        }
        let g = problem.constraints(&x);
        residual = problem.closure_residual(&x);
        last_stat = out.stationarity;
        problem.mu = [
            problem.mu[0] - problem.rho * g[0],
            problem.mu[1] - problem.rho * g[1],
        ];
        if residual <= opts.constraint_tol && out.stationarity <= opts.tol {
            converged = true;
            break;
        }
        if problem.rho >= opts.max_penalty {
            if residual < 0.5 * best_residual {
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= 4 {
                    break;
                }
            }
        }
        best_residual = best_residual.min(residual);
        if residual > 0.25 * previous {
            problem.rho = (problem.rho * 10.0).min(opts.max_penalty);
        }
        problem.rho = problem.rho.max(rotation_penalty(ell, problem.mu, opts));
        previous = residual;
    }
    let curve = problem.unpack(&x)?;
    Ok(ConstrainedMin {
        energy: problem.energy(&x),
        curve,
        ell,
        constraint_residual: residual,
        stationarity: last_stat,
        multipliers: problem.mu,
        converged,
        seed_index: 0,
    })
}

/// Best converged result over all seeds.
pub fn minimize_constrained(
    ell: f64,
    r: f64,
    seeds: &[AngleCurve],
    opts: &ConstrainedOptions,
) -> Result<ConstrainedMin> {
    if !(ell >= 0.0) {
        return Err(Error::InvalidArgument(format!("ell must be nonnegative, got {ell}")));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    let mut best: Option<ConstrainedMin> = None;
    let mut last_err = None;
    for (i, seed) in seeds.iter().enumerate() {
        if seed.r != r {
            return Err(Error::InvalidArgument(format!(
                "seed {i} has total curvature {} instead of {r}",
                seed.r
            )));
        }
        match minimize_from(ell, seed, opts) {
            Ok(mut res) if res.converged => {
                res.seed_index = i;
                if best.as_ref().is_none_or(|b| res.energy < b.energy) {
                    best = Some(res);
                }
            }
            Ok(res) => {
                last_err = Some(Error::OptimizationFailure {
                    ell,
                    r,
                    reason: format!(
                        "seed {i}: residual {:.2e}, stationarity {:.2e}",
                        res.constraint_residual, res.stationarity
                    ),
                })
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some(b), _) => Ok(b),
        (None, Some(Error::LengthDegeneracy { ell, r, length })) => {
            Err(Error::LengthDegeneracy { ell, r, length })
        }
        (None, _) => Err(Error::OptimizationFailure {
            ell,
            r,
            reason: "no seed converged".into(),
        }),
    }
}

/// Seed at total curvature `r` with the profile and length of an earlier minimizer.
pub fn warm_seed(previous: &AngleCurve, r: f64) -> Result<AngleCurve> {
    AngleCurve::aligned_with_length(previous.phi.clone(), r, previous.length)
}

/// Follows a minimizer from its total curvature to `r_target` in steps of
/// at most `max_step`, warm-starting every solve from the previous shape.
pub fn continue_in_r(
    start: &ConstrainedMin,
    r_target: f64,
    max_step: f64,
    opts: &ConstrainedOptions,
) -> Option<ConstrainedMin> {
    let r0 = start.curve.r;
    let steps = ((r_target - r0).abs() / max_step).ceil().max(1.0) as usize;
    let mut current = start.clone();
    for k in 1..=steps {
        let r = if k == steps {
            r_target
        } else {
            r0 + (r_target - r0) * k as f64 / steps as f64
        };
        let seed = warm_seed(&current.curve, r).ok()?;
        let next = minimize_from(start.ell, &seed, opts).ok()?;
        if !next.converged {
            return None;
        }
        current = next;
    }
    Some(current)
}

/// `φ` profile (end values zero) of the one-lobe stationary solution of
/// slope `a`, sampled on `M + 1` nodes, together with its total curvature.
pub fn lobe_profile(slope: f64, m: usize) -> Result<(Vec<f64>, f64)> {
    let lobe = lobe_shape(slope, 2e-3)?;
    let traj = integrate_elastica(&ShootingState::new(0.0, slope, lobe.half_period), m.max(64))?;
    let theta = resample_profile(&traj.theta, m);
    let tc = theta[m] - theta[0];
    let phi = (0..=m)
        .map(|j| {
            if j == 0 || j == m {
                0.0
            } else {
                theta[j] - theta[0] - tc * j as f64 / m as f64
            }
        })
        .collect();
    Ok((phi, tc))
}

fn resample_profile(values: &[f64], m: usize) -> Vec<f64> {
    let n = values.len() - 1;
    if n == m {
        return values.to_vec();
    }
    (0..=m)
        .map(|j| {
            let s = j as f64 * n as f64 / m as f64;
            let i = (s.floor() as usize).min(n - 1);
            let t = s - i as f64;
            values[i] * (1.0 - t) + values[i + 1] * t
        })
        .collect()
}

/// Multi-start seeds for `(ℓ, r)` at resolution `M`: the circular arc, lobe
/// profiles of the stationary family (rescaled to total curvature `r` and
/// unscaled), and random six-mode sine series drawn from a ChaCha stream
/// seeded by `(rng_seed, ℓ, r)`. Non-arc profiles are used both with the
/// length that closes at distance `ℓ` and with the energy-balanced length.
pub fn default_seeds(ell: f64, r: f64, m: usize, rng_seed: u64) -> Vec<AngleCurve> {
    let mut profiles: Vec<Vec<f64>> = vec![vec![0.0; m + 1]];
    let a_star = lobe_landmarks().slope_figure_eight;
    for (k, slope) in [a_star, 1.0, 2.0].into_iter().enumerate() {
        if let Ok((phi, tc)) = lobe_profile(slope, m) {
            if tc.abs() > 1e-9 {
                let scale = r / tc;
                if scale.abs() > 1e-12 {
                    profiles.push(phi.iter().map(|v| v * scale).collect());
                }
            }
            if k == 0 {
                let sign = if r < 0.0 { -1.0 } else { 1.0 };
                profiles.push(phi.iter().map(|v| v * sign).collect());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(
        rng_seed ^ ell.to_bits().rotate_left(17) ^ r.to_bits().rotate_left(41),
    );
    for _ in 0..2 {
        let amps: Vec<f64> = (1..=6)
            .map(|k| rng.random_range(-1.0..1.0) * 1.5 / k as f64)
            .collect();
        profiles.push(sine_series(&amps, m));
    }
    let mut seeds: Vec<AngleCurve> = profiles
        .iter()
        .filter_map(|phi| AngleCurve::aligned(phi.clone(), r, ell).ok())
        .collect();
    if ell > 0.0 {
        seeds.extend(
            profiles[1..]
                .iter()
                .filter_map(|phi| AngleCurve::balanced(phi.clone(), r).ok()),
        );
    }
    seeds
}

pub(crate) fn sine_series(amps: &[f64], m: usize) -> Vec<f64> {
    (0..=m)
        .map(|j| {
            if j == 0 || j == m {
                return 0.0;
            }
            let u = j as f64 / m as f64;
            amps.iter()
                .enumerate()
                .map(|(k, a)| a * (std::f64::consts::PI * (k + 1) as f64 * u).sin())
                .sum()
        })
        .collect()
}

#[cfg(test)]
fn packed_theta(problem: &AugmentedLagrangian, x: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; problem.m + 1];
    phi[1..problem.m].copy_from_slice(&x[..problem.m - 1]);
    theta_samples(x[problem.m - 1], &phi, problem.r)
}
