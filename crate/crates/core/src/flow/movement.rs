//! Minimizing movement on equal-edge polygons.
//!
//! A polygon with `N` edges of common length `h` and edge angles `θ_j` has
//! nodes `p_i = h Σ_{j<i} (cos θ_j, sin θ_j)`; its discrete energy is
//! `(1/h) Σ (θ_i − θ_{i−1})² + N h`. One step minimizes
//! `E + (1/2τ) Σ w_i ((p_i − p⁰_i)·n_i)²` subject to `p_N = (ℓ, 0)`, with the
//! normals `n_i` and dual lengths `w_i` of the previous polygon, by Newton's
//! method on the KKT system with an ℓ1 merit line search.

use nalgebra::{DMatrix, DVector};

use crate::curve::{resample_uniform, tangent_angles, DiscreteCurve, Point};
use crate::error::{Error, Result};

#[inline]
fn dir(t: f64) -> Point {
    let (s, c) = t.sin_cos();
    Point::new(c, s)
}

#[inline]
fn perp_dir(t: f64) -> Point {
    let (s, c) = t.sin_cos();
    Point::new(-s, c)
}

/// Edge angles and common edge length of a polygon starting at the origin.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Polygon {
    pub theta: Vec<f64>,
    pub h: f64,
}

impl Polygon {
    pub fn edges(&self) -> usize {
        self.theta.len()
    }

    pub fn nodes(&self) -> Vec<Point> {
        let mut p = Vec::with_capacity(self.theta.len() + 1);
        let mut acc = Point::zeros();
        p.push(acc);
        for &t in &self.theta {
            acc += dir(t) * self.h;
            p.push(acc);
        }
        p
    }

    /// Nodes with the last one placed exactly at `(ell, 0)`.
    pub fn curve(&self, ell: f64) -> Result<DiscreteCurve> {
        let mut p = self.nodes();
        let n = p.len() - 1;
        p[n] = Point::new(ell, 0.0);
        DiscreteCurve::new(p)
    }

    fn bending_sum(&self) -> f64 {
        self.theta.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
    }

    pub fn energy(&self) -> f64 {
        self.bending_sum() / self.h + self.theta.len() as f64 * self.h
    }

    fn closure(&self, ell: f64) -> Point {
        let s = self.theta.iter().fold(Point::zeros(), |a, &t| a + dir(t));
        s * self.h - Point::new(ell, 0.0)
    }

    /// Converts a curve to an equal-edge polygon with `edges` edges ending at
    /// `(ell, 0)`: uniform resampling, then a minimal-norm projection onto
    /// the closure constraint.
    pub fn from_curve(curve: &DiscreteCurve, edges: usize, ell: f64) -> Result<Self> {
        let c = if curve.edges() == edges && curve.quasi_uniformity() < 1.0 + 1e-9 {
            curve.clone()
        } else {
            resample_uniform(curve, edges)?
        };
        let theta = tangent_angles(&c);
        let h = c.edge_lengths().iter().sum::<f64>() / edges as f64;
        let mut poly = Polygon { theta, h };
        poly.project_closure(ell)?;
        Ok(poly)
    }

    /// Gauss-Newton projection onto `p_N = (ell, 0)` in the metric
    /// `|δθ|² + (δh/h)²`.
    fn project_closure(&mut self, ell: f64) -> Result<()> {
        let scale = self.h * self.theta.len() as f64;
        for _ in 0..50 {
            let g = self.closure(ell);
            if g.norm() <= 1e-14 * scale.max(1.0) {
                return Ok(());
            }
            let n = self.theta.len();
            let mut gram = nalgebra::Matrix2::zeros();
            let cols: Vec<Point> = self.theta.iter().map(|&t| perp_dir(t) * self.h).collect();
            let sum_dir = self.theta.iter().fold(Point::zeros(), |a, &t| a + dir(t));
            for c in &cols {
                gram += c * c.transpose();
            }
            let ch = sum_dir * self.h;
            gram += ch * ch.transpose();
            let y = gram
                .try_inverse()
                .ok_or_else(|| Error::InvalidArgument("closure projection is singular".into()))?
                * g;
            for j in 0..n {
                self.theta[j] -= cols[j].dot(&y);
            }
            self.h -= self.h * self.h * sum_dir.dot(&y);
            if !(self.h > 0.0) {
                return Err(Error::InvalidArgument("closure projection collapsed".into()));
            }
        }
        Err(Error::InvalidArgument(format!(
            "closure projection did not converge (residual {:e})",
            self.closure(ell).norm()
        )))
    }
}

pub(crate) struct StepProblem<'a> {
    pub ell: f64,
    old: &'a [Point],
    normals: Vec<Point>,
    /// `w_i / τ` at the interior nodes (zero at the ends).
    u: Vec<f64>,
}

pub(crate) struct StepSolution {
    pub poly: Polygon,
    pub iterations: usize,
    pub converged: bool,
    /// Last Newton correction in units of the edge length.
    pub correction: f64,
}

impl<'a> StepProblem<'a> {
    pub fn new(old: &'a [Point], ell: f64, tau: f64) -> Self {
        let n = old.len();
        let mut normals = vec![Point::zeros(); n];
        let mut u = vec![0.0; n];
        for i in 1..n - 1 {
            let t = (old[i + 1] - old[i - 1]).normalize();
            normals[i] = Point::new(-t.y, t.x);
            let w = 0.5 * ((old[i] - old[i - 1]).norm() + (old[i + 1] - old[i]).norm());
            u[i] = w / tau;
        }
        Self {
            ell,
            old,
            normals,
            u,
        }
    }

    pub fn objective(&self, poly: &Polygon) -> f64 {
        let p = poly.nodes();
        let movement: f64 = (1..p.len() - 1)
            .map(|i| self.u[i] * (p[i] - self.old[i]).dot(&self.normals[i]).powi(2))
            .sum();
        poly.energy() + 0.5 * movement
    }

    /// Gradient of the objective and, when `mu` is given, the Hessian of the
    /// Lagrangian `F + μ·(p_N − (ℓ,0))`, both in `(θ_0, ..., θ_{N−1}, h)`.
    pub fn derivatives(&self, poly: &Polygon, mu: Option<Point>) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let n = poly.edges();
        let h = poly.h;
        let th = &poly.theta;
        let p = poly.nodes();
        let e: Vec<Point> = th.iter().map(|&t| dir(t)).collect();
        let ep: Vec<Point> = th.iter().map(|&t| perp_dir(t)).collect();
        let alpha = |i: usize| -> f64 {
            if i == 0 || i == n {
                0.0
            } else {
                th[i] - th[i - 1]
            }
        };
        let a_sum = poly.bending_sum();

        // suffix sums over interior nodes i > j
        let mut s = vec![Point::zeros(); n];
        let mut r = vec![Point::zeros(); n];
        let mut q = vec![nalgebra::Matrix2::zeros(); n];
        let mut acc_s = Point::zeros();
        let mut acc_r = Point::zeros();
        let mut acc_q = nalgebra::Matrix2::zeros();
        let mut grad_h_move = 0.0;
        let mut hess_hh_move = 0.0;
        for j in (0..n).rev() {
            s[j] = acc_s;
            r[j] = acc_r;
            q[j] = acc_q;
            let i = j;
            if i >= 1 && i < n {
                let ni = self.normals[i];
                let sigma = (p[i] - self.old[i]).dot(&ni);
                let pn = p[i].dot(&ni);
                acc_s += ni * (self.u[i] * sigma);
                acc_r += ni * (self.u[i] * pn);
                acc_q += ni * ni.transpose() * self.u[i];
                grad_h_move += self.u[i] * sigma * pn / h;
                hess_hh_move += self.u[i] * (pn / h).powi(2);
            }
        }

        let mut g = DVector::zeros(n + 1);
        for j in 0..n {
            g[j] = 2.0 / h * (alpha(j) - alpha(j + 1)) + h * ep[j].dot(&s[j]);
        }
        g[n] = -a_sum / (h * h) + n as f64 + grad_h_move;

        let Some(mu) = mu else { return (g, None) };
        let mut hm = DMatrix::zeros(n + 1, n + 1);
        for k in 0..n {
            let qk = q[k] * ep[k];
            for j in 0..=k {
                let v = h * h * ep[j].dot(&qk);
                hm[(j, k)] = v;
                hm[(k, j)] = v;
            }
        }
        for j in 0..n {
            let lap = if j == 0 || j == n - 1 { 1.0 } else { 2.0 };
            hm[(j, j)] += 2.0 / h * lap - h * e[j].dot(&s[j]) - h * mu.dot(&e[j]);
            if j + 1 < n {
                hm[(j, j + 1)] -= 2.0 / h;
                hm[(j + 1, j)] -= 2.0 / h;
            }
            let mixed = -2.0 / (h * h) * (alpha(j) - alpha(j + 1))
                + ep[j].dot(&(r[j] + s[j]))
                + mu.dot(&ep[j]);
            hm[(j, n)] = mixed;
            hm[(n, j)] = mixed;
        }
        hm[(n, n)] = 2.0 * a_sum / (h * h * h) + hess_hh_move;
        (g, Some(hm))
    }

    fn constraint_jacobian(poly: &Polygon) -> DMatrix<f64> {
        let n = poly.edges();
        let mut jac = DMatrix::zeros(2, n + 1);
        let mut sum = Point::zeros();
        for (j, &t) in poly.theta.iter().enumerate() {
            let c = perp_dir(t) * poly.h;
            jac[(0, j)] = c.x;
            jac[(1, j)] = c.y;
            sum += dir(t);
        }
        jac[(0, n)] = sum.x;
        jac[(1, n)] = sum.y;
        jac
    }

    /// Largest node displacement produced by a correction `dz`, over `h`.
    fn correction_size(poly: &Polygon, dz: &DVector<f64>) -> f64 {
        let n = poly.edges();
        let mut acc = Point::zeros();
        let mut worst = 0.0f64;
        let p = poly.nodes();
        for i in 1..=n {
            acc += perp_dir(poly.theta[i - 1]) * (poly.h * dz[i - 1]);
            let d = acc + p[i] * (dz[n] / poly.h);
            worst = worst.max(d.norm());
        }
        worst / poly.h
    }

    pub fn solve(&self, start: &Polygon, tol: f64, max_iter: usize) -> StepSolution {
        let n = start.edges();
        let mut poly = start.clone();
        let mut mu = Point::zeros();
        let mut nu: f64 = 1.0;
        let mut correction = f64::INFINITY;
        let mut shift = 0.0;
        for it in 0..max_iter {
            let (grad, hess) = self.derivatives(&poly, Some(mu));
            let hess = hess.expect("requested");
            let jac = Self::constraint_jacobian(&poly);
            let g = poly.closure(self.ell);
            let hh = poly.h;
            let scale = |k: usize| if k < n { 1.0 / hh } else { n as f64 / hh };
            let mut solved = None;
            for _ in 0..40 {
                let mut k = DMatrix::zeros(n + 3, n + 3);
                k.view_mut((0, 0), (n + 1, n + 1)).copy_from(&hess);
                for d in 0..=n {
                    k[(d, d)] += shift * scale(d);
                }
                k.view_mut((n + 1, 0), (2, n + 1)).copy_from(&jac);
                k.view_mut((0, n + 1), (n + 1, 2)).copy_from(&jac.transpose());
                let mut rhs = DVector::zeros(n + 3);
                rhs.rows_mut(0, n + 1).copy_from(&(-&grad));
                rhs[n + 1] = -g.x;
                rhs[n + 2] = -g.y;
                if let Some(sol) = k.lu().solve(&rhs) {
                    let dz = sol.rows(0, n + 1).into_owned();
                    let curv = dz.dot(&(&hess * &dz)) + shift * (0..=n).map(|d| scale(d) * dz[d] * dz[d]).sum::<f64>();
                    if curv > 0.0 || dz.norm() == 0.0 {
                        solved = Some((dz, Point::new(sol[n + 1], sol[n + 2])));
                        break;
                    }
                }
                shift = if shift == 0.0 { 1e-8 } else { shift * 10.0 };
            }
            let Some((dz, mu_new)) = solved else {
                return StepSolution {
                    poly,
                    iterations: it,
                    converged: false,
                    correction,
                };
            };
            correction = Self::correction_size(&poly, &dz);
            let apply = |poly: &Polygon, t: f64| Polygon {
                theta: poly.theta.iter().enumerate().map(|(j, v)| v + t * dz[j]).collect(),
                h: poly.h + t * dz[n],
            };
            if correction <= tol {
                let next = apply(&poly, 1.0);
                if next.h > 0.0 {
                    poly = next;
                }
                return StepSolution {
                    poly,
                    iterations: it + 1,
                    converged: true,
                    correction,
                };
            }
            nu = nu.max(2.0 * mu_new.x.abs().max(mu_new.y.abs()) + 1e-6);
            let merit = |poly: &Polygon| {
                let c = poly.closure(self.ell);
                self.objective(poly) + nu * (c.x.abs() + c.y.abs())
            };
            let phi0 = merit(&poly);
            let slope = grad.dot(&dz) - nu * (g.x.abs() + g.y.abs());
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-12 {
                let trial = apply(&poly, t);
                if trial.h > 0.0 {
                    let phi = merit(&trial);
                    // near convergence the merit change drowns in rounding
                    if phi <= phi0 + 1e-4 * t * slope || (correction < 1e-6 && t == 1.0) {
                        poly = trial;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                shift = if shift == 0.0 { 1e-6 } else { shift * 10.0 };
                continue;
            }
            mu = mu_new;
            shift = if t == 1.0 { shift * 0.1 } else { shift };
            if shift < 1e-10 {
                shift = 0.0;
            }
        }
        StepSolution {
            poly,
            iterations: max_iter,
            converged: false,
            correction,
        }
    }
}

/// Critical point of the polygon energy under the closure constraint by
/// undamped Newton on the KKT system, so saddles are found as readily as
/// minima. `start` has to be close already.
pub(crate) fn critical_point(start: &Polygon, ell: f64, tol: f64, max_iter: usize) -> Result<Polygon> {
    let n = start.edges();
    let nodes = start.nodes();
    let problem = StepProblem::new(&nodes, ell, f64::INFINITY);
    let mut poly = start.clone();
    let mut mu = Point::zeros();
    for _ in 0..max_iter {
        let (grad, hess) = problem.derivatives(&poly, Some(mu));
        let hess = hess.expect("requested");
        let jac = StepProblem::constraint_jacobian(&poly);
        let g = poly.closure(ell);
        let mut k = DMatrix::zeros(n + 3, n + 3);
        k.view_mut((0, 0), (n + 1, n + 1)).copy_from(&hess);
        k.view_mut((n + 1, 0), (2, n + 1)).copy_from(&jac);
        k.view_mut((0, n + 1), (n + 1, 2)).copy_from(&jac.transpose());
        let mut rhs = DVector::zeros(n + 3);
        rhs.rows_mut(0, n + 1).copy_from(&(-&grad));
        rhs[n + 1] = -g.x;
        rhs[n + 2] = -g.y;
        let sol = k
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidArgument("singular KKT system at a critical point".into()))?;
        let dz = sol.rows(0, n + 1).into_owned();
        let correction = StepProblem::correction_size(&poly, &dz);
        for j in 0..n {
            poly.theta[j] += dz[j];
        }
        poly.h += dz[n];
        mu = Point::new(sol[n + 1], sol[n + 2]);
        if !(poly.h > 0.0) {
            return Err(Error::InvalidArgument("critical point search collapsed".into()));
        }
        if correction <= tol {
            return Ok(poly);
        }
    }
    Err(Error::InvalidArgument(format!(
        "critical point search did not converge in {max_iter} iterations"
    )))
}

/// Lowest mode of the Lagrangian Hessian at a critical polygon among
/// perturbations `(δθ, δh/h)` that preserve closure to first order. Returns the mode, normalized
/// so the largest node displacement is `1` and the summed vertical
/// displacement is not positive, and its eigenvalue.
pub(crate) fn constrained_lowest_mode(poly: &Polygon, ell: f64) -> Result<(Vec<f64>, f64, f64)> {
    let n = poly.edges();
    if n < 3 {
        return Err(Error::TooFewNodes { min: 3, got: n });
    }
    let nodes = poly.nodes();
    let problem = StepProblem::new(&nodes, ell, f64::INFINITY);
    let (grad, _) = problem.derivatives(poly, None);
    let jac = StepProblem::constraint_jacobian(poly);
    let mu = (&jac * jac.transpose())
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("degenerate closure constraint".into()))?
        * (&jac * &grad)
        * -1.0;
    let (_, hess) = problem.derivatives(poly, Some(Point::new(mu[0], mu[1])));
    let hess = hess.expect("requested");

    // variables θ_0..θ_{n-1} and δh/h
    let free: Vec<usize> = (0..=n).collect();
    let k = free.len();
    let unit = |v: usize| if v == n { poly.h } else { 1.0 };
    let hr = DMatrix::from_fn(k, k, |a, b| hess[(free[a], free[b])] * unit(free[a]) * unit(free[b]));
    let jr = DMatrix::from_fn(2, k, |r, a| jac[(r, free[a])] * unit(free[a]));
    let gram = (&jr * jr.transpose())
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("degenerate closure constraint".into()))?;
    let proj = DMatrix::identity(k, k) - jr.transpose() * gram * &jr;
    let shift = 10.0 * hr.amax() + 1.0;
    let a = &proj * &hr * &proj + (DMatrix::identity(k, k) - &proj) * shift;
    let eig = nalgebra::SymmetricEigen::new(a);
    let (imin, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    let mut dz = vec![0.0; n + 1];
    for (a, &v) in free.iter().enumerate() {
        dz[v] = eig.eigenvectors[(a, imin)] * unit(v);
    }
    let mut acc = Point::zeros();
    let mut peak = 0.0f64;
    let mut drift = 0.0;
    for i in 1..=n {
        acc += perp_dir(poly.theta[i - 1]) * (poly.h * dz[i - 1]);
        let d = acc + nodes[i] * (dz[n] / poly.h);
        peak = peak.max(d.norm());
        drift += d.y;
    }
    let sign = if drift > 0.0 { -1.0 } else { 1.0 };
    for v in &mut dz {
        *v *= sign / peak;
    }
    let h_dir = dz.pop().expect("h entry");
    Ok((dz, h_dir, lambda))
}

/// `poly` moved by `eps` along `(dθ, δh)` and projected back onto closure.
pub(crate) fn displaced(poly: &Polygon, ell: f64, dtheta: &[f64], dh: f64, eps: f64) -> Result<Polygon> {
    let mut out = Polygon {
        theta: poly.theta.iter().zip(dtheta).map(|(t, d)| t + eps * d).collect(),
        h: poly.h + eps * dh,
    };
    if !(out.h > 0.0) {
        return Err(Error::InvalidArgument("displacement collapsed the polygon".into()));
    }
    out.project_closure(ell)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::discrete;
    use std::f64::consts::PI;

    fn sample_poly(n: usize) -> Polygon {
        let theta = (0..n)
            .map(|j| {
                let u = (j as f64 + 0.5) / n as f64;
                1.2 * (PI * u).cos() + 0.3 * (3.0 * PI * u).sin()
            })
            .collect();
        Polygon { theta, h: 0.05 }
    }

    fn perturbed_old(poly: &Polygon) -> Vec<Point> {
        poly.nodes()
            .iter()
            .enumerate()
            .map(|(i, p)| p + Point::new(0.01 * (i as f64).sin(), 0.02 * (0.7 * i as f64).cos()))
            .collect()
    }

    #[test]
    fn energy_matches_node_energy() {
        let poly = sample_poly(24);
        let nodes = poly.nodes();
        assert!((poly.energy() - discrete::energy(&nodes, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_differences() {
        let poly = sample_poly(16);
        let old = perturbed_old(&poly);
        let ell = poly.nodes()[16].x;
        let prob = StepProblem::new(&old, ell, 0.3);
        let mu = Point::new(0.7, -0.4);
        let (g, hess) = prob.derivatives(&poly, Some(mu));
        let hess = hess.unwrap();
        let n = poly.edges();
        let eps = 1e-6;
        let shifted = |k: usize, d: f64| {
            let mut p = poly.clone();
            if k < n {
                p.theta[k] += d;
            } else {
                p.h += d;
            }
            p
        };
        for k in 0..=n {
            let fd = (prob.objective(&shifted(k, eps)) - prob.objective(&shifted(k, -eps))) / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-6 * g[k].abs().max(1.0), "grad {k}: {fd} {}", g[k]);
        }
        let lgrad = |p: &Polygon| {
            let (g, _) = prob.derivatives(p, None);
            let jac = StepProblem::constraint_jacobian(p);
            g + jac.transpose() * DVector::from_vec(vec![mu.x, mu.y])
        };
        for k in 0..=n {
            let col = (lgrad(&shifted(k, eps)) - lgrad(&shifted(k, -eps))) / (2.0 * eps);
            for j in 0..=n {
                assert!(
                    (col[j] - hess[(j, k)]).abs() < 1e-5 * hess[(j, k)].abs().max(1.0),
                    "hess ({j},{k}): {} {}",
                    col[j],
                    hess[(j, k)]
                );
            }
        }
    }

    #[test]
    fn projection_closes_the_polygon() {
        let mut poly = sample_poly(32);
        let target = poly.nodes()[32].x + 0.05;
        poly.theta[3] += 0.1;
        poly.project_closure(target).unwrap();
        let end = poly.nodes()[32];
        assert!((end - Point::new(target, 0.0)).norm() < 1e-13);
    }
}
