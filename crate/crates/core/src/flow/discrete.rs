//! Discrete energy `Σ 2α_i²/(h_{i-1}+h_i) + λ·Σ h_i` of a polyline with its
//! gradient and banded Hessian in the interior node coordinates
//! `(x_1, y_1, ..., x_{N-1}, y_{N-1})`.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::curve::{turning_angle, Point};
use crate::linalg::BandedSym;

/// Half-bandwidth of the Hessian: a bending term couples nodes two apart.
pub const BANDWIDTH: usize = 5;

#[inline]
fn perp(v: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

/// Value, gradient and Hessian of `2α²/(|a|+|b|)` in `(a, b)`, where `a`
/// and `b` are the incoming and outgoing edge vectors of a node.
pub(crate) fn bending_term(a: &Vector2<f64>, b: &Vector2<f64>) -> (f64, Vector4<f64>, Matrix4<f64>) {
    let (la, lb) = (a.norm(), b.norm());
    let alpha = turning_angle(a, b);
    let s = la + lb;
    let (ua, ub) = (a / la, b / lb);
    let da = -perp(a) / (la * la);
    let db = perp(b) / (lb * lb);
    let grad_alpha = Vector4::new(da.x, da.y, db.x, db.y);
    let grad_s = Vector4::new(ua.x, ua.y, ub.x, ub.y);

    let j = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    let haa = -(j / (la * la) - (j * a) * a.transpose() * (2.0 / la.powi(4)));
    let hbb = j / (lb * lb) - (j * b) * b.transpose() * (2.0 / lb.powi(4));
    let mut hess_alpha = Matrix4::zeros();
    hess_alpha.fixed_view_mut::<2, 2>(0, 0).copy_from(&sym(&haa));
    hess_alpha.fixed_view_mut::<2, 2>(2, 2).copy_from(&sym(&hbb));
    let mut hess_s = Matrix4::zeros();
    hess_s
        .fixed_view_mut::<2, 2>(0, 0)
        .copy_from(&((Matrix2::identity() - ua * ua.transpose()) / la));
    hess_s
        .fixed_view_mut::<2, 2>(2, 2)
        .copy_from(&((Matrix2::identity() - ub * ub.transpose()) / lb));

    let value = 2.0 * alpha * alpha / s;
    let grad = grad_alpha * (4.0 * alpha / s) - grad_s * (2.0 * alpha * alpha / (s * s));
    let cross = grad_alpha * grad_s.transpose();
    let hess = (grad_alpha * grad_alpha.transpose()) * (4.0 / s)
        + hess_alpha * (4.0 * alpha / s)
        - (cross + cross.transpose()) * (4.0 * alpha / (s * s))
        - hess_s * (2.0 * alpha * alpha / (s * s))
        + (grad_s * grad_s.transpose()) * (4.0 * alpha * alpha / (s * s * s));
    (value, grad, hess)
}

fn sym(m: &Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

/// Degrees of freedom of node `i`, if it is interior.
#[inline]
fn dof(i: usize, n_nodes: usize) -> Option<usize> {
    (i > 0 && i + 1 < n_nodes).then(|| 2 * (i - 1))
}

pub(crate) fn energy(points: &[Point], lambda: f64) -> f64 {
    let mut e = 0.0;
    for w in points.windows(3) {
        let (a, b) = (w[1] - w[0], w[2] - w[1]);
        let alpha = turning_angle(&a, &b);
        e += 2.0 * alpha * alpha / (a.norm() + b.norm());
    }
    let length: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    e + lambda * length
}

/// Gradient with respect to the interior coordinates.
pub(crate) fn gradient(points: &[Point], lambda: f64) -> Vec<f64> {
    let n = points.len();
    let mut g = vec![0.0; 2 * (n - 2)];
    let mut add = |node: usize, v: Vector2<f64>| {
        if let Some(d) = dof(node, n) {
            g[d] += v.x;
            g[d + 1] += v.y;
        }
    };
    for i in 1..n - 1 {
        let (a, b) = (points[i] - points[i - 1], points[i + 1] - points[i]);
        let (la, lb) = (a.norm(), b.norm());
        let alpha = turning_angle(&a, &b);
        let s = la + lb;
        let da = -perp(&a) / (la * la);
        let db = perp(&b) / (lb * lb);
        let ga = da * (4.0 * alpha / s) - (a / la) * (2.0 * alpha * alpha / (s * s));
        let gb = db * (4.0 * alpha / s) - (b / lb) * (2.0 * alpha * alpha / (s * s));
        add(i - 1, -ga);
        add(i, ga - gb);
        add(i + 1, gb);
    }
    for j in 0..n - 1 {
        let e = points[j + 1] - points[j];
        let u = e / e.norm() * lambda;
        add(j, -u);
        add(j + 1, u);
    }
    g
}

/// Banded Hessian with respect to the interior coordinates.
pub(crate) fn hessian(points: &[Point], lambda: f64) -> BandedSym {
    let n = points.len();
    let mut h = BandedSym::zeros(2 * (n - 2), BANDWIDTH);
    for i in 1..n - 1 {
        let (a, b) = (points[i] - points[i - 1], points[i + 1] - points[i]);
        let (_, _, he) = bending_term(&a, &b);
        // node derivative = P · edge derivative with P rows (-I,0), (I,-I), (0,I)
        let nodes = [i - 1, i, i + 1];
        let coeff = |k: usize, edge: usize| -> f64 {
            match (k, edge) {
                (0, 0) => -1.0,
                (1, 0) => 1.0,
                (1, 1) => -1.0,
                (2, 1) => 1.0,
                _ => 0.0,
            }
        };
        for (k1, &n1) in nodes.iter().enumerate() {
            let Some(d1) = dof(n1, n) else { continue };
            for (k2, &n2) in nodes.iter().enumerate() {
                let Some(d2) = dof(n2, n) else { continue };
                if d2 > d1 {
                    continue;
                }
                let mut block = Matrix2::zeros();
                for e1 in 0..2 {
                    let c1 = coeff(k1, e1);
                    if c1 == 0.0 {
                        continue;
                    }
                    for e2 in 0..2 {
                        let c2 = coeff(k2, e2);
                        if c2 == 0.0 {
                            continue;
                        }
                        block += he.fixed_view::<2, 2>(2 * e1, 2 * e2) * (c1 * c2);
                    }
                }
                add_block(&mut h, d1, d2, &block);
            }
        }
    }
    for j in 0..n - 1 {
        let e = points[j + 1] - points[j];
        let le = e.norm();
        let u = e / le;
        let block = (Matrix2::identity() - u * u.transpose()) * (lambda / le);
        let (dj, dk) = (dof(j, n), dof(j + 1, n));
        if let Some(d) = dj {
            add_block(&mut h, d, d, &block);
        }
        if let Some(d) = dk {
            add_block(&mut h, d, d, &block);
        }
        if let (Some(d1), Some(d2)) = (dk, dj) {
            add_block(&mut h, d1, d2, &(-block));
        }
    }
    h
}

/// Adds a 2×2 block at `(d1, d2)` with `d1 ≥ d2`; diagonal blocks are
/// symmetrized, off-diagonal blocks are added in full.
fn add_block(h: &mut BandedSym, d1: usize, d2: usize, block: &Matrix2<f64>) {
    if d1 == d2 {
        h.add(d1, d1, block[(0, 0)]);
        h.add(d1 + 1, d1 + 1, block[(1, 1)]);
        h.add(d1 + 1, d1, 0.5 * (block[(1, 0)] + block[(0, 1)]));
    } else {
        for r in 0..2 {
            for c in 0..2 {
                h.add(d1 + r, d2 + c, block[(r, c)]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{report, semicircle};
    use crate::optim::finite_difference_gradient;
    use std::f64::consts::PI;

    fn wavy(n: usize) -> Vec<Point> {
        (0..=n)
            .map(|i| {
                let u = i as f64 / n as f64;
                Point::new(u + 0.05 * (7.0 * u).sin(), 0.4 * (PI * u).sin() + 0.1 * (5.0 * u).cos())
            })
            .collect()
    }

    fn unpack(base: &[Point], x: &[f64]) -> Vec<Point> {
        let mut p = base.to_vec();
        for i in 1..p.len() - 1 {
            p[i] = Point::new(x[2 * (i - 1)], x[2 * (i - 1) + 1]);
        }
        p
    }

    fn pack(p: &[Point]) -> Vec<f64> {
        p[1..p.len() - 1].iter().flat_map(|q| [q.x, q.y]).collect()
    }

    #[test]
    fn energy_matches_report() {
        let c = semicircle(64).unwrap();
        let r = report(&c, 1.0);
        assert!((energy(c.points(), 1.0) - r.energy).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_differences() {
        let p = wavy(12);
        let g = gradient(&p, 1.3);
        let fd = finite_difference_gradient(|x| energy(&unpack(&p, x), 1.3), &pack(&p), 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn hessian_matches_differences() {
        let p = wavy(10);
        let h = hessian(&p, 0.7);
        let x = pack(&p);
        let n = x.len();
        let eps = 1e-6;
        for j in 0..n {
            let mut xp = x.clone();
            xp[j] += eps;
            let mut xm = x.clone();
            xm[j] -= eps;
            let gp = gradient(&unpack(&p, &xp), 0.7);
            let gm = gradient(&unpack(&p, &xm), 0.7);
            for i in 0..n {
                let fd = (gp[i] - gm[i]) / (2.0 * eps);
                let exact = if i.abs_diff(j) <= BANDWIDTH { h.get(i, j) } else { 0.0 };
                assert!(
                    (fd - exact).abs() < 1e-5 * fd.abs().max(1.0),
                    "({i},{j}) fd {fd} exact {exact}"
                );
            }
        }
    }
}
