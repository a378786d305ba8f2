//! Damped Newton minimization with a Levenberg shift and Armijo backtracking.
//!
//! The linear algebra is supplied by the problem, so structured Hessians
//! (banded, bordered tridiagonal plus low rank) can be factorized in linear time.

/// A smooth objective whose Newton systems the caller knows how to solve.
pub trait NewtonProblem {
    fn dim(&self) -> usize;

    /// Objective value; `f64::INFINITY` marks an inadmissible point.
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Solves `(H(x) + shift * D) p = -g` for a problem-specific positive
    /// diagonal scaling `D`. Returns `None` when the shifted Hessian is not
    /// positive definite.
    fn newton_step(&self, x: &[f64], g: &[f64], shift: f64) -> Option<Vec<f64>>;

    /// Mesh-independent stationarity measure used for the stopping test.
    fn stationarity(&self, _x: &[f64], g: &[f64]) -> f64 {
        g.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub initial_shift: f64,
    pub max_shift: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
            initial_shift: 1e-8,
            max_shift: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub stationarity: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn minimize_newton<P: NewtonProblem>(
    problem: &P,
    x0: Vec<f64>,
    settings: &NewtonSettings,
) -> NewtonOutcome {
    let mut x = x0;
    let mut f = problem.value(&x);
    let mut g = problem.gradient(&x);
    let mut stat = problem.stationarity(&x, &g);
    let mut shift = 0.0;
    let mut iterations = 0;

    while iterations < settings.max_iter {
        if stat <= settings.tol {
            return NewtonOutcome {
                x,
                value: f,
                stationarity: stat,
                iterations,
                converged: true,
            };
        }
        iterations += 1;

        let mut accepted = false;
        loop {
            let step = problem.newton_step(&x, &g, shift);
            let Some(p) = step else {
                shift = next_shift(shift, settings);
                if shift > settings.max_shift {
                    break;
                }
                continue;
            };
            let slope: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                shift = next_shift(shift, settings);
                if shift > settings.max_shift {
                    break;
                }
                continue;
            }
            let mut t = 1.0;
            let mut trial = vec![0.0; x.len()];
            while t > 1e-10 {
                for i in 0..x.len() {
                    trial[i] = x[i] + t * p[i];
                }
                let ft = problem.value(&trial);
                // relative slack absorbs rounding once f has stalled
                if ft.is_finite() && ft <= f + 1e-4 * t * slope + 1e-15 * f.abs() {
                    x.clone_from(&trial);
                    f = ft;
                    accepted = true;
                    break;
                }
                // below the resolution of f, progress is judged by the gradient
                if t == 1.0 && ft.is_finite() && (ft - f).abs() <= 1e-13 * f.abs().max(1.0) {
                    let gt = problem.gradient(&trial);
                    if problem.stationarity(&trial, &gt) < 0.5 * stat {
                        x.clone_from(&trial);
                        f = ft;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted {
                shift = if t == 1.0 { shift * 0.25 } else { shift };
                if shift < settings.initial_shift * 1e-4 {
                    shift = 0.0;
                }
                break;
            }
            shift = next_shift(shift, settings);
            if shift > settings.max_shift {
                break;
            }
        }
        if !accepted {
            break;
        }
        g = problem.gradient(&x);
        stat = problem.stationarity(&x, &g);
    }
    NewtonOutcome {
        converged: stat <= settings.tol,
        x,
        value: f,
        stationarity: stat,
        iterations,
    }
}

fn next_shift(shift: f64, settings: &NewtonSettings) -> f64 {
    if shift == 0.0 {
        settings.initial_shift
    } else {
        shift * 10.0
    }
}

/// Central finite-difference gradient; test and diagnostics helper.
pub fn finite_difference_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            y[i] = xi + h;
            let fp = f(&y);
            y[i] = xi - h;
            let fm = f(&y);
            y[i] = xi;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    /// Rosenbrock with a dense Hessian.
    struct Rosen;

    impl NewtonProblem for Rosen {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        }
        fn newton_step(&self, x: &[f64], g: &[f64], shift: f64) -> Option<Vec<f64>> {
            let h = DMatrix::from_row_slice(
                2,
                2,
                &[
                    2.0 - 400.0 * (x[1] - 3.0 * x[0] * x[0]) + shift,
                    -400.0 * x[0],
                    -400.0 * x[0],
                    200.0 + shift,
                ],
            );
            let chol = h.cholesky()?;
            let p = chol.solve(&(-DVector::from_column_slice(g)));
            Some(p.iter().copied().collect())
        }
    }

    #[test]
    fn newton_solves_rosenbrock() {
        let out = minimize_newton(&Rosen, vec![-1.2, 1.0], &NewtonSettings::default());
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fd_gradient_matches() {
        let x = [0.3, -0.7];
        let g = Rosen.gradient(&x);
        let fd = finite_difference_gradient(|y| Rosen.value(y), &x, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-5);
        }
    }
}
