//! Natural cubic spline through the nodes of a polyline, parametrized by
//! cumulative chord length. Used for remeshing.

use super::Point;
use crate::linalg::solve_tridiagonal;

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

pub(crate) struct ChordSpline {
    knots: Vec<f64>,
    values: Vec<Point>,
    second: Vec<Point>,
}

impl ChordSpline {
    pub(crate) fn new(points: &[Point]) -> Self {
        let n = points.len() - 1;
        let mut knots = Vec::with_capacity(n + 1);
        knots.push(0.0);
        for i in 0..n {
            let last = knots[i];
            knots.push(last + (points[i + 1] - points[i]).norm());
        }

        // natural end conditions: zero second derivative at both ends
        let mut second = vec![Point::zeros(); n + 1];
        if n >= 2 {
            let m = n - 1;
            let mut sub = vec![0.0; m];
            let mut diag = vec![0.0; m];
            let mut sup = vec![0.0; m];
            let mut rx = vec![0.0; m];
            let mut ry = vec![0.0; m];
            for j in 0..m {
                let i = j + 1;
                let h0 = knots[i] - knots[i - 1];
                let h1 = knots[i + 1] - knots[i];
                sub[j] = h0 / 6.0;
                diag[j] = (h0 + h1) / 3.0;
                sup[j] = h1 / 6.0;
                let slope = (points[i + 1] - points[i]) / h1 - (points[i] - points[i - 1]) / h0;
                rx[j] = slope.x;
                ry[j] = slope.y;
            }
            let sx = solve_tridiagonal(&sub, &diag, &sup, &rx);
            let sy = solve_tridiagonal(&sub, &diag, &sup, &ry);
            for j in 0..m {
                second[j + 1] = Point::new(sx[j], sy[j]);
            }
        }
        Self {
            knots,
            values: points.to_vec(),
            second,
        }
    }

    pub(crate) fn total_param(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    fn segment_of(&self, t: f64) -> usize {
        let n = self.knots.len() - 1;
        match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    pub(crate) fn eval(&self, t: f64) -> Point {
        let i = self.segment_of(t);
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        self.values[i] * a
            + self.values[i + 1] * b
            + (self.second[i] * (a * a * a - a) + self.second[i + 1] * (b * b * b - b)) * (h * h / 6.0)
    }

    fn derivative(&self, i: usize, t: f64) -> Point {
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        (self.values[i + 1] - self.values[i]) / h
            + (self.second[i + 1] * (3.0 * b * b - 1.0) - self.second[i] * (3.0 * a * a - 1.0))
                * (h / 6.0)
    }

    fn speed_integral(&self, i: usize, t0: f64, t1: f64) -> f64 {
        let mid = 0.5 * (t0 + t1);
        let half = 0.5 * (t1 - t0);
        GAUSS_NODES
            .iter()
            .zip(GAUSS_WEIGHTS.iter())
            .map(|(x, w)| w * self.derivative(i, mid + half * x).norm())
            .sum::<f64>()
            * half
    }

    /// Parameter values at which the spline arclength is uniformly split into `n` pieces.
    pub(crate) fn uniform_arclength_params(&self, n: usize) -> Vec<f64> {
        const SUB: usize = 4;
        // tabulate arclength on a refined parameter grid
        let mut table_t = vec![0.0];
        let mut table_s = vec![0.0];
        for i in 0..self.knots.len() - 1 {
            let (a, b) = (self.knots[i], self.knots[i + 1]);
            for k in 0..SUB {
                let t0 = a + (b - a) * k as f64 / SUB as f64;
                let t1 = a + (b - a) * (k + 1) as f64 / SUB as f64;
                let s = table_s.last().unwrap() + self.speed_integral(i, t0, t1);
                table_t.push(t1);
                table_s.push(s);
            }
        }
        let total = *table_s.last().unwrap();
        let mut params = Vec::with_capacity(n + 1);
        let mut cursor = 0;
        for j in 0..=n {
            let target = total * j as f64 / n as f64;
            while cursor + 1 < table_s.len() - 1 && table_s[cursor + 1] < target {
                cursor += 1;
            }
            let (s0, s1) = (table_s[cursor], table_s[cursor + 1]);
            let (t0, t1) = (table_t[cursor], table_t[cursor + 1]);
            let frac = if s1 > s0 { (target - s0) / (s1 - s0) } else { 0.0 };
            params.push(t0 + frac.clamp(0.0, 1.0) * (t1 - t0));
        }
        params[0] = 0.0;
        params[n] = self.total_param();
        params
    }
}
