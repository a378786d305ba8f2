//! Small structured linear solvers: tridiagonal systems and symmetric banded
//! Cholesky factorizations.

/// Solves a general tridiagonal system with the Thomas algorithm.
///
/// `sub[0]` and `sup[n-1]` are ignored. The matrix is assumed to be
/// diagonally dominant or otherwise safe to eliminate without pivoting.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// LDLᵀ factorization of a symmetric tridiagonal matrix that is required to be
/// positive definite.
#[derive(Debug, Clone)]
pub struct TridiagonalLdl {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl TridiagonalLdl {
    /// `off[i]` couples rows `i` and `i + 1`. Returns `None` when a pivot is not positive.
    pub fn factor(diag: &[f64], off: &[f64]) -> Option<Self> {
        let n = diag.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut piv = diag[i];
            if i > 0 {
                piv -= l[i - 1] * l[i - 1] * d[i - 1];
            }
            if !(piv > 0.0) || !piv.is_finite() {
                return None;
            }
            d[i] = piv;
            if i + 1 < n {
                l[i] = off[i] / piv;
            }
        }
        Some(Self { d, l })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = rhs.to_vec();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
        x
    }
}

/// Symmetric banded matrix stored by its lower band.
#[derive(Debug, Clone)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    // row-major: entry (i, i - k) at i * (bw + 1) + k
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Adds `v` to entry (i, j); entries outside the band are rejected by a debug assertion.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(r - c <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        self.data[r * (self.bw + 1) + (r - c)] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.data[r * (self.bw + 1) + (r - c)]
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * (self.bw + 1)] += v;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * (self.bw + 1)]).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for k in 0..=self.bw.min(i) {
                let j = i - k;
                let a = self.data[i * (self.bw + 1) + k];
                y[i] += a * x[j];
                if k > 0 {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Banded Cholesky factorization; `None` if the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.data.clone();
        let idx = |r: usize, c: usize| r * (bw + 1) + (r - c);
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut s = l[idx(j, j)];
            for k in lo..j {
                let v = l[idx(j, k)];
                s -= v * v;
            }
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            let djj = s.sqrt();
            l[idx(j, j)] = djj;
            for i in j + 1..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut s = l[idx(i, j)];
                for k in lo_i..j {
                    s -= l[idx(i, k)] * l[idx(j, k)];
                }
                l[idx(i, j)] = s / djj;
            }
        }
        Some(BandedCholesky { n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let idx = |r: usize, c: usize| r * (bw + 1) + (r - c);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[idx(i, k)] * x[k];
            }
            x[i] = s / self.l[idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[idx(k, i)] * x[k];
            }
            x[i] = s / self.l[idx(i, i)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn thomas_matches_dense() {
        let sub = [0.0, 1.0, -0.5, 0.3];
        let diag = [4.0, 5.0, 3.0, 2.5];
        let sup = [1.0, 0.2, 0.4, 0.0];
        let rhs = [1.0, 2.0, 3.0, 4.0];
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        let mut a = DMatrix::zeros(4, 4);
        for i in 0..4 {
            a[(i, i)] = diag[i];
            if i > 0 {
                a[(i, i - 1)] = sub[i];
            }
            if i < 3 {
                a[(i, i + 1)] = sup[i];
            }
        }
        let r = &a * DVector::from_column_slice(&x) - DVector::from_column_slice(&rhs);
        assert!(r.amax() < 1e-13);
    }

    #[test]
    fn banded_cholesky_matches_dense() {
        let n = 12;
        let bw = 3;
        let mut m = BandedSym::zeros(n, bw);
        for i in 0..n {
            m.add(i, i, 10.0 + i as f64);
            for k in 1..=bw {
                if i >= k {
                    m.add(i, i - k, 1.0 / (k as f64 + i as f64 * 0.1));
                }
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = m.cholesky().expect("spd").solve(&rhs);
        let y = m.mul_vec(&x);
        for (a, b) in y.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut m = BandedSym::zeros(3, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, -1.0);
        m.add(2, 2, 1.0);
        assert!(m.cholesky().is_none());
        assert!(TridiagonalLdl::factor(&[1.0, -2.0], &[0.0]).is_none());
    }

    #[test]
    fn tridiagonal_ldl_solves() {
        let diag = [2.0, 2.0, 2.0, 2.0];
        let off = [-1.0, -1.0, -1.0];
        let f = TridiagonalLdl::factor(&diag, &off).unwrap();
        let x = f.solve(&[1.0, 0.0, 0.0, 1.0]);
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
