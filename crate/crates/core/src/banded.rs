//! Banded matrices with an LU factorization using partial pivoting.
//!
//! Rows are stored with room for the `kl` extra superdiagonals created by
//! row interchanges, as in LAPACK's `gbtrf`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j) && i < self.n && j < self.n, "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j) && i < self.n && j < self.n, "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Adds `s` to every diagonal entry.
    pub fn shift_diagonal(&mut self, s: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] += s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)].abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn lu(&self) -> Result<BandedLu> {
        BandedLu::factor(self.clone(), false)
    }

    /// LU that replaces exactly-zero pivots by a tiny multiple of the matrix
    /// norm instead of failing. Only meaningful inside bordered solves where
    /// the bordering restores nonsingularity.
    pub fn lu_regularized(&self) -> Result<BandedLu> {
        BandedLu::factor(self.clone(), true)
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    fn factor(mut m: BandedMatrix, regularize: bool) -> Result<Self> {
        let n = m.n;
        let (kl, ku) = (m.kl, m.ku);
        let tiny = f64::EPSILON * m.norm_inf().max(f64::MIN_POSITIVE);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = m.data[m.idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = m.data[m.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (m.idx(k, j), m.idx(p, j));
                    m.data.swap(a, b);
                }
            }
            let kk = m.idx(k, k);
            if m.data[kk] == 0.0 || !m.data[kk].is_finite() {
                if regularize && m.data[kk] == 0.0 {
                    m.data[kk] = tiny;
                } else {
                    return Err(Error::Singular { row: k });
                }
            }
            let pivot = m.data[kk];
            for r in k + 1..=last_row {
                let rk = m.idx(r, k);
                let l = m.data[rk] / pivot;
                m.data[rk] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let (rj, kj) = (m.idx(r, j), m.idx(k, j));
                        m.data[rj] -= l * m.data[kj];
                    }
                }
            }
        }
        Ok(Self { m, pivots })
    }

    pub fn dim(&self) -> usize {
        self.m.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + m.kl).min(n - 1) {
                    b[r] -= m.data[m.idx(r, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + m.kl + m.ku).min(n - 1) {
                s -= m.data[m.idx(k, j)] * b[j];
            }
            b[k] = s / m.data[m.idx(k, k)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Ratio of the largest to the smallest pivot magnitude. A cheap proxy
    /// for the condition number.
    pub fn condition_estimate(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for k in 0..self.m.n {
            let v = self.m.data[self.m.idx(k, k)].abs();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Sign of the determinant, or 0 for an exactly singular factor.
    pub fn determinant_sign(&self) -> f64 {
        let mut sign = 1.0;
        for k in 0..self.m.n {
            if self.pivots[k] != k {
                sign = -sign;
            }
            let v = self.m.data[self.m.idx(k, k)];
            if v == 0.0 {
                return 0.0;
            }
            if v < 0.0 {
                sign = -sign;
            }
        }
        sign
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_banded(n: usize, kl: usize, ku: usize, vals: &[f64]) -> BandedMatrix {
        let mut m = BandedMatrix::zeros(n, kl, ku);
        let mut it = vals.iter().cycle();
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                m.set(i, j, *it.next().unwrap());
            }
        }
        m
    }

    #[test]
    fn needs_pivoting() {
        // Zero leading entry forces a row interchange.
        let mut m = BandedMatrix::zeros(3, 1, 1);
        m.set(0, 0, 0.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 2.0);
        m.set(1, 1, 1.0);
        m.set(1, 2, 1.0);
        m.set(2, 1, 3.0);
        m.set(2, 2, 4.0);
        let x = [1.0, -2.0, 0.5];
        let b = m.mul_vec(&x);
        let sol = m.lu().unwrap().solve(&b);
        for (a, e) in sol.iter().zip(x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_detected() {
        let m = BandedMatrix::zeros(4, 1, 1);
        assert!(matches!(m.lu(), Err(Error::Singular { row: 0 })));
        assert!(m.lu_regularized().is_ok());
    }

    proptest! {
        #[test]
        fn solve_matches_dense(
            n in 3usize..25,
            kl in 0usize..4,
            ku in 0usize..4,
            vals in prop::collection::vec(-1.0f64..1.0, 30),
            shift in 2.0f64..5.0,
        ) {
            let mut m = random_banded(n, kl, ku, &vals);
            // Alternate-sign shift keeps the matrix away from singular while
            // still exercising interchanges.
            for i in 0..n {
                let s = if i % 3 == 0 { 0.1 } else { shift };
                m.add(i, i, s);
            }
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let b = m.mul_vec(&x);
            let dense = m.to_dense();
            let reference = dense.clone().lu().solve(&nalgebra::DVector::from_vec(b.clone()));
            prop_assume!(reference.is_some());
            let reference = reference.unwrap();
            let sol = m.lu().unwrap().solve(&b);
            for i in 0..n {
                prop_assert!((sol[i] - reference[i]).abs() < 1e-8 * (1.0 + reference[i].abs()));
            }
            let det = dense.determinant();
            let sign = m.lu().unwrap().determinant_sign();
            prop_assert_eq!(sign, det.signum());
        }
    }
}
