//! Banded LU factorization with partial pivoting.
//!
//! Rows are stored as fixed-width windows `[i - kl, i + kl + ku]` so that
//! fill-in from row interchanges (at most `kl` rows down) fits in place.
//! Multipliers are kept separately and applied LINPACK-style during the
//! forward solve together with the recorded interchanges.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    mult: Vec<f64>,
    pivots: Vec<usize>,
    factored: bool,
}

impl BandedMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            mult: vec![0.0; n * kl],
            pivots: vec![0; n],
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
        self.factored = false;
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku, "({i},{j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    /// Accumulate into entry `(i, j)`; panics if it lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i},{j}) outside bandwidth ({}, {})",
            self.kl,
            self.ku
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// In-place factorization. Fails on an exactly zero (or non-finite) pivot.
    pub fn factor(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);

            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let a = self.data[self.idx(i, k)].abs();
                if a > best {
                    best = a;
                    p = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::SingularJacobian { pivot: k });
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }

            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let m = self.data[ik] / pivot;
                self.data[ik] = 0.0;
                self.mult[k * kl + (i - k - 1)] = m;
                if m == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= m * kj;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solve `A x = b` in place using the stored factorization.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &mut [f64]) {
        assert!(self.factored, "solve called before factor");
        assert_eq!(b.len(), self.n);
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.mult[k * kl + (i - k - 1)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                s -= self.data[self.idx(i, j)] * b[j];
            }
            b[i] = s / self.data[self.idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn tridiagonal() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [1 0 1] -> x = [1 1 1]
        let mut m = BandedMatrix::new(3, 1, 1);
        for i in 0..3 {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
                m.add(i - 1, i, -1.0);
            }
        }
        m.factor().unwrap();
        let mut b = vec![1.0, 0.0, 1.0];
        m.solve(&mut b);
        for x in b {
            assert!((x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn needs_pivoting() {
        // Zero on the first diagonal entry.
        let mut m = BandedMatrix::new(2, 1, 1);
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        m.add(1, 1, 1.0);
        m.factor().unwrap();
        let mut b = vec![2.0, 5.0];
        m.solve(&mut b);
        assert!((b[0] - 3.0).abs() < 1e-14 && (b[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let mut m = BandedMatrix::new(2, 1, 1);
        m.add(0, 0, 1.0);
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        m.add(1, 1, 1.0);
        assert!(matches!(m.factor(), Err(Error::SingularJacobian { pivot: 1 })));
    }

    proptest! {
        #[test]
        fn random_banded_systems(
            n in 1usize..30, kl in 0usize..4, ku in 0usize..4,
            seed in proptest::collection::vec(-1.0f64..1.0, 30 * 30 + 30),
        ) {
            let mut dense = vec![vec![0.0; n]; n];
            let mut m = BandedMatrix::new(n, kl, ku);
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    let mut v = seed[i * 30 + j];
                    if i == j {
                        v += 4.0 * v.signum();
                        if v == 0.0 { v = 4.0; }
                    }
                    dense[i][j] = v;
                    m.add(i, j, v);
                }
            }
            let x: Vec<f64> = (0..n).map(|i| seed[900 + i]).collect();
            let mut b = dense_mul(&dense, &x);
            m.factor().unwrap();
            m.solve(&mut b);
            for (got, want) in b.iter().zip(&x) {
                prop_assert!((got - want).abs() < 1e-9, "{} vs {}", got, want);
            }
        }
    }
}
