//! Banded LU factorization with partial pivoting.
//!
//! Storage follows the LAPACK band layout: entry (i, j) lives at
//! `ab[j * ldab + kl + ku + i - j]` with `ldab = 2*kl + ku + 1`. The extra
//! `kl` superdiagonals hold fill produced by row pivoting.

use crate::error::Error;
use crate::Result;

#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    /// True when (i, j) is inside the assembled band (fill region excluded).
    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.ab[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.ab[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// y += A x over the assembled band.
    pub fn mat_vec_add(&self, x: &[f64], y: &mut [f64]) {
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                y[i] += self.ab[self.slot(i, j)] * xj;
            }
        }
    }

    /// Nonzero entries of the assembled band as (row, col, value).
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                let v = self.ab[self.slot(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// LU factorization with partial pivoting; consumes the matrix.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let kv = kl + ku; // upper bandwidth of U including fill
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // Pivot search in column j.
            let mut p = j;
            let mut pmax = self.ab[self.slot(j, j)].abs();
            for i in j + 1..=j + km {
                let v = self.ab[self.slot(i, j)].abs();
                if v > pmax {
                    p = i;
                    pmax = v;
                }
            }
            if pmax == 0.0 {
                return Err(Error::SingularSystem(format!(
                    "zero pivot in column {j}"
                )));
            }
            ipiv[j] = p;
            let hi_col = (j + kv).min(n - 1);
            if p != j {
                for col in j..=hi_col {
                    let sj = self.slot(j, col);
                    let sp = self.slot(p, col);
                    self.ab.swap(sj, sp);
                }
            }
            let pivot = self.ab[self.slot(j, j)];
            for i in j + 1..=j + km {
                let sij = self.slot(i, j);
                let l = self.ab[sij] / pivot;
                self.ab[sij] = l;
                if l != 0.0 {
                    for col in j + 1..=hi_col {
                        let sj = self.slot(j, col);
                        let si = self.slot(i, col);
                        self.ab[si] -= l * self.ab[sj];
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            kl,
            ku,
            ldab: self.ldab,
            ab: self.ab,
            ipiv,
        })
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        // Forward: apply row exchanges and L.
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let bj = b[j];
            if bj != 0.0 {
                let hi = (j + self.kl).min(n - 1);
                for i in j + 1..=hi {
                    b[i] -= self.ab[self.slot(i, j)] * bj;
                }
            }
        }
        // Back substitution with U.
        for j in (0..n).rev() {
            b[j] /= self.ab[self.slot(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    b[i] -= self.ab[self.slot(i, j)] * bj;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_returns_rhs() {
        let mut a = BandMatrix::new(5, 1, 1);
        for i in 0..5 {
            a.add(i, i, 1.0);
        }
        let lu = a.factor().unwrap();
        let mut b = vec![1.0, -2.0, 3.0, 0.5, 4.0];
        let expect = b.clone();
        lu.solve_in_place(&mut b);
        assert_eq!(b, expect);
    }

    #[test]
    fn laplacian_matches_hand_solution() {
        // Tridiagonal [-1, 2, -1], rhs all ones: solution x_i = i(n-i)/2
        // with 1-based i for the (n-1)-point discrete Laplacian.
        let n = 7;
        let mut a = BandMatrix::new(n, 1, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        let lu = a.factor().unwrap();
        let mut b = vec![1.0; n];
        lu.solve_in_place(&mut b);
        for i in 0..n {
            let k = (i + 1) as f64;
            let expect = k * (n as f64 + 1.0 - k) / 2.0;
            assert_relative_eq!(b[i], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_band_systems_solve_accurately() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(3..40);
            let kl = rng.gen_range(1..4.min(n));
            let ku = rng.gen_range(1..4.min(n));
            let mut a = BandMatrix::new(n, kl, ku);
            for i in 0..n {
                for j in i.saturating_sub(ku)..(i + kl + 1).min(n) {
                    if a.in_band(i, j) {
                        a.add(i, j, rng.gen_range(-1.0..1.0));
                    }
                }
                // Keep it comfortably nonsingular.
                a.add(i, i, 4.0);
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut b = vec![0.0; n];
            a.mat_vec_add(&x_true, &mut b);
            let lu = a.clone().factor().unwrap();
            let mut x = b.clone();
            lu.solve_in_place(&mut x);
            for i in 0..n {
                assert_relative_eq!(x[i], x_true[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn singular_matrix_detected() {
        let mut a = BandMatrix::new(3, 1, 1);
        a.add(0, 0, 1.0);
        a.add(2, 2, 1.0);
        assert!(a.factor().is_err());
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] requires a row swap.
        let mut a = BandMatrix::new(2, 1, 1);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        let lu = a.factor().unwrap();
        let mut b = vec![3.0, 5.0];
        lu.solve_in_place(&mut b);
        assert_relative_eq!(b[0], 5.0, epsilon = 1e-14);
        assert_relative_eq!(b[1], 3.0, epsilon = 1e-14);
    }
}
