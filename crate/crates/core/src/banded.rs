//! Banded LU with partial pivoting for slab systems.
//!
//! Unknowns are first reordered by a caller-supplied permutation (slab systems
//! sort by spatial position, which makes the matrix narrow-banded in 1D). The
//! bandwidths are then read off the permuted sparsity pattern.

use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularPivot {
    pub column: usize,
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    /// row `i` stores columns `i - kl ..= i + kl + ku`
    band: Vec<f64>,
    /// multipliers of column `j` for rows `j+1 ..= j+kl`
    lower: Vec<f64>,
    pivots: Vec<usize>,
    /// `order[new] = old`
    order: Vec<usize>,
}

impl BandedLu {
    /// Factors `P A P^T` where `P` maps old index `order[new]` to `new`.
    pub fn factor(a: &CsrMatrix, order: &[usize]) -> Result<Self, SingularPivot> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        assert_eq!(order.len(), n);
        let mut inverse = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        let mut scale = 0.0f64;
        for (i, j, v) in a.triplets() {
            let (r, c) = (inverse[i], inverse[j]);
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
            scale = scale.max(v.abs());
        }
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        for (i, j, v) in a.triplets() {
            let (r, c) = (inverse[i], inverse[j]);
            band[r * width + (c + kl - r)] += v;
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            band,
            lower: vec![0.0; n * kl.max(1)],
            pivots: vec![0; n],
            order: order.to_vec(),
        };
        lu.eliminate(scale)?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    fn eliminate(&mut self, scale: f64) -> Result<(), SingularPivot> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let tiny = 1e-14 * scale.max(f64::MIN_POSITIVE);
        for j in 0..n {
            let last_row = (j + kl).min(n - 1);
            let last_col = (j + kl + ku).min(n - 1);
            let mut p = j;
            let mut best = self.band[self.at(j, j)].abs();
            for r in j + 1..=last_row {
                let v = self.band[self.at(r, j)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) {
                return Err(SingularPivot { column: j });
            }
            self.pivots[j] = p;
            if p != j {
                for c in j..=last_col {
                    let (x, y) = (self.at(j, c), self.at(p, c));
                    self.band.swap(x, y);
                }
            }
            let piv = self.band[self.at(j, j)];
            for r in j + 1..=last_row {
                let idx = self.at(r, j);
                let m = self.band[idx] / piv;
                self.band[idx] = 0.0;
                self.lower[j * kl + (r - j - 1)] = m;
                if m != 0.0 {
                    for c in j + 1..=last_col {
                        let u = self.band[self.at(j, c)];
                        let t = self.at(r, c);
                        self.band[t] -= m * u;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.order.iter().map(|&old| b[old]).collect();
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                y.swap(j, p);
            }
            let yj = y[j];
            if yj != 0.0 {
                for r in j + 1..=(j + kl).min(n - 1) {
                    y[r] -= self.lower[j * kl + (r - j - 1)] * yj;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for c in i + 1..=(i + kl + ku).min(n - 1) {
                s -= self.band[self.at(i, c)] * y[c];
            }
            y[i] = s / self.band[self.at(i, i)];
        }
        for (new, &old) in self.order.iter().enumerate() {
            b[old] = y[new];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CooBuilder;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, kl: usize, ku: usize, rng: &mut ChaCha8Rng) -> CsrMatrix {
        let mut c = CooBuilder::new(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                c.push(i, j, rng.random_range(-1.0..1.0));
            }
        }
        c.build()
    }

    #[test]
    fn matches_dense_lu_with_pivoting() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (40, 3, 5), (60, 7, 2)] {
            let a = random_banded(n, kl, ku, &mut rng);
            let order: Vec<usize> = (0..n).collect();
            let lu = BandedLu::factor(&a, &order).unwrap();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut x = b.clone();
            lu.solve_in_place(&mut x);
            let dense = a.to_dense();
            let want = dense.clone().lu().solve(&DVector::from_vec(b)).unwrap();
            let err = (DVector::from_vec(x) - &want).amax() / want.amax();
            assert!(err < 1e-10, "n={n} err={err}");
        }
    }

    #[test]
    fn permutation_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 30;
        let a = random_banded(n, 2, 2, &mut rng);
        // scramble, then pass the inverse scramble as the ordering
        let perm: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let mut c = CooBuilder::new(n, n);
        for (i, j, v) in a.triplets() {
            c.push(perm[i], perm[j], v);
        }
        let scrambled = c.build();
        let lu = BandedLu::factor(&scrambled, &perm).unwrap();
        assert!(lu.bandwidths().0 <= 2 && lu.bandwidths().1 <= 2);
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        let r = scrambled.mul_vec(&x);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_matrix_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let a = CsrMatrix::from_dense(&m);
        assert!(BandedLu::factor(&a, &[0, 1]).is_err());
    }
}
