//! Minimal compressed-row storage used for slab blocks.

use nalgebra::DMatrix;

/// Triplet accumulator; duplicates are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct CooBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        if v != 0.0 {
            self.entries.push((i, j, v));
        }
    }

    /// Adds `scale * (t ⊗ s)` with the block origin at `(row0, col0)`.
    pub fn add_kron(
        &mut self,
        row0: usize,
        col0: usize,
        t: &DMatrix<f64>,
        s: &CsrMatrix,
        scale: f64,
    ) {
        if scale == 0.0 {
            return;
        }
        for b in 0..t.nrows() {
            for a in 0..t.ncols() {
                let tv = t[(b, a)] * scale;
                if tv == 0.0 {
                    continue;
                }
                for (i, j, sv) in s.triplets() {
                    self.push(row0 + b * s.nrows() + i, col0 + a * s.ncols() + j, tv * sv);
                }
            }
        }
    }

    /// Adds `scale * m` with the block origin at `(row0, col0)`.
    pub fn add_block(&mut self, row0: usize, col0: usize, m: &CsrMatrix, scale: f64) {
        for (i, j, v) in m.triplets() {
            self.push(row0 + i, col0 + j, scale * v);
        }
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            cols,
            vals,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CooBuilder::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        let mut c = CooBuilder::new(n, n);
        for i in 0..n {
            c.push(i, i, 1.0);
        }
        c.build()
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut c = CooBuilder::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                c.push(i, j, m[(i, j)]);
            }
        }
        c.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// `y += alpha * A x`
    pub fn mul_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi += alpha * s;
        }
    }

    /// `y += alpha * A^T x`
    pub fn mul_add_transpose(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.cols[k]] += alpha * self.vals[k] * xi;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_add(1.0, x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut c = CooBuilder::new(self.ncols, self.nrows);
        for (i, j, v) in self.triplets() {
            c.push(j, i, v);
        }
        c.build()
    }

    /// Sum `self + scale * other`.
    pub fn add(&self, other: &CsrMatrix, scale: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut c = CooBuilder::new(self.nrows, self.ncols);
        c.add_block(0, 0, self, 1.0);
        c.add_block(0, 0, other, scale);
        c.build()
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
