//! Dense row-major double-precision matrices.
//!
//! This is the sole numerical container of the crate. The multiply kernels
//! are written so that every output element is accumulated in a fixed
//! (row-major, ascending-k) order by exactly one thread: results are
//! bit-identical regardless of thread count, and a row of the output
//! depends only on the corresponding row of the left operand, so batched
//! evaluation equals row-by-row evaluation bitwise.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Minimum elements per rayon task; below this, parallel dispatch costs
/// more than it saves.
const PAR_GRAIN: usize = 16_384;

fn rows_per_chunk(total_rows: usize, cols: usize) -> usize {
    (PAR_GRAIN / cols.max(1)).clamp(1, total_rows.max(1))
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "from_vec: {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Single-row matrix view of a slice (copies).
    pub fn row_vector(v: &[f64]) -> Self {
        Matrix {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Copy of the rows `lo..hi`.
    pub fn slice_rows(&self, lo: usize, hi: usize) -> Matrix {
        assert!(lo <= hi && hi <= self.rows);
        Matrix {
            rows: hi - lo,
            cols: self.cols,
            data: self.data[lo * self.cols..hi * self.cols].to_vec(),
        }
    }

    /// Copy of the top-left `r x c` block.
    pub fn block(&self, r: usize, c: usize) -> Matrix {
        assert!(r <= self.rows && c <= self.cols);
        let mut out = Matrix::zeros(r, c);
        for i in 0..r {
            out.row_mut(i).copy_from_slice(&self.row(i)[..c]);
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|&x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Error unless every entry is finite; `context` names the operation.
    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                context: context.to_string(),
            })
        }
    }

    fn shape_err(&self, op: &'static str, other: &Matrix) -> Error {
        Error::ShapeMismatch {
            op,
            lhs_rows: self.rows,
            lhs_cols: self.cols,
            rhs_rows: other.rows,
            rhs_cols: other.cols,
        }
    }

    /// `self * other`. Output rows are processed in blocks of 8 that stay
    /// L1-resident while the right operand streams through once per block.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(self.shape_err("matmul", other));
        }
        let (k, n) = (self.cols, other.cols);
        let mut out = Matrix::zeros(self.rows, n);
        let chunk = 8usize.min(self.rows.max(1));
        out.data
            .par_chunks_mut(chunk * n)
            .enumerate()
            .for_each(|(ci, cdata)| {
                let i0 = ci * chunk;
                let rows_here = cdata.len() / n;
                for kk in 0..k {
                    let brow = &other.data[kk * n..kk * n + n];
                    for ii in 0..rows_here {
                        let aik = self.data[(i0 + ii) * k + kk];
                        axpy(&mut cdata[ii * n..(ii + 1) * n], aik, brow);
                    }
                }
            });
        Ok(out)
    }

    /// `self * other^T` (`other` stored row-major, so this is a row-by-row
    /// dot product; the natural kernel for `x W^T` layer evaluation).
    pub fn matmul_transb(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(self.shape_err("matmul_transb", other));
        }
        let n = other.rows;
        let mut out = Matrix::zeros(self.rows, n);
        let chunk = rows_per_chunk(self.rows, n);
        out.data
            .par_chunks_mut(chunk * n)
            .enumerate()
            .for_each(|(ci, cdata)| {
                for (ii, crow) in cdata.chunks_exact_mut(n).enumerate() {
                    let arow = self.row(ci * chunk + ii);
                    for (j, c) in crow.iter_mut().enumerate() {
                        *c = dot(arow, other.row(j));
                    }
                }
            });
        Ok(out)
    }

    /// `self^T * other`; accumulates over the shared (row) dimension in
    /// ascending order. Used for weight gradients `dP^T Z`.
    pub fn matmul_transa(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(self.shape_err("matmul_transa", other));
        }
        let (m, n) = (self.cols, other.cols);
        let mut out = Matrix::zeros(m, n);
        // Chunks of output rows share one sweep over `other`, keeping its
        // rows hot in cache.
        let chunk = 8usize.min(m.max(1));
        out.data
            .par_chunks_mut(chunk * n)
            .enumerate()
            .for_each(|(ci, cdata)| {
                let i0 = ci * chunk;
                let rows_here = cdata.len() / n;
                for r in 0..self.rows {
                    let arow = self.row(r);
                    let brow = other.row(r);
                    for ii in 0..rows_here {
                        let aik = arow[i0 + ii];
                        axpy(&mut cdata[ii * n..(ii + 1) * n], aik, brow);
                    }
                }
            });
        Ok(out)
    }

    /// Sum of each column.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        out
    }

    /// Add `v` to every row.
    pub fn add_row_broadcast(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.cols {
            return Err(Error::invalid(format!(
                "add_row_broadcast: row has {} entries, vector has {}",
                self.cols,
                v.len()
            )));
        }
        let cols = self.cols;
        let chunk = rows_per_chunk(self.rows, cols);
        self.data
            .par_chunks_mut(chunk * cols)
            .for_each(|cdata| {
                for row in cdata.chunks_exact_mut(cols) {
                    for (x, &b) in row.iter_mut().zip(v) {
                        *x += b;
                    }
                }
            });
        Ok(())
    }

    /// Apply `f` to every entry in place (parallel over rows, per-entry
    /// independent, so deterministic).
    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64 + Sync) {
        let cols = self.cols.max(1);
        let chunk = rows_per_chunk(self.rows, cols);
        self.data
            .par_chunks_mut(chunk * cols)
            .for_each(|cdata| {
                for x in cdata {
                    *x = f(*x);
                }
            });
    }

    /// Two new matrices `(f(x).0, f(x).1)` from one pass over the entries.
    pub fn map_pair(&self, f: impl Fn(f64) -> (f64, f64) + Sync) -> (Matrix, Matrix) {
        let cols = self.cols.max(1);
        let chunk = rows_per_chunk(self.rows, cols);
        let mut first = Matrix::zeros(self.rows, self.cols);
        let mut second = Matrix::zeros(self.rows, self.cols);
        first
            .data
            .par_chunks_mut(chunk * cols)
            .zip(second.data.par_chunks_mut(chunk * cols))
            .zip(self.data.par_chunks(chunk * cols))
            .for_each(|((a, b), src)| {
                for ((x, y), &s) in a.iter_mut().zip(b.iter_mut()).zip(src) {
                    let (v, d) = f(s);
                    *x = v;
                    *y = d;
                }
            });
        (first, second)
    }

    /// `self[i] = f(self[i], other[i])` elementwise.
    pub fn zip_map_inplace(
        &mut self,
        other: &Matrix,
        f: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(self.shape_err("zip_map", other));
        }
        let cols = self.cols.max(1);
        let chunk = rows_per_chunk(self.rows, cols);
        self.data
            .par_chunks_mut(chunk * cols)
            .zip(other.data.par_chunks(chunk * cols))
            .for_each(|(a, b)| {
                for (x, &y) in a.iter_mut().zip(b) {
                    *x = f(*x, y);
                }
            });
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.map_inplace(|x| x * s);
    }

    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        self.zip_map_inplace(other, |a, b| a + b)
    }
}

/// `y += a * x`, elementwise over equal-length slices.
#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = a.mul_add(xi, *yi);
    }
}

/// Dot product with four independent accumulators (fixed order per build).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let n4 = a.len() / 4 * 4;
    let (a4, ar) = a.split_at(n4);
    let (b4, br) = b.split_at(n4);
    for (ca, cb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] = ca[0].mul_add(cb[0], acc[0]);
        acc[1] = ca[1].mul_add(cb[1], acc[1]);
        acc[2] = ca[2].mul_add(cb[2], acc[2]);
        acc[3] = ca[3].mul_add(cb[3], acc[3]);
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (&x, &y) in ar.iter().zip(br) {
        s = x.mul_add(y, s);
    }
    s
}
