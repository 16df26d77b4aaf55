//! Small dense and sparse complex matrices.
//!
//! Only what the solvers need: dense products and commutators on the
//! single-excitation space, a scaling-and-squaring exponential for the
//! Markov reference, and a row-compressed matrix-vector product for the
//! pseudomode generator.

use std::ops::{Index, IndexMut};

use crate::scalar::{cre, czero, Real, C};

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![czero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = cre(T::one());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.dim);
        matmul_into(self.dim, &self.data, &other.data, &mut out.data);
        out
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![czero(); self.dim];
        matvec_into(self.dim, &self.data, v, &mut out);
        out
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.dim)
            .map(|j| (0..self.dim).fold(T::zero(), |acc, i| acc + self[(i, j)].norm()))
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// Matrix exponential by scaling and squaring of a truncated Taylor series.
    pub fn expm(&self) -> Self {
        let half = T::lit(0.5);
        let norm = self.norm_one();
        let mut squarings = 0u32;
        let mut scaled_norm = norm;
        while scaled_norm > half {
            scaled_norm = scaled_norm * half;
            squarings += 1;
        }
        let scale = T::lit(0.5f64.powi(squarings as i32));
        let a = self.scale(cre(scale));

        let mut result = Self::identity(self.dim);
        let mut term = Self::identity(self.dim);
        for k in 1..=30usize {
            term = term
                .matmul(&a)
                .scale(cre(T::one() / T::from_usize_lossy(k)));
            result = result.add(&term);
            let size = term.norm_one();
            if size <= T::epsilon() * result.norm_one() {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.dim + j]
    }
}

/// `out = a * b` for row-major `dim x dim` blocks.
pub(crate) fn matmul_into<T: Real>(dim: usize, a: &[C<T>], b: &[C<T>], out: &mut [C<T>]) {
    for i in 0..dim {
        let out_row = &mut out[i * dim..(i + 1) * dim];
        out_row.iter_mut().for_each(|z| *z = czero());
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == czero() {
                continue;
            }
            let b_row = &b[k * dim..(k + 1) * dim];
            for (o, bkj) in out_row.iter_mut().zip(b_row) {
                *o = *o + aik * bkj;
            }
        }
    }
}

pub(crate) fn matvec_into<T: Real>(dim: usize, a: &[C<T>], v: &[C<T>], out: &mut [C<T>]) {
    for (i, o) in out.iter_mut().enumerate().take(dim) {
        let row = &a[i * dim..(i + 1) * dim];
        *o = row.iter().zip(v).fold(czero(), |acc, (x, y)| acc + x * y);
    }
}

/// Row-compressed sparse complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C<T>>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from per-row `(column, value)` lists. Duplicate columns within a row are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, C<T>)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                assert!(c < dim, "column {c} out of range for dimension {dim}");
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v = v + v2;
                    iter.next();
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C<T>)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map_or(czero(), |(_, v)| v)
    }

    pub fn mul_vec_into(&self, v: &[C<T>], out: &mut [C<T>]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = czero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc = acc + self.values[k] * v[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![czero(); self.dim];
        self.mul_vec_into(v, &mut out);
        out
    }

    pub fn to_dense(&self) -> CMatrix<T> {
        let mut m = CMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn map_values(&self, f: impl Fn(usize, usize, C<T>) -> C<T>) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                values.push(f(i, self.col_idx[k], self.values[k]));
            }
        }
        Self {
            values,
            ..self.clone()
        }
    }
}
