//! Dense column-major storage and the handful of kernels the solvers need.
//!
//! Every reduction sums in ascending index order so that repeated runs
//! produce bit-identical results. Mat-vec products are computed as a sequence
//! of column axpys, which makes the masked variant touch only the columns it
//! is given while keeping the same per-entry summation order as the full
//! product.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix stored column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "matrix",
                index,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != ncols) {
            return Err(Error::dim(format!(
                "ragged rows: expected {ncols} columns, found {}",
                bad.as_ref().len()
            )));
        }
        let mut data = vec![0.0; nrows * ncols];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.as_ref().iter().enumerate() {
                data[j * nrows + i] = v;
            }
        }
        Self::from_col_major(nrows, ncols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self::from_col_major(rows, cols, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_col_major(rows, cols, vec![0.0; rows * cols])
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_major(&self) -> &[f64] {
        &self.data
    }

    pub fn into_col_major(self) -> Vec<f64> {
        self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                data.push(self.get(i, j));
            }
        }
        DenseMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// True when every transposed pair of entries is bitwise equal.
    pub fn is_exactly_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.cols).all(|j| (0..j).all(|i| self.get(i, j).to_bits() == self.get(j, i).to_bits()))
    }

    /// Largest `|M_ij - M_ji|`; infinite for non-square matrices.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for j in 0..self.cols {
            for i in 0..j {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Returns a copy with column `j` multiplied by `factors[j]`.
    pub fn scale_columns(&self, factors: &[f64]) -> Result<DenseMatrix> {
        if factors.len() != self.cols {
            return Err(Error::dim(format!(
                "{} column factors for {} columns",
                factors.len(),
                self.cols
            )));
        }
        let mut data = self.data.clone();
        for (j, &c) in factors.iter().enumerate() {
            data[j * self.rows..(j + 1) * self.rows]
                .iter_mut()
                .for_each(|v| *v *= c);
        }
        DenseMatrix::from_col_major(self.rows, self.cols, data)
    }
}

/// Dense real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "vector",
                index,
            });
        }
        Ok(Vector(data))
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Elementwise `x >= 0`.
    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&v| v >= 0.0)
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

/// Sorted, duplicate-free set of indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Mask(Vec<usize>);

impl Mask {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Mask(indices)
    }

    pub fn full(n: usize) -> Self {
        Mask((0..n).collect())
    }

    pub fn empty() -> Self {
        Mask(Vec::new())
    }


    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub(crate) fn clear(&mut self) {
        self.0.clear();
    }

    pub(crate) fn push_sorted(&mut self, i: usize) {
        debug_assert!(self.0.last().is_none_or(|&l| l < i));
        self.0.push(i);
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `out += alpha * col`
#[inline]
fn axpy(alpha: f64, col: &[f64], out: &mut [f64]) {
    for (o, c) in out.iter_mut().zip(col) {
        *o += alpha * c;
    }
}

/// `out = M[:, mask] * v[mask]`, returning the number of scalar multiplies.
///
/// Columns are visited in the mask's (ascending) order, so with a full mask
/// the result is bitwise equal to [`matvec`].
pub(crate) fn masked_matvec_into(m: &DenseMatrix, v: &[f64], mask: &[usize], out: &mut [f64]) -> u64 {
    out.fill(0.0);
    masked_matvec_acc(m, v, mask, out)
}

/// `out += M[:, mask] * v[mask]`, returning the number of scalar multiplies.
pub(crate) fn masked_matvec_acc(m: &DenseMatrix, v: &[f64], mask: &[usize], out: &mut [f64]) -> u64 {
    for &j in mask {
        axpy(v[j], m.col(j), out);
    }
    (mask.len() * m.rows) as u64
}

/// `H = AᵀA`, with the lower triangle copied from the upper so the result is
/// exactly symmetric.
pub fn gram(a: &DenseMatrix) -> DenseMatrix {
    let n = a.cols;
    let mut data = vec![0.0; n * n];
    for j in 0..n {
        let cj = a.col(j);
        for i in 0..=j {
            data[j * n + i] = dot(a.col(i), cj);
        }
    }
    for j in 0..n {
        for i in (j + 1)..n {
            data[j * n + i] = data[i * n + j];
        }
    }
    DenseMatrix {
        rows: n,
        cols: n,
        data,
    }
}

/// `Aᵀv`.
pub fn tr_matvec(a: &DenseMatrix, v: &[f64]) -> Result<Vector> {
    if v.len() != a.rows {
        return Err(Error::dim(format!(
            "Aᵀv with A {}x{} and v of length {}",
            a.rows,
            a.cols,
            v.len()
        )));
    }
    Ok(Vector((0..a.cols).map(|j| dot(a.col(j), v)).collect()))
}

pub fn matvec(m: &DenseMatrix, v: &[f64]) -> Result<Vector> {
    if v.len() != m.cols {
        return Err(Error::dim(format!(
            "{}x{} matrix times vector of length {}",
            m.rows,
            m.cols,
            v.len()
        )));
    }
    let mut out = vec![0.0; m.rows];
    for (j, &vj) in v.iter().enumerate() {
        axpy(vj, m.col(j), &mut out);
    }
    Ok(Vector(out))
}

/// Product `M v` for a `v` that is zero outside `mask`, touching only the
/// masked columns.
pub fn masked_matvec(m: &DenseMatrix, v: &[f64], mask: &Mask) -> Result<Vector> {
    if v.len() != m.cols {
        return Err(Error::dim(format!(
            "{}x{} matrix times vector of length {}",
            m.rows,
            m.cols,
            v.len()
        )));
    }
    if let Some(&index) = mask.indices().iter().find(|&&j| j >= m.cols) {
        return Err(Error::IndexOutOfRange { index, len: m.cols });
    }
    let mut out = vec![0.0; m.rows];
    masked_matvec_into(m, v, mask.indices(), &mut out);
    Ok(Vector(out))
}

/// Entrywise 2-norm `sqrt(sum M_ij^2)`.
pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    norm2(&m.data)
}

/// `||A x - b||²`, summed in ascending row order.
pub fn residual_sq(a: &DenseMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    if b.len() != a.rows {
        return Err(Error::dim(format!("A has {} rows, b has length {}", a.rows, b.len())));
    }
    let ax = matvec(a, x)?;
    Ok(ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum())
}
