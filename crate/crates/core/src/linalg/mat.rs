//! Row-major dense matrix.
//!
//! Storage is a single `Vec<f64>` with `data[i * cols + j] = M[i, j]`.
//! Every public constructor rejects empty shapes and non-finite entries.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.row(i)[..self.cols.min(8)])?;
        }
        write!(f, "]")
    }
}

impl Mat {
    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                k / cols,
                k % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices.
    ///
    /// Panics on ragged or empty input; intended for literals in tests and
    /// examples.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty(), "empty matrix");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data).expect("invalid matrix literal")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty shape {rows}x{cols}");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix entrywise from a closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
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
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Mat) -> Result<Mat> {
        if self.cols != rhs.rows {
            return Err(Error::dims(
                "matmul",
                format!("rhs with {} rows", self.cols),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * rhs` without forming the transpose.
    pub fn t_matmul(&self, rhs: &Mat) -> Result<Mat> {
        if self.rows != rhs.rows {
            return Err(Error::dims(
                "t_matmul",
                format!("rhs with {} rows", self.rows),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        let mut out = Mat::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let rk = rhs.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rk) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * rhsᵀ` without forming the transpose.
    pub fn matmul_t(&self, rhs: &Mat) -> Result<Mat> {
        if self.cols != rhs.cols {
            return Err(Error::dims(
                "matmul_t",
                format!("rhs with {} cols", self.cols),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        Ok(Mat::from_fn(self.rows, rhs.rows, |i, j| {
            dot(self.row(i), rhs.row(j))
        }))
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dims("matvec", self.cols, x.len()));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// Elementwise `self - rhs`.
    pub fn sub(&self, rhs: &Mat) -> Result<Mat> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    /// Elementwise `self + rhs`.
    pub fn add(&self, rhs: &Mat) -> Result<Mat> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn scaled(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, rhs: &Mat, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Mat> {
        if self.shape() != rhs.shape() {
            return Err(Error::dims(
                op,
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Copies the block `rows r0..r1, cols c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Mat {
        Mat::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Count of entries that are not exactly zero.
    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frob_norm(&self) -> f64 {
        frob_norm_sq(self).sqrt()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of squared entries.
pub fn frob_norm_sq(m: &Mat) -> f64 {
    m.data.iter().map(|v| v * v).sum()
}

/// Squared Euclidean norm of every row.
pub fn row_norms_sq(m: &Mat) -> Vec<f64> {
    (0..m.rows).map(|i| dot(m.row(i), m.row(i))).collect()
}

/// Squared Euclidean norm of every column, i.e. the row norms of `mᵀ`.
pub fn col_norms_sq(m: &Mat) -> Vec<f64> {
    let mut out = vec![0.0; m.cols];
    for i in 0..m.rows {
        for (o, v) in out.iter_mut().zip(m.row(i)) {
            *o += v * v;
        }
    }
    out
}

/// In-place `M += scale · u wᵀ`.
pub fn rank_one_update(m: &mut Mat, scale: f64, u: &[f64], w: &[f64]) -> Result<()> {
    if u.len() != m.rows || w.len() != m.cols {
        return Err(Error::dims(
            "rank_one_update",
            format!("u len {}, w len {}", m.rows, m.cols),
            format!("u len {}, w len {}", u.len(), w.len()),
        ));
    }
    if scale == 0.0 {
        return Ok(());
    }
    let cols = m.cols;
    for (i, &ui) in u.iter().enumerate() {
        let s = scale * ui;
        for (x, &wj) in m.data[i * cols..(i + 1) * cols].iter_mut().zip(w) {
            *x += s * wj;
        }
    }
    Ok(())
}

/// `C − A X B` computed from scratch.
pub fn residual(a: &Mat, x: &Mat, b: &Mat, c: &Mat) -> Result<Mat> {
    c.sub(&a.matmul(x)?.matmul(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frob_norm_examples() {
        assert_eq!(frob_norm_sq(&Mat::identity(2)), 2.0);
        assert_eq!(frob_norm_sq(&Mat::zeros(3, 2)), 0.0);
        assert_eq!(frob_norm_sq(&Mat::from_rows(&[&[1., 2.], &[3., 4.]])), 30.0);
    }

    #[test]
    fn row_norm_examples() {
        assert_eq!(row_norms_sq(&Mat::identity(3)), vec![1.0, 1.0, 1.0]);
        let m = Mat::from_rows(&[&[1., 2.], &[3., 4.]]);
        assert_eq!(row_norms_sq(&m), vec![5.0, 25.0]);
        assert_eq!(col_norms_sq(&m), vec![10.0, 20.0]);
        let z = Mat::from_rows(&[&[0., 0.], &[1., 0.]]);
        assert_eq!(row_norms_sq(&z)[0], 0.0);
    }

    #[test]
    fn rank_one_examples() {
        let mut m = Mat::from_rows(&[&[1., 2.], &[3., 4.]]);
        let before = m.clone();
        rank_one_update(&mut m, 0.0, &[5., 6.], &[7., 8.]).unwrap();
        assert_eq!(m, before);

        let mut z = Mat::zeros(2, 2);
        rank_one_update(&mut z, 1.0, &[1., 2.], &[3., 4.]).unwrap();
        assert_eq!(z, Mat::from_rows(&[&[3., 4.], &[6., 8.]]));

        rank_one_update(&mut m, 3.0, &[1., -2.], &[5., 7.]).unwrap();
        rank_one_update(&mut m, -3.0, &[1., -2.], &[5., 7.]).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn rank_one_dimension_mismatch() {
        let mut m = Mat::zeros(2, 3);
        assert!(matches!(
            rank_one_update(&mut m, 1.0, &[1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn construction_rejects_bad_data() {
        assert!(Mat::from_vec(0, 2, vec![]).is_err());
        assert!(Mat::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Mat::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Mat::from_vec(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn products_agree() {
        let a = Mat::from_rows(&[&[1., 2., 0.], &[-1., 3., 4.]]);
        let b = Mat::from_rows(&[&[2., 1.], &[0., -1.], &[5., 2.]]);
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab, Mat::from_rows(&[&[2., -1.], &[18., 4.]]));
        assert_eq!(a.transpose().t_matmul(&b).unwrap(), ab);
        assert_eq!(a.matmul_t(&b.transpose()).unwrap(), ab);
        assert!(a.matmul(&a).is_err());
    }
}
