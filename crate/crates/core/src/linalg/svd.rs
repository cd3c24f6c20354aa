//! Thin SVD by one-sided (Hestenes) Jacobi rotations.
//!
//! Columns of the working matrix are orthogonalized pairwise until every
//! pair is numerically orthogonal; singular values are the resulting column
//! norms. At desk scale this is accurate to a few ulps relative to `σ₁`.

use super::mat::{dot, Mat};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
const ORTH_TOL: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Nonincreasing, length `min(rows, cols)`.
    pub singular_values: Vec<f64>,
    /// `rows × k` with orthonormal columns.
    pub u: Mat,
    /// `cols × k` with orthonormal columns.
    pub v: Mat,
    pub numerical_rank: usize,
    pub rank_tol: f64,
}

impl SvdResult {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    /// Smallest singular value counted in the numerical rank, or 0 for a
    /// numerically zero matrix.
    pub fn sigma_min_nonzero(&self) -> f64 {
        if self.numerical_rank == 0 {
            0.0
        } else {
            self.singular_values[self.numerical_rank - 1]
        }
    }

    pub fn reconstruct(&self) -> Mat {
        let k = self.singular_values.len();
        let us = Mat::from_fn(self.u.rows(), k, |i, j| {
            self.u[(i, j)] * self.singular_values[j]
        });
        us.matmul_t(&self.v).expect("conformal by construction")
    }

    /// Moore–Penrose pseudoinverse from the decomposition, inverting only the
    /// singular values inside the numerical rank.
    pub fn pinv(&self) -> Mat {
        let r = self.numerical_rank;
        let (rows, cols) = (self.u.rows(), self.v.rows());
        let mut out = Mat::zeros(cols, rows);
        for l in 0..r {
            let inv = 1.0 / self.singular_values[l];
            for i in 0..cols {
                let vi = self.v[(i, l)] * inv;
                if vi == 0.0 {
                    continue;
                }
                let row = out.row_mut(i);
                for (j, o) in row.iter_mut().enumerate() {
                    *o += vi * self.u[(j, l)];
                }
            }
        }
        out
    }
}

/// Thin singular value decomposition.
pub fn svd(m: &Mat) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    if rows >= cols {
        let (sigma, u, v) = jacobi(m)?;
        Ok(finish(rows, cols, sigma, u, v))
    } else {
        let (sigma, u, v) = jacobi(&m.transpose())?;
        Ok(finish(rows, cols, sigma, v, u))
    }
}

fn finish(rows: usize, cols: usize, sigma: Vec<f64>, u: Mat, v: Mat) -> SvdResult {
    let rank_tol = rows.max(cols) as f64 * f64::EPSILON;
    let cutoff = rank_tol * sigma[0];
    let numerical_rank = sigma.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    SvdResult {
        singular_values: sigma,
        u,
        v,
        numerical_rank,
        rank_tol,
    }
}

/// One-sided Jacobi on a tall (`rows ≥ cols`) matrix.
fn jacobi(m: &Mat) -> Result<(Vec<f64>, Mat, Mat)> {
    let (rows, cols) = m.shape();
    // Column-major working copies so that the rotated columns are contiguous.
    let mut w: Vec<Vec<f64>> = (0..cols).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();

    let total: f64 = w.iter().map(|c| dot(c, c)).sum();
    let negligible = 1e-34 * total;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= ORTH_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<(f64, usize)> = w.iter().map(|c| dot(c, c).sqrt()).zip(0..).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let sigma: Vec<f64> = order.iter().map(|&(s, _)| s).collect();
    let zero_cut = negligible.sqrt();
    let mut u_cols: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&(s, j)| (s > zero_cut).then(|| w[j].iter().map(|x| x / s).collect()))
        .collect();
    complete_orthonormal(&mut u_cols, rows);
    let sigma: Vec<f64> = sigma
        .into_iter()
        .map(|s| if s > zero_cut { s } else { 0.0 })
        .collect();

    let u = Mat::from_fn(rows, cols, |i, l| u_cols[l].as_ref().unwrap()[i]);
    let vm = Mat::from_fn(cols, cols, |i, l| v[order[l].1][i]);
    Ok((sigma, u, vm))
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let a = *xp;
        let b = *xq;
        *xp = c * a - s * b;
        *xq = s * a + c * b;
    }
}

/// Fills missing columns (numerically zero singular values) with unit
/// vectors orthogonal to everything else, by Gram–Schmidt over the
/// canonical basis.
fn complete_orthonormal(cols: &mut [Option<Vec<f64>>], dim: usize) {
    let mut candidate = 0;
    for l in 0..cols.len() {
        if cols[l].is_some() {
            continue;
        }
        while candidate < dim {
            let mut e = vec![0.0; dim];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for other in cols.iter().flatten() {
                    let proj = dot(&e, other);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= proj * o;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 1e-8 {
                e.iter_mut().for_each(|x| *x /= norm);
                cols[l] = Some(e);
                break;
            }
        }
    }
}

/// Moore–Penrose pseudoinverse via [`svd`].
pub fn pinv(m: &Mat) -> Result<Mat> {
    Ok(svd(m)?.pinv())
}

/// Minimum-Frobenius-norm least-squares solution `A† C B†` of `A X B = C`.
pub fn pinv_solution(a: &Mat, b: &Mat, c: &Mat) -> Result<Mat> {
    let (m, n) = a.shape();
    if b.rows() != n || c.shape() != (m, b.cols()) {
        return Err(Error::dims(
            "pinv_solution",
            format!("A {m}x{n}, B {n}xp, C {m}xp"),
            format!(
                "A {m}x{n}, B {}x{}, C {}x{}",
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols()
            ),
        ));
    }
    let a_pinv = pinv(a)?;
    let b_pinv = pinv(b)?;
    a_pinv.matmul(c)?.matmul(&b_pinv)
}
