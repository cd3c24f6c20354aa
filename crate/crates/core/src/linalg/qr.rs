//! Thin Householder QR with a nonnegative `R` diagonal.

use super::mat::{dot, Mat};
use crate::error::{Error, Result};

/// Returns `(Q, R)` with `Q` of shape `rows × cols` having orthonormal
/// columns and `R` upper triangular `cols × cols`, `diag(R) ≥ 0`.
pub fn householder_qr(m: &Mat) -> Result<(Mat, Mat)> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(Error::InvalidArgument(format!(
            "householder_qr needs rows >= cols, got {rows}x{cols}"
        )));
    }
    // Column-major working copy; reflectors are stored alongside.
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.col(j)).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(cols);

    for k in 0..cols {
        let x = &a[k][k..];
        let norm = dot(x, x).sqrt();
        let mut v = x.to_vec();
        if norm > 0.0 {
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
        }
        let vnorm_sq = dot(&v, &v);
        if vnorm_sq > 0.0 {
            for col in a.iter_mut().skip(k) {
                let tail = &mut col[k..];
                let s = 2.0 * dot(&v, tail) / vnorm_sq;
                for (t, vi) in tail.iter_mut().zip(&v) {
                    *t -= s * vi;
                }
            }
        }
        reflectors.push(v);
    }

    let mut r = Mat::from_fn(cols, cols, |i, j| if i <= j { a[j][i] } else { 0.0 });

    // Q = H_0 H_1 ... H_{cols-1} applied to the first `cols` unit vectors.
    let mut q_cols: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; rows];
            e[j] = 1.0;
            e
        })
        .collect();
    for col in q_cols.iter_mut() {
        for k in (0..cols).rev() {
            let v = &reflectors[k];
            let vnorm_sq = dot(v, v);
            if vnorm_sq == 0.0 {
                continue;
            }
            let tail = &mut col[k..];
            let s = 2.0 * dot(v, tail) / vnorm_sq;
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }

    // Sign fix: make diag(R) nonnegative.
    for i in 0..cols {
        if r[(i, i)] < 0.0 {
            for j in i..cols {
                r[(i, j)] = -r[(i, j)];
            }
            q_cols[i].iter_mut().for_each(|x| *x = -*x);
        }
    }

    let q = Mat::from_fn(rows, cols, |i, j| q_cols[j][i]);
    Ok((q, r))
}
