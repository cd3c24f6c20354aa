//! Greedy index-pair selection.
//!
//! The loss of pair `(i, j)` is `W_ij = R_ij² / (‖a_i‖² ‖b_j‖²)`, where `a_iᵀ`
//! is row `i` of `A` and `b_j` is column `j` of `B`. A pair is admissible when
//! its loss reaches `δ_k ‖R‖_F²`, with
//!
//! ```text
//! δ_k = θ · max W / ‖R‖_F² + (1 − θ) / (‖A‖_F² ‖B‖_F²)
//! ```
//!
//! and one admissible pair is then drawn at random.

use rand::Rng;

use super::Sampling;
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Relative slack on the admissibility comparison, so that the maximal entry
/// always qualifies despite rounding in the threshold.
pub const THRESHOLD_SLACK: f64 = 1e-12;

#[inline]
pub(crate) fn loss_value(r_sq: f64, inv_a: f64, inv_b: f64) -> f64 {
    r_sq * inv_a * inv_b
}

fn reciprocals(norms: &[f64], what: &str) -> Result<Vec<f64>> {
    norms
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            if v > 0.0 {
                Ok(1.0 / v)
            } else {
                Err(Error::InstanceInvariant(format!(
                    "{what} squared norm at index {k} is {v}, must be positive"
                )))
            }
        })
        .collect()
}

/// Loss matrix `W` for residual `R` (m×p).
pub fn loss_matrix(r: &Mat, a_norms: &[f64], b_norms: &[f64]) -> Result<Mat> {
    if a_norms.len() != r.rows() || b_norms.len() != r.cols() {
        return Err(Error::dims(
            "loss_matrix",
            format!("{} row norms and {} column norms", r.rows(), r.cols()),
            format!("{} and {}", a_norms.len(), b_norms.len()),
        ));
    }
    let ia = reciprocals(a_norms, "row of A")?;
    let ib = reciprocals(b_norms, "column of B")?;
    Ok(Mat::from_fn(r.rows(), r.cols(), |i, j| {
        let v = r[(i, j)];
        loss_value(v * v, ia[i], ib[j])
    }))
}

/// Position and value of the largest loss; ties go to the first entry in
/// row-major order.
pub fn max_loss(w: &Mat) -> ((usize, usize), f64) {
    let mut best = 0usize;
    let mut max = f64::NEG_INFINITY;
    for (k, &v) in w.as_slice().iter().enumerate() {
        if v > max {
            max = v;
            best = k;
        }
    }
    ((best / w.cols(), best % w.cols()), max)
}

/// `δ_k` for the given loss matrix and squared residual norm.
pub fn greedy_threshold(
    w: &Mat,
    r_frob_sq: f64,
    theta: f64,
    a_frob_sq: f64,
    b_frob_sq: f64,
) -> Result<f64> {
    if r_frob_sq <= 0.0 {
        return Err(Error::InvalidArgument(
            "greedy_threshold called with zero residual; the iteration has already converged"
                .into(),
        ));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    let (_, max) = max_loss(w);
    Ok(theta / r_frob_sq * max + (1.0 - theta) / (a_frob_sq * b_frob_sq))
}

/// `Δ_k = {(i, j) : W_ij ≥ δ_k ‖R‖_F²}` in row-major order.
pub fn build_index_set(w: &Mat, delta_k: f64, r_frob_sq: f64) -> Result<Vec<(usize, usize)>> {
    let cut = delta_k * r_frob_sq * (1.0 - THRESHOLD_SLACK);
    let set: Vec<(usize, usize)> = w
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= cut)
        .map(|(k, _)| (k / w.cols(), k % w.cols()))
        .collect();
    if set.is_empty() {
        return Err(Error::InvariantBreach(format!(
            "greedy index set is empty (threshold {cut:.6e}, max loss {:.6e})",
            max_loss(w).1
        )));
    }
    Ok(set)
}

/// Draws one position from `weights` with a single uniform variate.
///
/// `Proportional` picks position `k` with probability `weights[k] / Σ
/// weights`; `Uniform` ignores the weights. A zero total mass falls back to
/// uniform.
pub(crate) fn sample_weighted<R: Rng + ?Sized>(
    weights: &[f64],
    sampling: Sampling,
    rng: &mut R,
) -> usize {
    debug_assert!(!weights.is_empty());
    let u: f64 = rng.random();
    let len = weights.len();
    let uniform = || ((u * len as f64) as usize).min(len - 1);
    match sampling {
        Sampling::Uniform => uniform(),
        Sampling::Proportional => {
            let total: f64 = weights.iter().sum();
            if !(total > 0.0) {
                return uniform();
            }
            let target = u * total;
            let mut acc = 0.0;
            for (k, &wt) in weights.iter().enumerate() {
                acc += wt;
                if acc > target {
                    return k;
                }
            }
            // Rounding can leave `acc` a hair below `target` when u ≈ 1.
            weights.iter().rposition(|&wt| wt > 0.0).unwrap_or(len - 1)
        }
    }
}

/// Draws one pair from a nonempty index set. Proportional sampling weights
/// each pair by `R_ij²`. Consumes exactly one variate from `rng`.
pub fn sample_index<R: Rng + ?Sized>(
    set: &[(usize, usize)],
    r: &Mat,
    sampling: Sampling,
    rng: &mut R,
) -> Result<(usize, usize)> {
    if set.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot sample from an empty index set".into(),
        ));
    }
    let weights: Vec<f64> = set
        .iter()
        .map(|&(i, j)| {
            let v = r[(i, j)];
            v * v
        })
        .collect();
    Ok(set[sample_weighted(&weights, sampling, rng)])
}
