//! Computable convergence constants.
//!
//! * [`spectral_bounds`]: `ρ̃ = σ_r²(A) σ_r²(B) / (‖A‖_F² ‖B‖_F²)`.
//! * [`greedy_constants`]: `ζ_k` and `γ_k`, which bound the greedy threshold
//!   from below: `δ_k ‖A‖_F² ‖B‖_F² ≥ γ_k ≥ 1`.
//! * [`rate_factors`]: the two-step contraction constants of the momentum
//!   methods, the admissible momentum range and the geometric factors
//!   `q₁`, `q₂` of the recurrence `F_{k+1} ≤ t₁ F_k + t₂ F_{k−1}`.
//! * [`error_bound_curve`]: `q₁ᵏ (1 + q₂) ‖X⁽⁰⁾ − X*‖_F²`.
//! * [`descent_check`]: the one-step expected loss against `ρ̃_k ‖X − X*‖²`,
//!   evaluated exactly over the admissible set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frob_norm_sq, residual, svd, Mat};
use crate::problems::ProblemInstance;
use crate::solver::{build_index_set, greedy_threshold, loss_matrix, Method, Sampling};

/// Losses at or below this fraction of the largest loss count as zero.
pub const ZERO_LOSS_RATIO: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub sigma_r_a: f64,
    pub sigma_r_b: f64,
    pub sigma_1_a: f64,
    pub sigma_1_b: f64,
    pub a_frob_sq: f64,
    pub b_frob_sq: f64,
    pub rho_tilde: f64,
}

pub fn spectral_bounds(a: &Mat, b: &Mat) -> Result<SpectralBounds> {
    let sa = svd(a)?;
    let sb = svd(b)?;
    if sa.numerical_rank == 0 || sb.numerical_rank == 0 {
        return Err(Error::InvalidArgument(
            "spectral bounds need nonzero A and B".into(),
        ));
    }
    let a_frob_sq = frob_norm_sq(a);
    let b_frob_sq = frob_norm_sq(b);
    let (sigma_r_a, sigma_r_b) = (sa.sigma_min_nonzero(), sb.sigma_min_nonzero());
    Ok(SpectralBounds {
        sigma_r_a,
        sigma_r_b,
        sigma_1_a: sa.sigma_max(),
        sigma_1_b: sb.sigma_max(),
        a_frob_sq,
        b_frob_sq,
        rho_tilde: (sigma_r_a * sigma_r_a * sigma_r_b * sigma_r_b) / (a_frob_sq * b_frob_sq),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyConstants {
    pub zeta_k: f64,
    pub gamma_k: f64,
    pub rho_tilde_k: f64,
}

/// `ζ_k = ‖A‖²‖B‖² − Σ_{W_ij = 0} ‖a_i‖²‖b_j‖²`, `γ_k = θ ‖A‖²‖B‖² / ζ_k + 1 − θ`
/// and `ρ̃_k = γ_k ρ̃`.
pub fn greedy_constants(
    w: &Mat,
    a_norms: &[f64],
    b_norms: &[f64],
    theta: f64,
    a_frob_sq: f64,
    b_frob_sq: f64,
    rho_tilde: f64,
) -> Result<GreedyConstants> {
    if a_norms.len() != w.rows() || b_norms.len() != w.cols() {
        return Err(Error::dims(
            "greedy_constants",
            format!("{}x{}", w.rows(), w.cols()),
            format!("{}x{}", a_norms.len(), b_norms.len()),
        ));
    }
    let max = w.max_abs();
    if !(max > 0.0) {
        return Err(Error::InvalidArgument(
            "all losses vanish; the iteration has converged".into(),
        ));
    }
    let cut = ZERO_LOSS_RATIO * max;
    let total = a_frob_sq * b_frob_sq;
    let mut omega = 0.0;
    for (i, row) in w.as_slice().chunks_exact(w.cols()).enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v <= cut {
                omega += a_norms[i] * b_norms[j];
            }
        }
    }
    let zeta_k = total - omega;
    if !(zeta_k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "zeta_k = {zeta_k} is not positive"
        )));
    }
    let gamma_k = theta * total / zeta_k + (1.0 - theta);
    if gamma_k < 1.0 - 1e-12 {
        return Err(Error::InvariantBreach(format!(
            "gamma_k = {gamma_k} below 1"
        )));
    }
    Ok(GreedyConstants {
        zeta_k,
        gamma_k,
        rho_tilde_k: gamma_k * rho_tilde,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Momentum {
    Polyak,
    Nesterov,
}

impl Momentum {
    pub fn of(method: Method) -> Option<Momentum> {
        match method {
            Method::MeRgrk => None,
            Method::PmRgrk => Some(Momentum::Polyak),
            Method::NmRgrk => Some(Momentum::Nesterov),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFactors {
    pub momentum: Momentum,
    pub alpha: f64,
    pub beta: f64,
    pub rho_tilde: f64,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub tau3: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma3: Option<f64>,
    pub gamma4: Option<f64>,
    /// Coefficients of the recurrence `F_{k+1} ≤ t₁ F_k + t₂ F_{k−1}`.
    pub t1: f64,
    pub t2: f64,
    pub q1: f64,
    pub q2: f64,
    /// Supremum of the admissible momentum range; zero when it is empty.
    pub beta_max: f64,
    pub params_admissible: bool,
}

/// `q₁ = (t₁ + √(t₁² + 4 t₂)) / 2` and `q₂ = q₁ − t₁`.
pub fn recurrence_factors(t1: f64, t2: f64) -> (f64, f64) {
    let q1 = (t1 + (t1 * t1 + 4.0 * t2).sqrt()) / 2.0;
    (q1, q1 - t1)
}

/// Upper bound `q₁ᵏ (1 + q₂) F₀` on the `(k+1)`-th term of a nonnegative
/// sequence with `F₁ = F₀` and `F_{k+1} ≤ t₁ F_k + t₂ F_{k−1}`.
pub fn recurrence_bound(q1: f64, q2: f64, f0: f64, k: usize) -> f64 {
    q1.powi(k as i32) * (1.0 + q2) * f0
}

pub fn rate_factors(
    momentum: Momentum,
    alpha: f64,
    beta: f64,
    rho_tilde: f64,
) -> Result<RateFactors> {
    if !(rho_tilde > 0.0 && rho_tilde <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rho_tilde must lie in (0, 1], got {rho_tilde}"
        )));
    }
    let step = alpha * (2.0 - alpha) * rho_tilde;
    let mut f = RateFactors {
        momentum,
        alpha,
        beta,
        rho_tilde,
        tau1: None,
        tau2: None,
        tau3: None,
        gamma1: None,
        gamma2: None,
        gamma3: None,
        gamma4: None,
        t1: 0.0,
        t2: 0.0,
        q1: 0.0,
        q2: 0.0,
        beta_max: 0.0,
        params_admissible: false,
    };
    match momentum {
        Momentum::Polyak => {
            let tau1 = 4.0 + alpha - alpha * rho_tilde;
            let tau2 = step;
            let g1 = (1.0 + 3.0 * beta + beta * beta)
                - (2.0 * alpha + alpha * beta - alpha * alpha) * rho_tilde;
            let g2 = 2.0 * beta * beta + (1.0 + alpha) * beta;
            // γ₁ + γ₂ < 1 reduces to 3β² + τ₁β − τ₂ < 0.
            f.beta_max = (((tau1 * tau1 + 12.0 * tau2).sqrt() - tau1) / 6.0).max(0.0);
            (f.tau1, f.tau2, f.gamma1, f.gamma2) = (Some(tau1), Some(tau2), Some(g1), Some(g2));
            (f.t1, f.t2) = (g1, g2);
        }
        Momentum::Nesterov => {
            let tau3 = 1.0 / (2.0 + 2.0 * step);
            let shrink = 1.0 + (alpha * alpha - 2.0 * alpha) * rho_tilde;
            let g3 = 2.0 * (1.0 + beta) * (1.0 + beta) * shrink;
            let g4 = 2.0 * beta * beta * shrink;
            f.beta_max = if 2.0 * tau3 > 1.0 {
                (((2.0 * tau3 - 1.0).sqrt() - 1.0) / 2.0).max(0.0)
            } else {
                0.0
            };
            (f.tau3, f.gamma3, f.gamma4) = (Some(tau3), Some(g3), Some(g4));
            (f.t1, f.t2) = (g3, g4);
        }
    }
    (f.q1, f.q2) = recurrence_factors(f.t1, f.t2);
    f.params_admissible = alpha > 0.0 && alpha < 2.0 && beta > 0.0 && beta < f.beta_max;
    Ok(f)
}

/// Entry `k` bounds `E‖X⁽ᵏ⁺¹⁾ − X*‖_F²` when `X⁽⁰⁾ = X⁽¹⁾`, i.e. the error
/// after `k` steps of the solver.
pub fn error_bound_curve(
    factors: &RateFactors,
    initial_error_sq: f64,
    k_max: usize,
) -> Result<Vec<f64>> {
    if !factors.params_admissible {
        return Err(Error::InvalidArgument(format!(
            "({}, {}) is outside the admissible range for {:?} momentum (beta_max = {:.3e})",
            factors.alpha, factors.beta, factors.momentum, factors.beta_max
        )));
    }
    Ok((0..=k_max)
        .map(|k| recurrence_bound(factors.q1, factors.q2, initial_error_sq, k))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentCheck {
    /// `Σ_{Δ_k} p_ij W_ij`
    pub expected_loss: f64,
    /// `ρ̃_k ‖X − X*‖_F²`
    pub bound: f64,
    pub index_set_size: usize,
}

impl DescentCheck {
    pub fn holds(&self, rel_slack: f64) -> bool {
        self.expected_loss >= self.bound * (1.0 - rel_slack)
    }
}

/// Evaluates the expected loss of one greedy step at `x` exactly, by summing
/// over the admissible set with the sampling probabilities.
pub fn descent_check(
    instance: &ProblemInstance,
    x: &Mat,
    x_star: &Mat,
    theta: f64,
    sampling: Sampling,
    rho_tilde: f64,
) -> Result<DescentCheck> {
    let r = residual(&instance.a, x, &instance.b, &instance.c)?;
    let r_sq = frob_norm_sq(&r);
    let a_norms = crate::linalg::row_norms_sq(&instance.a);
    let b_norms = crate::linalg::col_norms_sq(&instance.b);
    let (af, bf) = (a_norms.iter().sum::<f64>(), b_norms.iter().sum::<f64>());
    let w = loss_matrix(&r, &a_norms, &b_norms)?;
    let delta = greedy_threshold(&w, r_sq, theta, af, bf)?;
    let set = build_index_set(&w, delta, r_sq)?;
    let consts = greedy_constants(&w, &a_norms, &b_norms, theta, af, bf, rho_tilde)?;
    let expected_loss = match sampling {
        Sampling::Uniform => set.iter().map(|&ij| w[ij]).sum::<f64>() / set.len() as f64,
        Sampling::Proportional => {
            let mass: f64 = set.iter().map(|&ij| r[ij] * r[ij]).sum();
            set.iter().map(|&ij| r[ij] * r[ij] / mass * w[ij]).sum()
        }
    };
    Ok(DescentCheck {
        expected_loss,
        bound: consts.rho_tilde_k * frob_norm_sq(&x.sub(x_star)?),
        index_set_size: set.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::gen_dense;
    use crate::rng::RngSpec;

    #[test]
    fn spectral_examples() {
        let i2 = Mat::identity(2);
        assert!((spectral_bounds(&i2, &i2).unwrap().rho_tilde - 0.25).abs() < 1e-15);
        let a = Mat::from_diag(&[2.0, 1.0]);
        assert!((spectral_bounds(&a, &i2).unwrap().rho_tilde - 0.1).abs() < 1e-15);
        for seed in 0..10 {
            let inst = gen_dense(8, 3, 5, RngSpec::problem(seed)).unwrap();
            let rho = spectral_bounds(&inst.a, &inst.b).unwrap().rho_tilde;
            assert!(rho > 0.0 && rho <= 1.0);
        }
    }

    #[test]
    fn greedy_constant_examples() {
        let w = Mat::from_rows(&[&[1., 2.], &[3., 4.]]);
        let g = greedy_constants(&w, &[1., 1.], &[1., 1.], 0.9, 2.0, 2.0, 0.25).unwrap();
        assert_eq!((g.zeta_k, g.gamma_k), (4.0, 1.0));

        let w = Mat::from_rows(&[&[0., 2.], &[3., 4.]]);
        let g = greedy_constants(&w, &[1., 1.], &[1., 1.], 0.9, 2.0, 2.0, 0.25).unwrap();
        assert_eq!(g.zeta_k, 3.0);
        assert!((g.gamma_k - 1.3).abs() < 1e-15);
        assert!((g.rho_tilde_k - 0.325).abs() < 1e-15);

        let g = greedy_constants(&w, &[1., 1.], &[1., 1.], 0.0, 2.0, 2.0, 0.25).unwrap();
        assert_eq!(g.gamma_k, 1.0);

        assert!(
            greedy_constants(&Mat::zeros(2, 2), &[1., 1.], &[1., 1.], 0.5, 2.0, 2.0, 0.25).is_err()
        );
    }

    #[test]
    fn recurrence_factor_example() {
        let (q1, q2) = recurrence_factors(0.5, 0.25);
        assert!((q1 - 0.809017).abs() < 1e-6);
        assert!((q2 - 0.309017).abs() < 1e-6);
        assert!((q1 * q2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn polyak_momentum_free_limit() {
        let f = rate_factors(Momentum::Polyak, 1.0, 0.0, 0.2).unwrap();
        assert!((f.gamma1.unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(f.gamma2, Some(0.0));
        assert!((f.q1 - 0.8).abs() < 1e-15);
        assert!(!f.params_admissible, "beta = 0 is outside the open range");
    }

    #[test]
    fn polyak_beta_max_is_the_root() {
        for &(alpha, rho) in &[(0.9, 0.05), (1.2, 0.3), (0.3, 0.9)] {
            let bm = rate_factors(Momentum::Polyak, alpha, 0.0, rho)
                .unwrap()
                .beta_max;
            assert!(bm > 0.0);
            let at = rate_factors(Momentum::Polyak, alpha, bm, rho).unwrap();
            let sum = at.gamma1.unwrap() + at.gamma2.unwrap();
            assert!((sum - 1.0).abs() < 1e-12, "{sum}");
            let inside = rate_factors(Momentum::Polyak, alpha, bm * 0.5, rho).unwrap();
            assert!(inside.params_admissible && inside.q1 < 1.0);
        }
    }

    #[test]
    fn nesterov_range_example_is_empty() {
        let f = rate_factors(Momentum::Nesterov, 0.8, 0.5, 0.25).unwrap();
        assert!((f.tau3.unwrap() - 1.0 / 2.48).abs() < 1e-15);
        assert_eq!(f.beta_max, 0.0);
        assert!(!f.params_admissible);
        for beta in [1e-6, 0.01, 0.3] {
            assert!(
                !rate_factors(Momentum::Nesterov, 0.8, beta, 0.25)
                    .unwrap()
                    .params_admissible
            );
        }
    }

    #[test]
    fn curve_shape() {
        let f = rate_factors(Momentum::Polyak, 0.9, 1e-3, 0.2).unwrap();
        assert!(f.params_admissible);
        let c = error_bound_curve(&f, 2.0, 50).unwrap();
        assert_eq!(c[0], (1.0 + f.q2) * 2.0);
        assert!(c.windows(2).all(|p| p[1] <= p[0]));
        let bad = rate_factors(Momentum::Polyak, 0.9, 0.3, 0.2).unwrap();
        assert!(error_bound_curve(&bad, 1.0, 3).is_err());
    }

    #[test]
    fn curve_dominates_recurrence() {
        let f = rate_factors(Momentum::Polyak, 1.1, 2e-3, 0.3).unwrap();
        let c = error_bound_curve(&f, 1.0, 100).unwrap();
        let (mut prev, mut cur) = (1.0, 1.0);
        for bound in c {
            let next = f.t1 * cur + f.t2 * prev;
            assert!(next <= bound * (1.0 + 1e-12));
            (prev, cur) = (cur, next);
        }
    }
}
