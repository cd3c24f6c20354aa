//! Clamped B-spline bases: knot construction, Cox–de Boor evaluation and
//! collocation matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineBasis {
    degree: usize,
    knots: Vec<f64>,
}

/// Basis values at one point. `clamped` is set when the point lay outside
/// the domain and was moved onto its boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub clamped: bool,
}

impl BSplineBasis {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} needs at least {} knots, got {}",
                2 * (degree + 1),
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument(
                "knots must be finite and nondecreasing".into(),
            ));
        }
        let end = knots.len() - 1;
        let clamped_left = knots[..=degree].iter().all(|&k| k == knots[0]);
        let clamped_right = knots[end - degree..].iter().all(|&k| k == knots[end]);
        if !(clamped_left && clamped_right) || knots[degree] >= knots[end - degree] {
            return Err(Error::InvalidArgument(format!(
                "knot vector must be clamped with {} equal end knots and a nonempty domain",
                degree + 1
            )));
        }
        Ok(Self { degree, knots })
    }

    /// Clamped knots with equally spaced interior knots on `[0, 1]`.
    pub fn uniform(n_basis: usize, degree: usize) -> Result<Self> {
        if n_basis < degree + 1 {
            return Err(Error::InvalidArgument(format!(
                "n_basis = {n_basis} is below degree + 1 = {}",
                degree + 1
            )));
        }
        let spans = n_basis - degree;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..spans).map(|j| j as f64 / spans as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.n_basis()])
    }

    /// Index `s` with `knots[s] ≤ x < knots[s+1]`, the last nonempty span
    /// for the right end.
    fn find_span(&self, x: f64) -> usize {
        let n = self.n_basis();
        if x >= self.knots[n] {
            return n - 1;
        }
        let (mut lo, mut hi) = (self.degree, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Span index and the `degree + 1` basis functions that can be nonzero
    /// there, `φ_{s−p}, …, φ_s`. `x` must already lie in the domain.
    pub fn nonzero(&self, x: f64) -> (usize, Vec<f64>) {
        let p = self.degree;
        let s = self.find_span(x);
        let k = &self.knots;
        let mut n = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = x - k[s + 1 - j];
            right[j] = k[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        (s, n)
    }

    pub fn eval(&self, x: f64) -> BasisEval {
        let (lo, hi) = self.domain();
        let clamped = !(lo..=hi).contains(&x);
        if clamped {
            log::warn!("basis evaluated at {x} outside [{lo}, {hi}]; clamping");
        }
        let xc = x.clamp(lo, hi);
        let (s, local) = self.nonzero(xc);
        let mut values = vec![0.0; self.n_basis()];
        values[s - self.degree..=s].copy_from_slice(&local);
        BasisEval { values, clamped }
    }
}

/// Values of every basis function at `x`.
pub fn basis_eval(basis: &BSplineBasis, x: f64) -> Vec<f64> {
    basis.eval(x).values
}

/// Row `i` holds the basis values at `params[i]`.
pub fn collocation_matrix(basis: &BSplineBasis, params: &[f64]) -> Result<Mat> {
    if params.is_empty() {
        return Err(Error::InvalidArgument("no parameters".into()));
    }
    let nb = basis.n_basis();
    let mut data = Vec::with_capacity(params.len() * nb);
    for &t in params {
        data.extend(basis.eval(t).values);
    }
    Mat::from_vec(params.len(), nb, data)
}

/// Clamped knots for least-squares approximation of data at `params`
/// (nondecreasing, spanning `[0, 1]`).
///
/// Interior knot `j` (of `J = n_basis − degree − 1`) sits at fractional
/// parameter index `j (N − 1) / (J + 1)`, linearly interpolated between its
/// neighbouring parameters. Consecutive knots are therefore at least one
/// parameter index apart, so each knot span holds a parameter, and uniform
/// parameters give uniform, symmetric knots.
pub fn averaging_knots(params: &[f64], n_basis: usize, degree: usize) -> Result<Vec<f64>> {
    let len = params.len();
    if n_basis < degree + 1 {
        return Err(Error::InvalidArgument(format!(
            "n_basis = {n_basis} is below degree + 1 = {}",
            degree + 1
        )));
    }
    if n_basis > len {
        return Err(Error::InvalidArgument(format!(
            "{n_basis} basis functions need at least as many parameters, got {len}"
        )));
    }
    let spans = n_basis - degree;
    let d = (len - 1) as f64 / spans as f64;
    let (first, last) = (params[0], params[len - 1]);
    let mut knots = vec![first; degree + 1];
    for j in 1..spans {
        let pos = j as f64 * d;
        let i = (pos.floor() as usize).min(len - 2);
        let a = pos - i as f64;
        knots.push((1.0 - a) * params[i] + a * params[i + 1]);
    }
    knots.extend(std::iter::repeat_n(last, degree + 1));
    Ok(knots)
}

/// True when every nonempty knot span of the domain contains a parameter.
pub fn schoenberg_whitney(knots: &[f64], degree: usize, params: &[f64]) -> bool {
    let n_basis = knots.len() - degree - 1;
    (degree..n_basis).all(|s| {
        let (lo, hi) = (knots[s], knots[s + 1]);
        if lo == hi {
            return true;
        }
        let last = s + 1 == n_basis;
        params
            .iter()
            .any(|&t| t >= lo && (t < hi || (last && t <= hi)))
    })
}
