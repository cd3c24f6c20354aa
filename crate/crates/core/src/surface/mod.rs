//! Tensor-product B-spline surface fitting.
//!
//! Data points `Q_ij ∈ R³` on an `m × p` grid are fitted by
//! `S(u, v) = Σ_h Σ_t P_ht φ_h(u) φ_t(v)`. With collocation matrices
//! `A = [φ_h(u_i)]` and `Bᵀ = [φ_t(v_j)]` each coordinate gives one matrix
//! equation `A P_c B = Q_c`, and the three are solved together, sharing the
//! selected index pair at every step.

mod bspline;
mod export;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::solver::{ConvergenceReport, Solver, SolverConfig};

pub use bspline::{
    averaging_knots, basis_eval, collocation_matrix, schoenberg_whitney, BSplineBasis, BasisEval,
};
pub use export::{format_grid_csv, format_obj, FitSummary};

pub const CUBIC: usize = 3;

/// Sampled data points, one matrix per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub q: [Mat; 3],
    /// Normalized sampling parameters of the rows.
    pub params_u: Vec<f64>,
    /// Normalized sampling parameters of the columns.
    pub params_v: Vec<f64>,
}

impl SurfaceGrid {
    pub fn new(q: [Mat; 3], params_u: Vec<f64>, params_v: Vec<f64>) -> Result<Self> {
        let shape = q[0].shape();
        if q.iter().any(|c| c.shape() != shape) {
            return Err(Error::InvalidArgument(
                "coordinate grids differ in shape".into(),
            ));
        }
        if params_u.len() != shape.0 || params_v.len() != shape.1 {
            return Err(Error::dims(
                "surface grid",
                format!("{}x{}", shape.0, shape.1),
                format!("{}x{}", params_u.len(), params_v.len()),
            ));
        }
        for p in [&params_u, &params_v] {
            let ok = p.windows(2).all(|w| w[0] < w[1]) && p[0] == 0.0 && p[p.len() - 1] == 1.0;
            if !ok {
                return Err(Error::InvalidArgument(
                    "grid parameters must increase strictly from 0 to 1".into(),
                ));
            }
        }
        Ok(Self {
            q,
            params_u,
            params_v,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.q[0].shape()
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 3] {
        [self.q[0][(i, j)], self.q[1][(i, j)], self.q[2][(i, j)]]
    }
}

/// The two test surfaces as functions of `(t, s)`.
pub fn surface_point(which: u8, t: f64, s: f64) -> Result<[f64; 3]> {
    match which {
        1 => Ok([
            -2.0 * t * s.cos() + 2.0 * s.cos() / t - 2.0 * t.powi(3) * (3.0 * s).cos() / 3.0,
            6.0 * t * s.sin() - 2.0 * s.sin() / t - 2.0 * t.powi(3) * (3.0 * s).sin() / 3.0,
            4.0 * t.ln(),
        ]),
        2 => Ok([
            (2.0 + t.cos()) * (s / 3.0 - s.sin()),
            (2.0 + (t - 2.0 * PI / 3.0).cos()) * (s.cos() - 1.0),
            (2.0 + (t + 2.0 * PI / 3.0).cos()) * (s.cos() - 1.0),
        ]),
        _ => Err(Error::InvalidArgument(format!(
            "unknown surface {which} (expected 1 or 2)"
        ))),
    }
}

/// Parameter boxes `((t_lo, t_hi), (s_lo, s_hi))`.
pub fn surface_box(which: u8) -> Result<((f64, f64), (f64, f64))> {
    match which {
        1 => Ok(((0.5, 1.0), (0.0, 2.0 * PI))),
        2 => Ok(((-PI, PI), (-2.0 * PI, 2.0 * PI))),
        _ => Err(Error::InvalidArgument(format!(
            "unknown surface {which} (expected 1 or 2)"
        ))),
    }
}

fn uniform_params(k: usize) -> Vec<f64> {
    (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
}

/// Samples a test surface on a uniform `m × p` grid; rows follow `s` and
/// columns follow `t`.
pub fn sample_surface(which: u8, m: usize, p: usize) -> Result<SurfaceGrid> {
    if m < 2 || p < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 2x2 points, got {m}x{p}"
        )));
    }
    let ((t0, t1), (s0, s1)) = surface_box(which)?;
    let (pu, pv) = (uniform_params(m), uniform_params(p));
    let mut q = [Mat::zeros(m, p), Mat::zeros(m, p), Mat::zeros(m, p)];
    for (i, &a) in pu.iter().enumerate() {
        let s = s0 + a * (s1 - s0);
        for (j, &b) in pv.iter().enumerate() {
            let t = t0 + b * (t1 - t0);
            let pt = surface_point(which, t, s)?;
            for c in 0..3 {
                q[c][(i, j)] = pt[c];
            }
        }
    }
    SurfaceGrid::new(q, pu, pv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Along the rows index `i`, giving one parameter per row.
    Rows,
    Cols,
}

/// Chord-length parameters along one grid direction, averaged over the
/// lines of the other direction. Lines of zero length are skipped; if every
/// line is degenerate the parameters are uniform.
pub fn chord_params(grid: &SurfaceGrid, dir: Direction) -> Vec<f64> {
    let (m, p) = grid.shape();
    let (len, lines) = match dir {
        Direction::Rows => (m, p),
        Direction::Cols => (p, m),
    };
    let at = |k: usize, line: usize| match dir {
        Direction::Rows => grid.point(k, line),
        Direction::Cols => grid.point(line, k),
    };
    let mut acc = vec![0.0; len];
    let mut used = 0usize;
    let mut cum = vec![0.0; len];
    for line in 0..lines {
        for k in 1..len {
            let (a, b) = (at(k - 1, line), at(k, line));
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            cum[k] = cum[k - 1] + d;
        }
        let total = cum[len - 1];
        if total > 0.0 {
            used += 1;
            for k in 1..len {
                acc[k] += cum[k] / total;
            }
        }
    }
    if used == 0 {
        return uniform_params(len);
    }
    let mut out: Vec<f64> = acc.iter().map(|v| v / used as f64).collect();
    out[0] = 0.0;
    out[len - 1] = 1.0;
    out
}

/// `P⁽⁰⁾_ij = Q_{f₁(i), f₂(j)}` with `f₁(1) = 1` and `f₁(i) = ⌊m i / n⌋`
/// otherwise (one-based), `f₂` likewise with `p`.
pub fn init_control_net(grid: &SurfaceGrid, n: usize) -> Result<ControlNet> {
    let (m, p) = grid.shape();
    if n == 0 || n > m.min(p) {
        return Err(Error::InvalidArgument(format!(
            "n = {n} must lie in 1..={}",
            m.min(p)
        )));
    }
    let pick = |i: usize, total: usize| -> usize {
        let one_based = if i == 1 { 1 } else { total * i / n };
        if one_based > total {
            log::warn!("control net index {one_based} exceeds {total}; clamping");
        }
        one_based.clamp(1, total) - 1
    };
    let rows: Vec<usize> = (1..=n).map(|i| pick(i, m)).collect();
    let cols: Vec<usize> = (1..=n).map(|j| pick(j, p)).collect();
    let coord = |c: usize| Mat::from_fn(n, n, |i, j| grid.q[c][(rows[i], cols[j])]);
    Ok(ControlNet {
        p: [coord(0), coord(1), coord(2)],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlNet {
    pub p: [Mat; 3],
}

impl ControlNet {
    pub fn new(p: [Mat; 3]) -> Result<Self> {
        if p.iter().any(|c| c.shape() != p[0].shape()) {
            return Err(Error::InvalidArgument(
                "control coordinates differ in shape".into(),
            ));
        }
        Ok(Self { p })
    }

    pub fn size(&self) -> (usize, usize) {
        self.p[0].shape()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KnotRule {
    /// Knots placed by parameter averaging.
    #[default]
    Averaging,
    /// Equally spaced clamped knots.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ParamRule {
    /// Averaged chord-length parameters.
    #[default]
    Chord,
    /// The grid's own sampling parameters.
    Sampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FitOptions {
    pub params: ParamRule,
    pub knots: KnotRule,
}

/// The coefficient matrices of one fitting problem.
#[derive(Debug, Clone)]
pub struct FitSetup {
    pub basis_u: BSplineBasis,
    pub basis_v: BSplineBasis,
    pub params_u: Vec<f64>,
    pub params_v: Vec<f64>,
    /// `m × n` collocation matrix of the row parameters.
    pub a: Mat,
    /// `n × p`, the transposed collocation matrix of the column parameters.
    pub b: Mat,
}

impl FitSetup {
    pub fn new(grid: &SurfaceGrid, n: usize, options: FitOptions) -> Result<Self> {
        let (params_u, params_v) = match options.params {
            ParamRule::Chord => (
                chord_params(grid, Direction::Rows),
                chord_params(grid, Direction::Cols),
            ),
            ParamRule::Sampling => (grid.params_u.clone(), grid.params_v.clone()),
        };
        let basis = |params: &[f64]| match options.knots {
            KnotRule::Averaging => BSplineBasis::new(CUBIC, averaging_knots(params, n, CUBIC)?),
            KnotRule::Uniform => BSplineBasis::uniform(n, CUBIC),
        };
        let basis_u = basis(&params_u)?;
        let basis_v = basis(&params_v)?;
        Self::from_bases(basis_u, basis_v, params_u, params_v)
    }

    pub fn from_bases(
        basis_u: BSplineBasis,
        basis_v: BSplineBasis,
        params_u: Vec<f64>,
        params_v: Vec<f64>,
    ) -> Result<Self> {
        let a = collocation_matrix(&basis_u, &params_u)?;
        let b = collocation_matrix(&basis_v, &params_v)?.transpose();
        Ok(Self {
            basis_u,
            basis_v,
            params_u,
            params_v,
            a,
            b,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SurfaceFit {
    pub net: ControlNet,
    pub report: ConvergenceReport,
    pub setup: FitSetup,
}

/// Solves the three coordinate equations from `init`.
pub fn fit_with_setup(
    grid: &SurfaceGrid,
    setup: FitSetup,
    init: ControlNet,
    config: &SolverConfig,
) -> Result<SurfaceFit> {
    let rhs = grid.q.iter().collect();
    let x0 = init.p.to_vec();
    let mut solver = Solver::with_initial(&setup.a, &setup.b, rhs, x0, config.clone())?;
    let report = solver.run()?;
    let mut it = solver.iterates().into_iter();
    let net = ControlNet {
        p: [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
    };
    Ok(SurfaceFit { net, report, setup })
}

/// Parameters, knots, collocation matrices, the subsampled initial net,
/// then the joint solve.
pub fn fit_surface_with(
    grid: &SurfaceGrid,
    n: usize,
    options: FitOptions,
    config: &SolverConfig,
) -> Result<SurfaceFit> {
    let setup = FitSetup::new(grid, n, options)?;
    let init = init_control_net(grid, n)?;
    fit_with_setup(grid, setup, init, config)
}

/// [`fit_surface_with`] using chord-length parameters and averaged knots.
pub fn fit_surface(grid: &SurfaceGrid, n: usize, config: &SolverConfig) -> Result<SurfaceFit> {
    fit_surface_with(grid, n, FitOptions::default(), config)
}

/// Smallest attainable `Σ_c ‖Q_c − A P_c B‖_F`, from the pseudoinverse
/// solution of each coordinate.
pub fn least_squares_floor(grid: &SurfaceGrid, setup: &FitSetup) -> Result<f64> {
    let mut total = 0.0;
    for q in &grid.q {
        let p = crate::linalg::pinv_solution(&setup.a, &setup.b, q)?;
        total += crate::linalg::residual(&setup.a, &p, &setup.b, q)?.frob_norm();
    }
    Ok(total)
}

/// `Σ_c ‖Q_c − A P_c B‖_F` for a given net.
pub fn fit_error(grid: &SurfaceGrid, setup: &FitSetup, net: &ControlNet) -> Result<f64> {
    let mut total = 0.0;
    for (q, p) in grid.q.iter().zip(&net.p) {
        total += crate::linalg::residual(&setup.a, p, &setup.b, q)?.frob_norm();
    }
    Ok(total)
}

/// Evaluates the surface at every `(u_i, v_j)`.
pub fn eval_surface(
    net: &ControlNet,
    basis_u: &BSplineBasis,
    basis_v: &BSplineBasis,
    us: &[f64],
    vs: &[f64],
) -> Result<[Mat; 3]> {
    let phi_u = collocation_matrix(basis_u, us)?;
    let phi_v = collocation_matrix(basis_v, vs)?;
    let coord = |c: usize| phi_u.matmul(&net.p[c])?.matmul_t(&phi_v);
    Ok([coord(0)?, coord(1)?, coord(2)?])
}
