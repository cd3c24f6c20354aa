//! Synthetic test families for `A X B = C` and their on-disk layout.
//!
//! All generators produce consistent systems. `x_star` always holds the
//! solution the solvers converge to from a zero start: the generating
//! solution for the dense and low-rank families (where it already is the
//! minimum-norm solution) and `A† C B†` for the sparse and block families.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    col_norms_sq, frob_norm_sq, householder_qr, pinv_solution, read_matrix, residual, row_norms_sq,
    write_matrix, Mat,
};
use crate::rng::RngSpec;

/// Relative squared-residual bound for `x_star` consistency.
pub const CONSISTENCY_TOL: f64 = 1e-18;

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub x_star: Option<Mat>,
    pub label: String,
    pub seed: Option<u64>,
}

impl ProblemInstance {
    /// Wraps caller-supplied matrices and validates them.
    pub fn new(
        a: Mat,
        b: Mat,
        c: Mat,
        x_star: Option<Mat>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let inst = Self {
            a,
            b,
            c,
            x_star,
            label: label.into(),
            seed: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// `(m, n, p)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.rows(), self.a.cols(), self.b.cols())
    }

    /// Checks shape, row-norm and consistency invariants; the error names
    /// the violated one.
    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.a.shape();
        let p = self.b.cols();
        if self.b.rows() != n {
            return Err(Error::InstanceInvariant(format!(
                "B must have {n} rows to match A's columns, has {}",
                self.b.rows()
            )));
        }
        if self.c.shape() != (m, p) {
            return Err(Error::InstanceInvariant(format!(
                "C must be {m}x{p}, is {}x{}",
                self.c.rows(),
                self.c.cols()
            )));
        }
        if m < n || p < n {
            return Err(Error::InstanceInvariant(format!(
                "requires m >= n and p >= n, got m={m}, n={n}, p={p}"
            )));
        }
        if let Some(i) = row_norms_sq(&self.a).iter().position(|&v| v == 0.0) {
            return Err(Error::InstanceInvariant(format!(
                "A has a zero row at index {i}"
            )));
        }
        if let Some(j) = col_norms_sq(&self.b).iter().position(|&v| v == 0.0) {
            return Err(Error::InstanceInvariant(format!(
                "B has a zero column at index {j}"
            )));
        }
        if let Some(x) = &self.x_star {
            if x.shape() != (n, n) {
                return Err(Error::InstanceInvariant(format!(
                    "x_star must be {n}x{n}, is {}x{}",
                    x.rows(),
                    x.cols()
                )));
            }
            let r = frob_norm_sq(&residual(&self.a, x, &self.b, &self.c)?);
            let c = frob_norm_sq(&self.c);
            if r > CONSISTENCY_TOL * c {
                return Err(Error::InstanceInvariant(format!(
                    "x_star is inconsistent: |C - A X* B|^2 = {r:.3e} > {CONSISTENCY_TOL:e} * {c:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// `A† C B†`, the limit of every solver started from zero.
    pub fn min_norm_solution(&self) -> Result<Mat> {
        pinv_solution(&self.a, &self.b, &self.c)
    }

    /// Writes `A.csv`, `B.csv`, `C.csv`, optional `Xstar.csv` and a one-line
    /// `meta.txt` into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_matrix(&dir.join("A.csv"), &self.a)?;
        write_matrix(&dir.join("B.csv"), &self.b)?;
        write_matrix(&dir.join("C.csv"), &self.c)?;
        if let Some(x) = &self.x_star {
            write_matrix(&dir.join("Xstar.csv"), x)?;
        }
        let seed = self
            .seed
            .map_or_else(|| "none".to_string(), |s| s.to_string());
        fs::write(
            dir.join("meta.txt"),
            format!("label={} seed={}\n", self.label, seed),
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let a = read_matrix(&dir.join("A.csv"))?;
        let b = read_matrix(&dir.join("B.csv"))?;
        let c = read_matrix(&dir.join("C.csv"))?;
        let xs_path = dir.join("Xstar.csv");
        let x_star = if xs_path.exists() {
            Some(read_matrix(&xs_path)?)
        } else {
            None
        };
        let mut label = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut seed = None;
        if let Ok(meta) = fs::read_to_string(dir.join("meta.txt")) {
            for tok in meta.split_whitespace() {
                match tok.split_once('=') {
                    Some(("label", v)) => label = v.to_string(),
                    Some(("seed", v)) => seed = v.parse().ok(),
                    _ => {}
                }
            }
        }
        let inst = Self {
            a,
            b,
            c,
            x_star,
            label,
            seed,
        };
        inst.validate()?;
        Ok(inst)
    }
}

/// The four synthetic families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Standard normal `A` and `B`.
    Dense,
    /// `A` with density `1/n`, dense normal `B`.
    Sparse,
    /// `A = [A₁ A₁; A₁ A₁]` with uniform `A₁`.
    Block,
    /// `A`, `B` of prescribed ranks with singular values in `[1, 3]`.
    LowRank,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Dense,
        Family::Sparse,
        Family::Block,
        Family::LowRank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Dense => "dense",
            Family::Sparse => "sparse",
            Family::Block => "block",
            Family::LowRank => "lowrank",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dense" | "1" => Ok(Family::Dense),
            "sparse" | "2" => Ok(Family::Sparse),
            "block" | "3" => Ok(Family::Block),
            "lowrank" | "low-rank" | "4" => Ok(Family::LowRank),
            other => Err(Error::InvalidArgument(format!(
                "unknown family '{other}' (expected dense, sparse, block or lowrank)"
            ))),
        }
    }
}

/// Everything needed to regenerate one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    /// Ranks of `A` and `B`; only read by [`Family::LowRank`].
    pub ranks: Option<(usize, usize)>,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn generate(&self) -> Result<ProblemInstance> {
        let rng = RngSpec::problem(self.seed);
        let (m, n, p) = (self.m, self.n, self.p);
        match self.family {
            Family::Dense => gen_dense(m, n, p, rng),
            Family::Sparse => gen_sparse(m, n, p, rng),
            Family::Block => gen_block(m, n, p, rng),
            Family::LowRank => {
                let (r1, r2) = self.ranks.ok_or_else(|| {
                    Error::InvalidArgument("lowrank family needs ranks r1, r2".into())
                })?;
                gen_lowrank(m, n, p, r1, r2, rng)
            }
        }
    }
}

fn check_dims(m: usize, n: usize, p: usize) -> Result<()> {
    if n == 0 || m < n || p < n {
        return Err(Error::InvalidArgument(format!(
            "need m >= n >= 1 and p >= n, got m={m}, n={n}, p={p}"
        )));
    }
    Ok(())
}

fn normal_mat(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn uniform_mat(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random::<f64>())
}

fn finish(
    a: Mat,
    b: Mat,
    x: Mat,
    label: String,
    seed: u64,
    min_norm: bool,
) -> Result<ProblemInstance> {
    let c = a.matmul(&x)?.matmul(&b)?;
    let x_star = if min_norm {
        pinv_solution(&a, &b, &c)?
    } else {
        x
    };
    let inst = ProblemInstance {
        a,
        b,
        c,
        x_star: Some(x_star),
        label,
        seed: Some(seed),
    };
    inst.validate()?;
    Ok(inst)
}

/// Standard normal `A` (m×n), `B` (n×p) and `X*` (n×n); `C = A X* B`.
pub fn gen_dense(m: usize, n: usize, p: usize, spec: RngSpec) -> Result<ProblemInstance> {
    check_dims(m, n, p)?;
    let mut rng = spec.rng();
    let a = normal_mat(m, n, &mut rng);
    let b = normal_mat(n, p, &mut rng);
    let x = normal_mat(n, n, &mut rng);
    finish(a, b, x, format!("dense-{m}x{n}x{p}"), spec.seed, false)
}

/// Sparse normal `A` with each entry present independently with probability
/// `1/n` (about `m` nonzeros), stored dense. Rows left empty receive one
/// normal entry in a uniformly chosen column.
pub fn gen_sparse(m: usize, n: usize, p: usize, spec: RngSpec) -> Result<ProblemInstance> {
    check_dims(m, n, p)?;
    let mut rng = spec.rng();
    let density = 1.0 / n as f64;
    let mut a = Mat::from_fn(m, n, |_, _| {
        if rng.random::<f64>() < density {
            rng.sample(StandardNormal)
        } else {
            0.0
        }
    });
    for i in 0..m {
        if a.row(i).iter().all(|&v| v == 0.0) {
            let j = rng.random_range(0..n);
            let mut v: f64 = rng.sample(StandardNormal);
            while v == 0.0 {
                v = rng.sample(StandardNormal);
            }
            a[(i, j)] = v;
        }
    }
    let b = normal_mat(n, p, &mut rng);
    let x = normal_mat(n, n, &mut rng);
    finish(a, b, x, format!("sparse-{m}x{n}x{p}"), spec.seed, true)
}

/// `A = [A₁ A₁; A₁ A₁]` with `A₁ ~ U(0,1)` of size `(m/2)×(n/2)`, so
/// `rank(A) ≤ n/2`.
pub fn gen_block(m: usize, n: usize, p: usize, spec: RngSpec) -> Result<ProblemInstance> {
    check_dims(m, n, p)?;
    if !m.is_multiple_of(2) || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "block family needs even m and n, got m={m}, n={n}"
        )));
    }
    let mut rng = spec.rng();
    let (hm, hn) = (m / 2, n / 2);
    let a1 = uniform_mat(hm, hn, &mut rng);
    let a = Mat::from_fn(m, n, |i, j| a1[(i % hm, j % hn)]);
    let b = normal_mat(n, p, &mut rng);
    let x = normal_mat(n, n, &mut rng);
    finish(a, b, x, format!("block-{m}x{n}x{p}"), spec.seed, true)
}

/// `U D Vᵀ` with orthonormal `U` (rows×rank), `V` (cols×rank) from QR of
/// normal matrices and `D = diag(1 + 2·U(0,1))`.
pub fn structured_rank_matrix(
    rows: usize,
    cols: usize,
    rank: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Mat> {
    let (u, _) = householder_qr(&normal_mat(rows, rank, rng))?;
    let (v, _) = householder_qr(&normal_mat(cols, rank, rng))?;
    let d: Vec<f64> = (0..rank).map(|_| 1.0 + 2.0 * rng.random::<f64>()).collect();
    let ud = Mat::from_fn(rows, rank, |i, l| u[(i, l)] * d[l]);
    ud.matmul_t(&v)
}

/// `A` of rank `r1`, `B` of rank `r2`; `X* = Aᵀ Z Bᵀ` for normal `Z`, which
/// puts `vec(X*)` in the range of `B ⊗ Aᵀ` so `X*` is the minimum-norm
/// solution.
pub fn gen_lowrank(
    m: usize,
    n: usize,
    p: usize,
    r1: usize,
    r2: usize,
    spec: RngSpec,
) -> Result<ProblemInstance> {
    check_dims(m, n, p)?;
    if r1 == 0 || r2 == 0 || r1 > n || r2 > n {
        return Err(Error::InvalidArgument(format!(
            "ranks must satisfy 1 <= r1, r2 <= n={n}, got r1={r1}, r2={r2}"
        )));
    }
    let mut rng = spec.rng();
    let a = structured_rank_matrix(m, n, r1, &mut rng)?;
    let b = structured_rank_matrix(n, p, r2, &mut rng)?;
    let z = normal_mat(m, p, &mut rng);
    let x = a.t_matmul(&z)?.matmul_t(&b)?;
    finish(
        a,
        b,
        x,
        format!("lowrank-{m}x{n}x{p}-r{r1}-r{r2}"),
        spec.seed,
        false,
    )
}
