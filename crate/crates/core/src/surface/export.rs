//! Mesh and grid output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::linalg::Mat;
use crate::solver::Method;

/// Wavefront OBJ text: one `v` line per grid point in row-major order, then
/// one quad per grid cell.
pub fn format_obj(mesh: &[Mat; 3]) -> String {
    let (m, p) = mesh[0].shape();
    let mut s = String::with_capacity(m * p * 60);
    for i in 0..m {
        for j in 0..p {
            let _ = writeln!(
                s,
                "v {:?} {:?} {:?}",
                mesh[0][(i, j)],
                mesh[1][(i, j)],
                mesh[2][(i, j)]
            );
        }
    }
    for i in 0..m.saturating_sub(1) {
        for j in 0..p.saturating_sub(1) {
            let v = |a: usize, b: usize| a * p + b + 1;
            let _ = writeln!(
                s,
                "f {} {} {} {}",
                v(i, j),
                v(i + 1, j),
                v(i + 1, j + 1),
                v(i, j + 1)
            );
        }
    }
    s
}

/// CSV with columns `i,j,x,y,z`.
pub fn format_grid_csv(mesh: &[Mat; 3]) -> String {
    let (m, p) = mesh[0].shape();
    let mut s = String::from("i,j,x,y,z\n");
    for i in 0..m {
        for j in 0..p {
            let _ = writeln!(
                s,
                "{i},{j},{:?},{:?},{:?}",
                mesh[0][(i, j)],
                mesh[1][(i, j)],
                mesh[2][(i, j)]
            );
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub surface: u8,
    pub m: usize,
    pub p: usize,
    pub n: usize,
    pub method: Method,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iters: usize,
    pub converged: bool,
    pub final_rrn: f64,
    pub elapsed_seconds: f64,
}
