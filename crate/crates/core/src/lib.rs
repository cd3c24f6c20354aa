//! Relaxed greedy randomized Kaczmarz solvers for the consistent matrix
//! equation `A X B = C`, with Polyak and Nesterov momentum variants.
//!
//! ```
//! use rgrk_core::{gen_dense, solve, Method, RngSpec, SolverConfig};
//!
//! let inst = gen_dense(20, 5, 10, RngSpec::problem(1)).unwrap();
//! let cfg = SolverConfig::new(Method::NmRgrk).with_seed(3);
//! let report = solve(&inst, &cfg).unwrap();
//! assert!(report.converged);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod problems;
pub mod rng;
pub mod solver;
pub mod surface;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::{pinv_solution, Mat};
pub use problems::{
    gen_block, gen_dense, gen_lowrank, gen_sparse, Family, InstanceSpec, ProblemInstance,
};
pub use rng::RngSpec;
pub use solver::{solve, solve_from, ConvergenceReport, Method, Sampling, Solver, SolverConfig};
