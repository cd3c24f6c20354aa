//! Benchmark fixtures shared by the criterion targets.

use rgrk_core::{Family, InstanceSpec, Method, ProblemInstance, SolverConfig};

/// A seeded instance of the given family; low-rank instances get ranks
/// `(3n/4, 3n/4)`.
pub fn fixture(family: Family, m: usize, n: usize, p: usize) -> ProblemInstance {
    let r = (3 * n / 4).max(1);
    InstanceSpec {
        family,
        m,
        n,
        p,
        ranks: Some((r, r)),
        seed: 17,
    }
    .generate()
    .expect("fixture dimensions are valid")
}

/// The configuration the benchmarks run with: method defaults, θ = 0.9.
pub fn config(method: Method) -> SolverConfig {
    SolverConfig::new(method).with_seed(1)
}
