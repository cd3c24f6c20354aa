//! Acceptance battery: prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use rgrk_core::linalg::{frob_norm_sq, pinv_solution, Mat};
use rgrk_core::problems::{gen_block, gen_dense, gen_lowrank, gen_sparse, ProblemInstance};
use rgrk_core::surface::{
    averaging_knots, basis_eval, chord_params, collocation_matrix, fit_surface,
    least_squares_floor, sample_surface, BSplineBasis, Direction, FitOptions, FitSetup, CUBIC,
};
use rgrk_core::theory::{self, rate_factors, recurrence_bound, recurrence_factors, Momentum};
use rgrk_core::{Method, RngSpec, Sampling, Solver, SolverConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn family_instance(k: u64, seed: u64) -> ProblemInstance {
    let spec = RngSpec::problem(seed);
    match k % 4 {
        0 => gen_dense(60, 12, 24, spec),
        1 => gen_sparse(60, 12, 24, spec),
        2 => gen_block(60, 12, 24, spec),
        _ => gen_lowrank(60, 12, 24, 9, 9, spec),
    }
    .expect("instance generation")
}

fn rel_error(x: &Mat, oracle: &Mat) -> f64 {
    x.sub(oracle).unwrap().frob_norm() / oracle.frob_norm()
}

/// Steps until the error to the oracle reaches `target`, checking every
/// `every` iterations. Returns the iteration count or `None` at the cap.
fn iterations_to_error(
    inst: &ProblemInstance,
    oracle: &Mat,
    cfg: SolverConfig,
    target: f64,
    cap: usize,
) -> Option<usize> {
    let mut s = Solver::new(&inst.a, &inst.b, vec![&inst.c], cfg).unwrap();
    let every = 50;
    while s.iter() < cap {
        if s.residual_frob_sq() == 0.0 {
            break;
        }
        s.advance().unwrap();
        if s.iter() % every == 0 && rel_error(s.iterate(0), oracle) <= target {
            return Some(s.iter());
        }
    }
    (rel_error(s.iterate(0), oracle) <= target).then_some(s.iter())
}

fn criterion_1() -> Outcome {
    let mut worst_iters = 0;
    let mut failures = Vec::new();
    for k in 0..30u64 {
        let inst = family_instance(k, 100 + k);
        let oracle = pinv_solution(&inst.a, &inst.b, &inst.c).unwrap();
        for method in Method::ALL {
            let cfg = SolverConfig::new(method).with_theta(0.9).with_seed(k);
            match iterations_to_error(&inst, &oracle, cfg, 1e-4, 200_000) {
                Some(it) => worst_iters = worst_iters.max(it),
                None => failures.push(format!("{} {method}", inst.label)),
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("90 runs, worst {worst_iters} iterations to error 1e-4; failures: {failures:?}"),
    )
}

fn criterion_2() -> Outcome {
    let inst = gen_dense(20, 5, 10, RngSpec::problem(2)).unwrap();
    let make = |method| {
        let cfg = SolverConfig::new(method)
            .with_params(1.0, 0.0)
            .with_seed(77);
        Solver::new(&inst.a, &inst.b, vec![&inst.c], cfg).unwrap()
    };
    let mut me = make(Method::MeRgrk);
    let mut pm = make(Method::PmRgrk);
    let mut nm = make(Method::NmRgrk);
    for step in 0..10_000 {
        let p0 = me.advance().unwrap();
        let p1 = pm.advance().unwrap();
        let p2 = nm.advance().unwrap();
        let same = |x: &Mat, y: &Mat| {
            x.as_slice()
                .iter()
                .zip(y.as_slice())
                .all(|(a, b)| a.to_bits() == b.to_bits())
        };
        if p0 != p1
            || p0 != p2
            || !same(me.iterate(0), pm.iterate(0))
            || !same(me.iterate(0), nm.iterate(0))
        {
            return outcome(false, format!("sequences diverge at step {step}"));
        }
    }
    outcome(
        true,
        "10000 steps, identical pairs and bit-identical iterates",
    )
}

fn criterion_3() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for theta in [0.5, 0.7, 0.9] {
        let mut medians = Vec::new();
        for method in Method::ALL {
            let mut its: Vec<usize> = (0..20u64)
                .map(|r| {
                    let inst = gen_dense(200, 25, 50, RngSpec::problem(1000 + r)).unwrap();
                    let cfg = SolverConfig::new(method)
                        .with_theta(theta)
                        .with_seed(r)
                        .with_max_iters(200_000);
                    let rep = rgrk_core::solve(&inst, &cfg).unwrap();
                    assert!(rep.converged, "{method} did not converge");
                    rep.final_iter
                })
                .collect();
            its.sort_unstable();
            medians.push((its[9] + its[10]) as f64 / 2.0);
        }
        let (me, pm, nm) = (medians[0], medians[1], medians[2]);
        let ratio = me / pm;
        let ok = nm < pm && pm < me && ratio >= 1.3;
        pass &= ok;
        lines.push(format!(
            "θ={theta}: ME {me} PM {pm} NM {nm} ME/PM {ratio:.3}"
        ));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    let mut min_gamma = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    for k in 0..10u64 {
        let inst = match k % 4 {
            0 => gen_dense(20, 5, 10, RngSpec::problem(400 + k)),
            1 => gen_sparse(24, 6, 12, RngSpec::problem(400 + k)),
            2 => gen_block(20, 6, 10, RngSpec::problem(400 + k)),
            _ => gen_lowrank(20, 6, 12, 4, 5, RngSpec::problem(400 + k)),
        }
        .unwrap();
        for method in Method::ALL {
            let mut cfg = SolverConfig::new(method)
                .with_seed(k)
                .with_tol(1e-8)
                .with_max_iters(200_000);
            cfg.instrument = true;
            match rgrk_core::solve(&inst, &cfg) {
                Ok(rep) => {
                    let s = rep.instrumentation.expect("instrumented");
                    checked += s.checked;
                    min_gamma = min_gamma.min(s.min_gamma);
                    min_ratio = min_ratio.min(s.min_ratio);
                }
                Err(e) => return outcome(false, format!("{} {method}: {e}", inst.label)),
            }
        }
    }
    let pass = min_gamma >= 1.0 - 1e-12 && min_ratio >= 1.0 - 1e-12;
    outcome(
        pass,
        format!("{checked} iterations checked; min γ_k {min_gamma:.6}, min δ_k‖A‖²‖B‖²/γ_k {min_ratio:.6}"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = RngSpec::new(5, 99).rng();
    let mut checks = 0;
    let mut min_margin = f64::INFINITY;
    for k in 0..20u64 {
        let inst = match k % 4 {
            0 => gen_dense(12, 4, 8, RngSpec::problem(500 + k)),
            1 => gen_sparse(16, 4, 8, RngSpec::problem(500 + k)),
            2 => gen_block(12, 4, 8, RngSpec::problem(500 + k)),
            _ => gen_lowrank(12, 5, 8, 3, 4, RngSpec::problem(500 + k)),
        }
        .unwrap();
        let x_star = pinv_solution(&inst.a, &inst.b, &inst.c).unwrap();
        let rho = theory::spectral_bounds(&inst.a, &inst.b).unwrap().rho_tilde;
        let (m, _, p) = inst.dims();
        for _ in 0..5 {
            // Errors of the form Aᵀ Z Bᵀ lie in the range the bound covers.
            let z = Mat::from_fn(m, p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let h = inst.a.t_matmul(&z).unwrap().matmul_t(&inst.b).unwrap();
            let x = x_star.add(&h.scaled(rng.random_range(0.01..10.0))).unwrap();
            for theta in [0.2, 0.9, 1.0] {
                for sampling in [Sampling::Proportional, Sampling::Uniform] {
                    let c =
                        theory::descent_check(&inst, &x, &x_star, theta, sampling, rho).unwrap();
                    checks += 1;
                    min_margin = min_margin.min(c.expected_loss / c.bound);
                    if !c.holds(1e-12) {
                        return outcome(
                            false,
                            format!("{}: {} < {}", inst.label, c.expected_loss, c.bound),
                        );
                    }
                }
            }
        }
    }
    outcome(
        true,
        format!("{checks} exact evaluations; min ratio Σp·W / ρ̃_k‖X−X*‖² = {min_margin:.4}"),
    )
}

fn criterion_6() -> Outcome {
    const RUNS: u64 = 500;
    const CHECKPOINTS: [usize; 3] = [10, 50, 100];
    let inst = gen_dense(20, 5, 10, RngSpec::problem(6)).unwrap();
    let x_star = pinv_solution(&inst.a, &inst.b, &inst.c).unwrap();
    let rho = theory::spectral_bounds(&inst.a, &inst.b).unwrap().rho_tilde;
    let f0 = frob_norm_sq(&x_star);
    let mut details = Vec::new();
    let mut pass = true;

    let alpha = 1.0;
    let beta = rate_factors(Momentum::Polyak, alpha, 0.0, rho)
        .unwrap()
        .beta_max
        / 2.0;
    let factors = rate_factors(Momentum::Polyak, alpha, beta, rho).unwrap();
    if !factors.params_admissible {
        return outcome(
            false,
            format!("chosen Polyak parameters not admissible: {factors:?}"),
        );
    }
    let curve = theory::error_bound_curve(&factors, f0, 100).unwrap();
    let mut sums = [0.0; 3];
    for r in 0..RUNS {
        let cfg = SolverConfig::new(Method::PmRgrk)
            .with_params(alpha, beta)
            .with_seed(r);
        let mut s = Solver::new(&inst.a, &inst.b, vec![&inst.c], cfg).unwrap();
        for step in 1..=100 {
            s.advance().unwrap();
            if let Some(slot) = CHECKPOINTS.iter().position(|&c| c == step) {
                sums[slot] += frob_norm_sq(&s.iterate(0).sub(&x_star).unwrap());
            }
        }
    }
    for (slot, &k) in CHECKPOINTS.iter().enumerate() {
        let mean = sums[slot] / RUNS as f64;
        let ok = mean <= 1.05 * curve[k];
        pass &= ok;
        details.push(format!("PM k={k}: mean {mean:.3e} ≤ 1.05×{:.3e}", curve[k]));
    }

    let nest = rate_factors(Momentum::Nesterov, 0.8, 0.5, rho).unwrap();
    if nest.beta_max == 0.0 && !nest.params_admissible {
        let all_flagged = [1e-8, 1e-4, 0.1, 0.5].iter().all(|&b| {
            !rate_factors(Momentum::Nesterov, 0.8, b, rho)
                .unwrap()
                .params_admissible
        });
        pass &= all_flagged;
        details.push(format!(
            "NM admissible β-range empty (2τ₃−1 = {:.4}), vacuous",
            2.0 * nest.tau3.unwrap() - 1.0
        ));
    } else {
        details.push("NM admissible range nonempty; not checked".into());
        pass = false;
    }
    outcome(
        pass,
        format!(
            "ρ̃ = {rho:.3e}, β = {beta:.3e}, q₁ = {:.6}; {}",
            factors.q1,
            details.join("; ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let inst = gen_dense(40, 8, 16, RngSpec::problem(7)).unwrap();
    let mut worst = 0.0f64;
    for method in Method::ALL {
        let mut cfg = SolverConfig::new(method).with_seed(3);
        cfg.refresh_period = 500;
        let mut s = Solver::new(&inst.a, &inst.b, vec![&inst.c], cfg).unwrap();
        for _ in 0..10_000 {
            if s.residual_frob_sq() == 0.0 {
                break;
            }
            if let Err(e) = s.advance() {
                return outcome(false, format!("{method}: {e}"));
            }
        }
        worst = worst.max(s.max_drift());
    }
    outcome(
        worst <= 1e-10,
        format!("max relative drift at refresh {worst:.3e}"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = RngSpec::new(8, 99).rng();
    let mut tightest = f64::INFINITY;
    for _ in 0..100 {
        let t1: f64 = rng.random_range(0.0..1.0);
        let t2: f64 = rng.random_range(0.0..(1.0 - t1));
        let (q1, q2) = recurrence_factors(t1, t2);
        let (mut prev, mut cur) = (1.0f64, 1.0f64);
        for k in 0..200 {
            let next = t1 * cur + t2 * prev;
            let bound = recurrence_bound(q1, q2, 1.0, k);
            if next > bound * (1.0 + 1e-12) {
                return outcome(false, format!("t=({t1}, {t2}) k={k}: {next} > {bound}"));
            }
            if bound > 0.0 {
                tightest = tightest.min(bound / next.max(f64::MIN_POSITIVE));
            }
            (prev, cur) = (cur, next);
        }
    }
    outcome(
        true,
        format!("100 pairs × 200 steps; min bound/value {tightest:.6}"),
    )
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for which in [1u8, 2] {
        let grid = sample_surface(which, 100, 40).unwrap();
        let mut its = Vec::new();
        for method in [Method::PmRgrk, Method::NmRgrk] {
            let cfg = SolverConfig::new(method)
                .with_theta(0.9)
                .with_tol(5e-4)
                .with_max_iters(100_000);
            let fit = fit_surface(&grid, 30, &cfg).unwrap();
            pass &= fit.report.converged;
            its.push(fit.report.final_iter);
            details.push(format!(
                "S{which} {method}: it {} RRN {:.3e}",
                fit.report.final_iter, fit.report.final_rrn_recomputed
            ));
        }
        pass &= its[1] < its[0];
        let setup = FitSetup::new(&grid, 30, FitOptions::default()).unwrap();
        let init = rgrk_core::surface::init_control_net(&grid, 30).unwrap();
        let e0 = rgrk_core::surface::fit_error(&grid, &setup, &init).unwrap();
        let floor = least_squares_floor(&grid, &setup).unwrap() / e0;
        details.push(format!("S{which} least-squares RRN floor {floor:.3e}"));
    }
    outcome(pass, details.join("; "))
}

fn criterion_10() -> Outcome {
    let mut rng = RngSpec::new(10, 99).rng();
    let grid = sample_surface(1, 100, 40).unwrap();
    let params = chord_params(&grid, Direction::Rows);
    let bases = [
        BSplineBasis::new(CUBIC, averaging_knots(&params, 30, CUBIC).unwrap()).unwrap(),
        BSplineBasis::uniform(12, CUBIC).unwrap(),
    ];
    let mut worst = 0.0f64;
    for basis in &bases {
        for _ in 0..1000 {
            let x: f64 = rng.random();
            worst = worst.max((basis_eval(basis, x).iter().sum::<f64>() - 1.0).abs());
        }
    }
    let bezier = BSplineBasis::new(CUBIC, vec![0., 0., 0., 0., 1., 1., 1., 1.]).unwrap();
    let mid = basis_eval(&bezier, 0.5);
    let bezier_ok = mid
        .iter()
        .zip([0.125, 0.375, 0.375, 0.125])
        .all(|(a, b)| (a - b).abs() <= 1e-15);
    let colloc = collocation_matrix(&bases[0], &params).unwrap();
    let max_nnz = (0..colloc.rows())
        .map(|i| colloc.row(i).iter().filter(|&&v| v != 0.0).count())
        .max()
        .unwrap();
    outcome(
        worst <= 1e-12 && bezier_ok && max_nnz <= 4,
        format!("max |Σφ − 1| {worst:.2e}; Bézier midpoint {mid:?}; max nonzeros per collocation row {max_nnz}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("oracle convergence", criterion_1),
        ("reduction identity", criterion_2),
        ("momentum ordering", criterion_3),
        ("greedy threshold bound", criterion_4),
        ("expected descent by enumeration", criterion_5),
        ("expected error bound (Monte-Carlo)", criterion_6),
        ("residual maintenance fidelity", criterion_7),
        ("three-term recurrence bound", criterion_8),
        ("surface fitting", criterion_9),
        ("B-spline correctness", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} [{tag}] {name} ({:.1}s): {}",
            k + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
