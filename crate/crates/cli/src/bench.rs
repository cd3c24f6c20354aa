//! Seeded benchmark batteries: IT, CPU and speed-up per (method, theta).

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use rgrk_core::{solve, InstanceSpec, Method, ProblemInstance, RngSpec, SolverConfig};

use crate::{BenchArgs, Format, Outcome, SolverArgs};

/// Aggregate over the replicates of one (method, theta) row.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub method: Method,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub it_mean: f64,
    pub it_median: f64,
    pub cpu_mean_seconds: f64,
    pub rrn_final_mean: f64,
    /// Baseline CPU mean over this row's, the baseline being ME-RGRK at the
    /// same theta.
    pub speedup_vs_baseline: Option<f64>,
    pub repeats: usize,
    pub converged_runs: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Serialize)]
struct TableRow {
    method: Method,
    theta: f64,
    it: u64,
    cpu: f64,
    su: Option<f64>,
}

struct Replicate {
    iters: usize,
    seconds: f64,
    rrn: f64,
    converged: bool,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn aggregate(cfg: &SolverConfig, seeds: Vec<u64>, runs: &[Replicate]) -> RunSummary {
    let n = runs.len() as f64;
    let mut its: Vec<f64> = runs.iter().map(|r| r.iters as f64).collect();
    RunSummary {
        method: cfg.method,
        theta: cfg.theta,
        alpha: cfg.alpha,
        beta: cfg.beta,
        it_mean: its.iter().sum::<f64>() / n,
        it_median: median(&mut its),
        cpu_mean_seconds: runs.iter().map(|r| r.seconds).sum::<f64>() / n,
        rrn_final_mean: runs.iter().map(|r| r.rrn).sum::<f64>() / n,
        speedup_vs_baseline: None,
        repeats: runs.len(),
        converged_runs: runs.iter().filter(|r| r.converged).count(),
        seeds,
    }
}

/// Runs every (method, theta) row. Replicate `r` uses seed `base + r` for
/// both its instance (unless one fixed instance is given) and its sampling.
pub fn battery(
    instances: &[ProblemInstance],
    methods: &[Method],
    thetas: &[f64],
    solver: &SolverArgs,
    base: u64,
) -> Result<Vec<RunSummary>> {
    let repeats = instances.len() as u64;
    let seeds: Vec<u64> = (0..repeats).map(|r| base + r).collect();
    let mut rows = Vec::new();
    for &theta in thetas {
        for &method in methods {
            let cfg = SolverArgs {
                theta,
                ..solver.clone()
            }
            .config(method, base);
            cfg.validate()?;
            let runs = seeds
                .par_iter()
                .zip(instances)
                .map(|(&seed, inst)| {
                    let cfg = SolverConfig {
                        rng: RngSpec::solver(seed),
                        ..cfg.clone()
                    };
                    let rep = solve(inst, &cfg).with_context(|| {
                        format!("{method} theta={theta} seed={seed} on {}", inst.label)
                    })?;
                    if !rep.converged {
                        log::warn!(
                            "{method} theta={theta} seed={seed}: no convergence in {} iterations",
                            rep.final_iter
                        );
                    }
                    Ok(Replicate {
                        iters: rep.final_iter,
                        seconds: rep.elapsed_seconds,
                        rrn: rep.final_rrn,
                        converged: rep.converged,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(aggregate(&cfg, seeds.clone(), &runs));
        }
    }
    let baselines: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.method == Method::MeRgrk)
        .map(|r| (r.theta, r.cpu_mean_seconds))
        .collect();
    for row in &mut rows {
        row.speedup_vs_baseline = baselines
            .iter()
            .find(|(t, _)| *t == row.theta)
            .map(|(_, cpu)| cpu / row.cpu_mean_seconds);
    }
    Ok(rows)
}

pub fn run(args: &BenchArgs, base: u64, dir: &Path, format: Format) -> Result<Outcome> {
    let instances: Vec<ProblemInstance> = match args.instance.spec(base) {
        Some(spec) => (0..args.repeats)
            .map(|r| {
                InstanceSpec {
                    seed: base + r,
                    ..spec
                }
                .generate()
            })
            .collect::<rgrk_core::Result<_>>()?,
        None => vec![args.instance.load(base)?; args.repeats as usize],
    };
    let solver = SolverArgs {
        method: Method::MeRgrk,
        theta: 0.9,
        alpha: None,
        beta: None,
        tol: args.tol,
        max_iters: args.max_iters,
        sampling: Default::default(),
        refresh: 5000,
        stride: 10,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| anyhow!("thread pool: {e}"))?;
    let rows = pool.install(|| battery(&instances, &args.methods, &args.thetas, &solver, base))?;

    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let table: Vec<TableRow> = rows
        .iter()
        .map(|r| TableRow {
            method: r.method,
            theta: r.theta,
            it: r.it_mean.round() as u64,
            cpu: r.cpu_mean_seconds,
            su: r.speedup_vs_baseline,
        })
        .collect();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(dir.join("bench.csv"))?;
            for row in &table {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(&rows)?;
            std::fs::write(dir.join("bench.json"), text + "\n")?;
        }
    }
    println!(
        "{:<8} {:>5} {:>8} {:>11} {:>6}",
        "method", "theta", "IT", "CPU (s)", "SU"
    );
    for row in &table {
        let su = row
            .su
            .map_or_else(|| "-".to_string(), |s| format!("{s:.2}"));
        println!(
            "{:<8} {:>5} {:>8} {:>11.4e} {:>6}",
            row.method.name(),
            row.theta,
            row.it,
            row.cpu,
            su
        );
    }
    Ok(Outcome::Converged)
}
