use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use rgrk_core::surface::{
    eval_surface, fit_surface_with, format_grid_csv, format_obj, sample_surface, FitOptions,
    FitSummary,
};
use rgrk_core::theory::{rate_factors, spectral_bounds, Momentum, RateFactors, SpectralBounds};
use rgrk_core::{solve, InstanceSpec, Method, ProblemInstance};

use crate::{
    bench, BoundsArgs, Cli, Command, FitArgs, Format, GenerateArgs, InstanceArgs, Outcome,
    SolveArgs,
};

pub fn run(cli: Cli) -> Result<Outcome> {
    let out = |default: &str| cli.out.clone().unwrap_or_else(|| PathBuf::from(default));
    match &cli.command {
        Command::Generate(args) => generate(args, cli.seed, &out("instance")),
        Command::Solve(args) => solve_cmd(args, cli.seed, &out("run"), cli.format),
        Command::Bench(args) => bench::run(args, cli.seed, &out("bench"), cli.format),
        Command::Bounds(args) => bounds(args, cli.seed, &out("bounds"), cli.format),
        Command::Fit(args) => fit(args, cli.seed, &out("fit")),
    }
}

fn ranks(r: Option<[usize; 2]>) -> Option<(usize, usize)> {
    r.map(|[r1, r2]| (r1, r2))
}

impl InstanceArgs {
    /// The inline spec for `seed`, or `None` when an instance directory is given.
    pub fn spec(&self, seed: u64) -> Option<InstanceSpec> {
        if self.instance.is_some() {
            return None;
        }
        Some(InstanceSpec {
            family: self.family,
            m: self.dims[0],
            n: self.dims[1],
            p: self.dims[2],
            ranks: ranks(self.ranks),
            seed,
        })
    }

    pub fn load(&self, seed: u64) -> Result<ProblemInstance> {
        match (&self.instance, self.spec(seed)) {
            (Some(dir), _) => ProblemInstance::load(dir)
                .with_context(|| format!("loading instance from {}", dir.display())),
            (None, Some(spec)) => Ok(spec.generate()?),
            (None, None) => unreachable!(),
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn generate(args: &GenerateArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    let spec = InstanceSpec {
        family: args.family,
        m: args.m,
        n: args.n,
        p: args.p,
        ranks: ranks(args.ranks),
        seed,
    };
    let inst = spec.generate()?;
    inst.save(dir)?;
    let mut files: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    files.sort();
    println!(
        "{} {}x{}x{} seed={} -> {}: {}",
        inst.label,
        args.m,
        args.n,
        args.p,
        seed,
        dir.display(),
        files.join(" ")
    );
    Ok(Outcome::Converged)
}

fn solve_cmd(args: &SolveArgs, seed: u64, dir: &Path, format: Format) -> Result<Outcome> {
    let inst = args.instance.load(seed)?;
    let cfg = args.solver.config(args.solver.method, seed);
    let report = solve(&inst, &cfg)?;
    create_dir(dir)?;
    report.save_history(&dir.join("history.csv"))?;
    let summary = report.summary();
    write_json(&dir.join("summary.json"), &summary)?;
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&summary)?),
        Format::Csv => {
            println!("method,iters,converged,final_rrn");
            println!(
                "{},{},{},{:e}",
                summary.method, summary.iters, summary.converged, summary.final_rrn
            );
        }
    }
    Ok(Outcome::of(report.converged))
}

#[derive(Debug, Serialize)]
struct BetaRange {
    method: Method,
    alpha: f64,
    beta_min: f64,
    beta_max: f64,
    empty: bool,
}

#[derive(Debug, Serialize)]
struct GridPoint {
    method: Method,
    #[serde(flatten)]
    factors: RateFactors,
}

#[derive(Debug, Serialize)]
struct BoundsReport {
    instance: String,
    spectral: SpectralBounds,
    beta_ranges: Vec<BetaRange>,
    grid: Vec<GridPoint>,
}

#[derive(Debug, Serialize)]
struct GridRow {
    method: Method,
    alpha: f64,
    beta: f64,
    t1: f64,
    t2: f64,
    q1: f64,
    q2: f64,
    beta_max: f64,
    params_admissible: bool,
}

fn bounds(args: &BoundsArgs, seed: u64, dir: &Path, format: Format) -> Result<Outcome> {
    let inst = args.instance.load(seed)?;
    let spectral = spectral_bounds(&inst.a, &inst.b)?;
    let mut beta_ranges = Vec::new();
    let mut grid = Vec::new();
    for method in [Method::PmRgrk, Method::NmRgrk] {
        let momentum = Momentum::of(method).expect("momentum method");
        for &alpha in &args.alphas {
            let f = rate_factors(momentum, alpha, 0.0, spectral.rho_tilde)?;
            let open = alpha > 0.0 && alpha < 2.0 && f.beta_max > 0.0;
            beta_ranges.push(BetaRange {
                method,
                alpha,
                beta_min: 0.0,
                beta_max: if open { f.beta_max } else { 0.0 },
                empty: !open,
            });
            for &beta in &args.betas {
                let factors = rate_factors(momentum, alpha, beta, spectral.rho_tilde)?;
                grid.push(GridPoint { method, factors });
            }
        }
    }
    create_dir(dir)?;
    let report = BoundsReport {
        instance: inst.label.clone(),
        spectral,
        beta_ranges,
        grid,
    };
    write_json(&dir.join("bounds.json"), &report)?;
    if format == Format::Csv {
        let mut w = csv::Writer::from_path(dir.join("grid.csv"))?;
        for g in &report.grid {
            let f = &g.factors;
            w.serialize(GridRow {
                method: g.method,
                alpha: f.alpha,
                beta: f.beta,
                t1: f.t1,
                t2: f.t2,
                q1: f.q1,
                q2: f.q2,
                beta_max: f.beta_max,
                params_admissible: f.params_admissible,
            })?;
        }
        w.flush()?;
    }
    println!("rho_tilde = {:e}", spectral.rho_tilde);
    for r in &report.beta_ranges {
        if r.empty {
            println!(
                "{} alpha={}: admissible beta range empty",
                r.method, r.alpha
            );
        } else {
            println!(
                "{} alpha={}: 0 < beta < {:e}",
                r.method, r.alpha, r.beta_max
            );
        }
    }
    Ok(Outcome::Converged)
}

fn fit(args: &FitArgs, seed: u64, dir: &Path) -> Result<Outcome> {
    if args.n < 4 || args.n > args.m.min(args.p) {
        bail!(
            "need 4 <= n <= min(m, p), got n={}, m={}, p={}",
            args.n,
            args.m,
            args.p
        );
    }
    let grid = sample_surface(args.surface, args.m, args.p)?;
    let cfg = args.solver.config(args.solver.method, seed);
    let options = FitOptions {
        params: args.params.into(),
        knots: args.knots.into(),
    };
    let fitted = fit_surface_with(&grid, args.n, options, &cfg)?;
    let s = &fitted.setup;
    let mesh = eval_surface(
        &fitted.net,
        &s.basis_u,
        &s.basis_v,
        &s.params_u,
        &s.params_v,
    )?;
    create_dir(dir)?;
    fs::write(dir.join("data.csv"), format_grid_csv(&grid.q))?;
    fs::write(dir.join("fit.obj"), format_obj(&mesh))?;
    let report = &fitted.report;
    report.save_history(&dir.join("history.csv"))?;
    let summary = FitSummary {
        surface: args.surface,
        m: args.m,
        p: args.p,
        n: args.n,
        method: report.method,
        theta: report.theta,
        alpha: report.alpha,
        beta: report.beta,
        seed,
        iters: report.final_iter,
        converged: report.converged,
        final_rrn: report.final_rrn,
        elapsed_seconds: report.elapsed_seconds,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    println!(
        "surface {} {}: iters={} converged={} final_rrn={:e} -> {}",
        args.surface,
        summary.method,
        summary.iters,
        summary.converged,
        summary.final_rrn,
        dir.display()
    );
    Ok(Outcome::of(report.converged))
}
