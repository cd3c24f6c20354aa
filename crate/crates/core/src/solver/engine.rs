use std::time::Instant;

use rand_chacha::ChaCha8Rng;

use super::report::{ConvergenceReport, HistoryPoint, InstrumentationSummary};
use super::select::{loss_value, sample_weighted, THRESHOLD_SLACK};
use super::{Method, ResidualMeasure, SolverConfig, DRIFT_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{col_norms_sq, frob_norm_sq, residual, row_norms_sq, Mat};
use crate::problems::ProblemInstance;
use crate::theory;

/// Iterates and maintained residuals for one right-hand side.
///
/// `x_prev`/`r_prev` exist only for the Polyak rule and `y`/`ry` only for
/// the Nesterov rule.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub x: Mat,
    pub x_prev: Option<Mat>,
    pub y: Option<Mat>,
    pub r: Mat,
    pub r_prev: Option<Mat>,
    pub ry: Option<Mat>,
    c_norm: f64,
}

/// Per-entry residual recurrences. `d` is the rank-one increment
/// `(coef · u_k) · w_l`; `aux` is the companion residual.
trait Rule {
    fn apply(r: &mut f64, aux: &mut f64, d: f64, beta: f64);
}

struct Plain;
struct Polyak;
struct Nesterov;

impl Rule for Plain {
    #[inline(always)]
    fn apply(r: &mut f64, _aux: &mut f64, d: f64, _beta: f64) {
        *r -= d;
    }
}

impl Rule for Polyak {
    #[inline(always)]
    fn apply(r: &mut f64, prev: &mut f64, d: f64, beta: f64) {
        let old = *r;
        *r = (old - d) + beta * (old - *prev);
        *prev = old;
    }
}

impl Rule for Nesterov {
    #[inline(always)]
    fn apply(r: &mut f64, ry: &mut f64, d: f64, beta: f64) {
        let y_new = *r - d;
        *r = (1.0 + beta) * y_new - beta * *ry;
        *ry = y_new;
    }
}

struct Sweep<'s> {
    u: &'s [f64],
    w: &'s [f64],
    inv_a: &'s [f64],
    inv_b: &'s [f64],
    coef: f64,
    beta: f64,
}

/// Applies the residual recurrence to one right-hand side and folds the
/// squared entries into `sq`. When `LAST` is set the loss of every entry is
/// also formed and the running maximum returned.
#[inline(always)]
fn sweep<R: Rule, const FIRST: bool, const LAST: bool>(
    s: &Sweep<'_>,
    r: &mut [f64],
    aux: &mut [f64],
    sq: &mut [f64],
) -> (f64, f64) {
    let p = s.w.len();
    let mut r_sq = 0.0;
    let mut max = 0.0f64;
    let rows = r
        .chunks_exact_mut(p)
        .zip(aux.chunks_exact_mut(p))
        .zip(sq.chunks_exact_mut(p));
    for (k, ((rr, ar), sr)) in rows.enumerate() {
        let sk = s.coef * s.u[k];
        let ia = s.inv_a[k];
        for l in 0..p {
            R::apply(&mut rr[l], &mut ar[l], sk * s.w[l], s.beta);
            let v = rr[l] * rr[l];
            r_sq += v;
            let total = if FIRST { v } else { sr[l] + v };
            sr[l] = total;
            if LAST {
                let wl = loss_value(total, ia, s.inv_b[l]);
                if wl > max {
                    max = wl;
                }
            }
        }
    }
    (r_sq, max)
}

fn dispatch<R: Rule>(
    s: &Sweep<'_>,
    first: bool,
    last: bool,
    r: &mut [f64],
    aux: &mut [f64],
    sq: &mut [f64],
) -> (f64, f64) {
    match (first, last) {
        (true, true) => sweep::<R, true, true>(s, r, aux, sq),
        (true, false) => sweep::<R, true, false>(s, r, aux, sq),
        (false, true) => sweep::<R, false, true>(s, r, aux, sq),
        (false, false) => sweep::<R, false, false>(s, r, aux, sq),
    }
}

/// Stateful iteration over one or more right-hand sides `C_1, …, C_T` that
/// share `A`, `B` and the selected index pair.
///
/// The pair is chosen from the combined loss
/// `Σ_c (R_c)²_ij / (‖a_i‖² ‖b_j‖²)`; with a single right-hand side this is
/// exactly the greedy rule for `A X B = C`.
pub struct Solver<'a> {
    a: &'a Mat,
    b: &'a Mat,
    rhs: Vec<&'a Mat>,
    cfg: SolverConfig,
    a_norms: Vec<f64>,
    b_norms: Vec<f64>,
    inv_a: Vec<f64>,
    inv_b: Vec<f64>,
    a_frob_sq: f64,
    b_frob_sq: f64,
    gram_a: Option<Mat>,
    gram_b: Option<Mat>,
    states: Vec<IterateState>,
    /// Entrywise `Σ_c (R_c)²`.
    sq: Vec<f64>,
    r_sq: Vec<f64>,
    max_w: f64,
    iter: usize,
    rng: ChaCha8Rng,
    initial_measure: f64,
    max_drift: f64,
    rho_tilde: Option<f64>,
    instrumentation: Option<InstrumentationSummary>,
    // scratch
    dummy: Vec<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
    bj: Vec<f64>,
    cand_idx: Vec<usize>,
    cand_wt: Vec<f64>,
}

impl<'a> Solver<'a> {
    /// Starts every right-hand side from `X⁽⁰⁾ = 0`.
    pub fn new(a: &'a Mat, b: &'a Mat, rhs: Vec<&'a Mat>, cfg: SolverConfig) -> Result<Self> {
        let n = a.cols();
        let x0 = vec![Mat::zeros(n, n); rhs.len()];
        Self::with_initial(a, b, rhs, x0, cfg)
    }

    pub fn with_initial(
        a: &'a Mat,
        b: &'a Mat,
        rhs: Vec<&'a Mat>,
        x0: Vec<Mat>,
        cfg: SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let (m, n) = a.shape();
        let p = b.cols();
        if rhs.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one right-hand side is required".into(),
            ));
        }
        if b.rows() != n {
            return Err(Error::dims(
                "solver",
                format!("B with {n} rows"),
                format!("{} rows", b.rows()),
            ));
        }
        if x0.len() != rhs.len() {
            return Err(Error::dims(
                "solver",
                format!("{} initial iterates", rhs.len()),
                x0.len(),
            ));
        }
        for (c, x) in rhs.iter().zip(&x0) {
            if c.shape() != (m, p) {
                return Err(Error::dims(
                    "solver",
                    format!("C of shape {m}x{p}"),
                    format!("{:?}", c.shape()),
                ));
            }
            if x.shape() != (n, n) {
                return Err(Error::dims(
                    "solver",
                    format!("X0 of shape {n}x{n}"),
                    format!("{:?}", x.shape()),
                ));
            }
        }
        let a_norms = row_norms_sq(a);
        let b_norms = col_norms_sq(b);
        if let Some(i) = a_norms.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InstanceInvariant(format!("row {i} of A is zero")));
        }
        if let Some(j) = b_norms.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InstanceInvariant(format!("column {j} of B is zero")));
        }
        let inv_a = a_norms.iter().map(|v| 1.0 / v).collect();
        let inv_b = b_norms.iter().map(|v| 1.0 / v).collect();
        let a_frob_sq = a_norms.iter().sum();
        let b_frob_sq = b_norms.iter().sum();

        let gram_bytes = (m * m + p * p) * std::mem::size_of::<f64>();
        let (gram_a, gram_b) = if gram_bytes <= cfg.gram_budget_bytes {
            (Some(a.matmul_t(a)?), Some(b.t_matmul(b)?))
        } else {
            log::debug!("Gram matrices need {gram_bytes} bytes; forming u and w by matvecs");
            (None, None)
        };

        let rho_tilde = if cfg.instrument {
            Some(theory::spectral_bounds(a, b)?.rho_tilde)
        } else {
            None
        };

        let mut states = Vec::with_capacity(rhs.len());
        for (c, x) in rhs.iter().zip(x0) {
            let r = residual(a, &x, b, c)?;
            let (x_prev, y, r_prev, ry) = match cfg.method {
                Method::MeRgrk => (None, None, None, None),
                Method::PmRgrk => (Some(x.clone()), None, Some(r.clone()), None),
                Method::NmRgrk => (None, Some(x.clone()), None, Some(r.clone())),
            };
            states.push(IterateState {
                c_norm: c.frob_norm(),
                x,
                x_prev,
                y,
                r,
                r_prev,
                ry,
            });
        }

        let instrumentation = cfg.instrument.then(InstrumentationSummary::default);
        let rng = cfg.rng.rng();
        let mut solver = Self {
            a,
            b,
            rhs,
            a_norms,
            b_norms,
            inv_a,
            inv_b,
            a_frob_sq,
            b_frob_sq,
            gram_a,
            gram_b,
            states,
            sq: vec![0.0; m * p],
            r_sq: Vec::new(),
            max_w: 0.0,
            iter: 0,
            rng,
            initial_measure: 0.0,
            max_drift: 0.0,
            rho_tilde,
            instrumentation,
            dummy: if cfg.method == Method::MeRgrk {
                vec![0.0; m * p]
            } else {
                Vec::new()
            },
            u: vec![0.0; m],
            w: vec![0.0; p],
            bj: vec![0.0; n],
            cand_idx: Vec::new(),
            cand_wt: Vec::new(),
            cfg,
        };
        solver.rebuild_cache();
        solver.initial_measure = solver.measure();
        Ok(solver)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn iter(&self) -> usize {
        self.iter
    }

    pub fn num_rhs(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, c: usize) -> &IterateState {
        &self.states[c]
    }

    pub fn iterate(&self, c: usize) -> &Mat {
        &self.states[c].x
    }

    pub fn iterates(&self) -> Vec<Mat> {
        self.states.iter().map(|s| s.x.clone()).collect()
    }

    /// Squared row norms of `A`.
    pub fn a_norms(&self) -> &[f64] {
        &self.a_norms
    }

    /// Squared column norms of `B`.
    pub fn b_norms(&self) -> &[f64] {
        &self.b_norms
    }

    pub fn frob_sq(&self) -> (f64, f64) {
        (self.a_frob_sq, self.b_frob_sq)
    }

    /// `Σ_c ‖R_c‖_F²` of the maintained residuals.
    pub fn residual_frob_sq(&self) -> f64 {
        self.r_sq.iter().sum()
    }

    /// Largest relative drift seen at any refresh so far.
    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    /// Current combined loss matrix.
    pub fn loss(&self) -> Mat {
        let p = self.w.len();
        Mat::from_fn(self.u.len(), p, |i, j| {
            loss_value(self.sq[i * p + j], self.inv_a[i], self.inv_b[j])
        })
    }

    /// Relative residual of the maintained residuals.
    pub fn rrn(&self) -> f64 {
        if self.initial_measure == 0.0 {
            0.0
        } else {
            self.measure() / self.initial_measure
        }
    }

    fn measure(&self) -> f64 {
        measure_of(self.cfg.measure, self.r_sq.iter().copied())
    }

    fn rebuild_cache(&mut self) {
        let p = self.w.len();
        self.r_sq.clear();
        for (c, st) in self.states.iter().enumerate() {
            let mut total = 0.0;
            for (k, &v) in st.r.as_slice().iter().enumerate() {
                let v2 = v * v;
                total += v2;
                self.sq[k] = if c == 0 { v2 } else { self.sq[k] + v2 };
            }
            self.r_sq.push(total);
        }
        let mut max = 0.0f64;
        for (k, &s) in self.sq.iter().enumerate() {
            let wl = loss_value(s, self.inv_a[k / p], self.inv_b[k % p]);
            if wl > max {
                max = wl;
            }
        }
        self.max_w = max;
    }

    /// Greedy selection: forms `Δ_k` from the cached losses and draws one
    /// pair from it.
    pub fn select(&mut self) -> Result<(usize, usize)> {
        let total_sq = self.residual_frob_sq();
        if !(total_sq > 0.0) {
            return Err(Error::InvalidArgument(
                "selection requested with zero residual; the iteration has converged".into(),
            ));
        }
        let theta = self.cfg.theta;
        let delta =
            theta / total_sq * self.max_w + (1.0 - theta) / (self.a_frob_sq * self.b_frob_sq);
        if let Some(rho) = self.rho_tilde {
            self.check_threshold(delta, total_sq, rho)?;
        }
        let cut = delta * total_sq * (1.0 - THRESHOLD_SLACK);
        let p = self.w.len();
        self.cand_idx.clear();
        self.cand_wt.clear();
        for (i, row) in self.sq.chunks_exact(p).enumerate() {
            let ia = self.inv_a[i];
            for (j, &s) in row.iter().enumerate() {
                if loss_value(s, ia, self.inv_b[j]) >= cut {
                    self.cand_idx.push(i * p + j);
                    self.cand_wt.push(s);
                }
            }
        }
        if self.cand_idx.is_empty() {
            return Err(Error::InvariantBreach(format!(
                "greedy index set is empty at iteration {} (threshold {cut:.6e}, max loss {:.6e})",
                self.iter, self.max_w
            )));
        }
        let pick = self.cand_idx[sample_weighted(&self.cand_wt, self.cfg.sampling, &mut self.rng)];
        Ok((pick / p, pick % p))
    }

    fn check_threshold(&mut self, delta: f64, total_sq: f64, rho: f64) -> Result<()> {
        let w = self.loss();
        let g = theory::greedy_constants(
            &w,
            &self.a_norms,
            &self.b_norms,
            self.cfg.theta,
            self.a_frob_sq,
            self.b_frob_sq,
            rho,
        )?;
        let scaled = delta * self.a_frob_sq * self.b_frob_sq;
        let summary = self.instrumentation.get_or_insert_with(Default::default);
        summary.record(g.gamma_k, scaled);
        if scaled < g.gamma_k * (1.0 - THRESHOLD_SLACK) {
            return Err(Error::InvariantBreach(format!(
                "iteration {}: δ_k‖A‖²‖B‖² = {scaled:.15e} below γ_k = {:.15e} (‖R‖² = {total_sq:.3e})",
                self.iter, g.gamma_k
            )));
        }
        Ok(())
    }

    /// One full iteration: selection followed by the configured update.
    pub fn advance(&mut self) -> Result<(usize, usize)> {
        let pair = self.select()?;
        self.step(pair)?;
        Ok(pair)
    }

    /// Applies the configured update at `pair`.
    pub fn step(&mut self, pair: (usize, usize)) -> Result<()> {
        let (alpha, beta) = match self.cfg.method {
            Method::MeRgrk => (1.0, 0.0),
            _ => (self.cfg.alpha, self.cfg.beta),
        };
        self.apply(self.cfg.method, pair, alpha, beta)
    }

    /// `X ← X + v a_i b_jᵀ` with `v = R_ij / (‖a_i‖² ‖b_j‖²)`.
    pub fn me_rgrk_step(&mut self, pair: (usize, usize)) -> Result<()> {
        self.apply(Method::MeRgrk, pair, 1.0, 0.0)
    }

    /// `X⁽ᵏ⁺¹⁾ = X⁽ᵏ⁾ + α v a_i b_jᵀ + β (X⁽ᵏ⁾ − X⁽ᵏ⁻¹⁾)`.
    pub fn pm_rgrk_step(&mut self, pair: (usize, usize), alpha: f64, beta: f64) -> Result<()> {
        self.apply(Method::PmRgrk, pair, alpha, beta)
    }

    /// `Y⁽ᵏ⁺¹⁾ = X⁽ᵏ⁾ + α v a_i b_jᵀ`, `X⁽ᵏ⁺¹⁾ = Y⁽ᵏ⁺¹⁾ + β (Y⁽ᵏ⁺¹⁾ − Y⁽ᵏ⁾)`.
    pub fn nm_rgrk_step(&mut self, pair: (usize, usize), alpha: f64, beta: f64) -> Result<()> {
        self.apply(Method::NmRgrk, pair, alpha, beta)
    }

    fn apply(
        &mut self,
        method: Method,
        (i, j): (usize, usize),
        alpha: f64,
        beta: f64,
    ) -> Result<()> {
        if method != self.cfg.method {
            return Err(Error::InvalidArgument(format!(
                "{method} step requested on a solver configured for {}",
                self.cfg.method
            )));
        }
        let (m, p) = (self.u.len(), self.w.len());
        if i >= m || j >= p {
            return Err(Error::InvalidArgument(format!(
                "index pair ({i}, {j}) outside {m}x{p}"
            )));
        }
        let n = self.bj.len();
        for (h, slot) in self.bj.iter_mut().enumerate() {
            *slot = self.b[(h, j)];
        }
        let denom = self.a_norms[i] * self.b_norms[j];
        let mut coefs = Vec::with_capacity(self.states.len());
        for st in &mut self.states {
            let v = st.r[(i, j)] / denom;
            let coef = if method == Method::MeRgrk {
                v
            } else {
                alpha * v
            };
            coefs.push(coef);
            let ai = self.a.row(i);
            match method {
                Method::MeRgrk => {
                    let x = st.x.as_mut_slice();
                    for h in 0..n {
                        let s = coef * ai[h];
                        for (xv, &bv) in x[h * n..(h + 1) * n].iter_mut().zip(&self.bj) {
                            *xv += s * bv;
                        }
                    }
                }
                Method::PmRgrk => {
                    let xp = st.x_prev.as_mut().expect("Polyak state").as_mut_slice();
                    let x = st.x.as_mut_slice();
                    for (h, &a) in ai.iter().enumerate() {
                        let s = coef * a;
                        let row = h * n..(h + 1) * n;
                        for ((xv, pv), &bv) in
                            x[row.clone()].iter_mut().zip(&mut xp[row]).zip(&self.bj)
                        {
                            let old = *xv;
                            *xv = (old + s * bv) + beta * (old - *pv);
                            *pv = old;
                        }
                    }
                }
                Method::NmRgrk => {
                    let y = st.y.as_mut().expect("Nesterov state").as_mut_slice();
                    let x = st.x.as_mut_slice();
                    for (h, &a) in ai.iter().enumerate() {
                        let s = coef * a;
                        let row = h * n..(h + 1) * n;
                        for ((xv, yv), &bv) in
                            x[row.clone()].iter_mut().zip(&mut y[row]).zip(&self.bj)
                        {
                            let y_new = *xv + s * bv;
                            *xv = (1.0 + beta) * y_new - beta * *yv;
                            *yv = y_new;
                        }
                    }
                }
            }
        }
        self.maintain_residual((i, j), &coefs, beta)?;
        self.iter += 1;
        if !self.r_sq.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { iter: self.iter });
        }
        if self.iter.is_multiple_of(self.cfg.refresh_period) {
            self.refresh()?;
        }
        Ok(())
    }

    /// Rank-one residual recurrence for the configured method with
    /// `u = A a_i` and `w = Bᵀ b_j`. `coefs[c]` is the step coefficient of
    /// right-hand side `c` (`α v` for the momentum rules).
    pub fn maintain_residual(
        &mut self,
        (i, j): (usize, usize),
        coefs: &[f64],
        beta: f64,
    ) -> Result<()> {
        if coefs.len() != self.states.len() {
            return Err(Error::dims(
                "maintain_residual",
                self.states.len(),
                coefs.len(),
            ));
        }
        match (&self.gram_a, &self.gram_b) {
            (Some(ga), Some(gb)) => {
                self.u.copy_from_slice(ga.row(i));
                self.w.copy_from_slice(gb.row(j));
            }
            _ => {
                let ai = self.a.row(i);
                for (k, slot) in self.u.iter_mut().enumerate() {
                    *slot = crate::linalg::dot(self.a.row(k), ai);
                }
                self.w.iter_mut().for_each(|v| *v = 0.0);
                for h in 0..self.b.rows() {
                    let bhj = self.b[(h, j)];
                    for (wl, &bv) in self.w.iter_mut().zip(self.b.row(h)) {
                        *wl += bhj * bv;
                    }
                }
            }
        }
        let last = self.states.len() - 1;
        let method = self.cfg.method;
        let mut max = 0.0;
        for (c, st) in self.states.iter_mut().enumerate() {
            let s = Sweep {
                u: &self.u,
                w: &self.w,
                inv_a: &self.inv_a,
                inv_b: &self.inv_b,
                coef: coefs[c],
                beta,
            };
            let r = st.r.as_mut_slice();
            let (first, is_last) = (c == 0, c == last);
            let (r_sq, mx) = match method {
                Method::MeRgrk => {
                    dispatch::<Plain>(&s, first, is_last, r, &mut self.dummy, &mut self.sq)
                }
                Method::PmRgrk => {
                    let aux = st.r_prev.as_mut().expect("Polyak state").as_mut_slice();
                    dispatch::<Polyak>(&s, first, is_last, r, aux, &mut self.sq)
                }
                Method::NmRgrk => {
                    let aux = st.ry.as_mut().expect("Nesterov state").as_mut_slice();
                    dispatch::<Nesterov>(&s, first, is_last, r, aux, &mut self.sq)
                }
            };
            self.r_sq[c] = r_sq;
            if is_last {
                max = mx;
            }
        }
        self.max_w = max;
        Ok(())
    }

    /// Recomputes every residual from scratch, checks the drift of the
    /// maintained ones and replaces them.
    pub fn refresh(&mut self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (st, c) in self.states.iter_mut().zip(&self.rhs) {
            let scale = st.c_norm.max(f64::MIN_POSITIVE);
            let fresh = residual(self.a, &st.x, self.b, c)?;
            let mut drift = frob_norm_sq(&st.r.sub(&fresh)?).sqrt() / scale;
            st.r = fresh;
            if let (Some(xp), Some(rp)) = (&st.x_prev, &mut st.r_prev) {
                let fresh = residual(self.a, xp, self.b, c)?;
                drift = drift.max(frob_norm_sq(&rp.sub(&fresh)?).sqrt() / scale);
                *rp = fresh;
            }
            if let (Some(y), Some(ry)) = (&st.y, &mut st.ry) {
                let fresh = residual(self.a, y, self.b, c)?;
                drift = drift.max(frob_norm_sq(&ry.sub(&fresh)?).sqrt() / scale);
                *ry = fresh;
            }
            worst = worst.max(drift);
        }
        self.max_drift = self.max_drift.max(worst);
        self.rebuild_cache();
        if worst > DRIFT_TOLERANCE {
            return Err(Error::ResidualDrift {
                iter: self.iter,
                drift: worst,
                bound: DRIFT_TOLERANCE,
            });
        }
        Ok(worst)
    }

    /// Relative residual recomputed from the current iterates.
    pub fn recomputed_rrn(&self) -> Result<f64> {
        if self.initial_measure == 0.0 {
            return Ok(0.0);
        }
        let mut norms = Vec::with_capacity(self.states.len());
        for (st, c) in self.states.iter().zip(&self.rhs) {
            norms.push(frob_norm_sq(&residual(self.a, &st.x, self.b, c)?));
        }
        Ok(measure_of(self.cfg.measure, norms.into_iter()) / self.initial_measure)
    }

    /// Iterates until the relative residual reaches `tol_rrn` or `max_iters`
    /// steps have been taken.
    pub fn run(&mut self) -> Result<ConvergenceReport> {
        let start = Instant::now();
        let stride = self.cfg.history_stride;
        let mut history = Vec::new();
        let converged = loop {
            let rrn = self.rrn();
            if self.iter.is_multiple_of(stride) {
                history.push(HistoryPoint {
                    iter: self.iter,
                    rrn,
                    elapsed_seconds: start.elapsed().as_secs_f64(),
                });
            }
            if rrn <= self.cfg.tol_rrn || self.residual_frob_sq() == 0.0 {
                break true;
            }
            if self.iter >= self.cfg.max_iters {
                break false;
            }
            self.advance()?;
        };
        let elapsed = start.elapsed().as_secs_f64();
        let final_rrn = self.rrn();
        if history.last().map(|h| h.iter) != Some(self.iter) {
            history.push(HistoryPoint {
                iter: self.iter,
                rrn: final_rrn,
                elapsed_seconds: elapsed,
            });
        }
        Ok(ConvergenceReport {
            method: self.cfg.method,
            theta: self.cfg.theta,
            alpha: self.cfg.alpha,
            beta: self.cfg.beta,
            seed: self.cfg.rng.seed,
            history,
            final_iter: self.iter,
            final_rrn,
            final_rrn_recomputed: self.recomputed_rrn()?,
            converged,
            x_final: self.states[0].x.clone(),
            error_to_oracle: None,
            max_drift: self.max_drift,
            elapsed_seconds: elapsed,
            instrumentation: self.instrumentation.clone(),
        })
    }
}

fn measure_of(kind: ResidualMeasure, norms_sq: impl Iterator<Item = f64>) -> f64 {
    match kind {
        ResidualMeasure::Frobenius => norms_sq.map(f64::sqrt).sum(),
        ResidualMeasure::Squared => norms_sq.sum(),
    }
}

/// Solves `A X B = C` from `X⁽⁰⁾ = 0`.
pub fn solve(instance: &ProblemInstance, config: &SolverConfig) -> Result<ConvergenceReport> {
    let (_, n, _) = instance.dims();
    solve_from(instance, Mat::zeros(n, n), config)
}

/// Solves `A X B = C` from the given initial iterate. When the instance
/// carries a reference solution, the relative error of the final iterate is
/// recorded.
pub fn solve_from(
    instance: &ProblemInstance,
    x0: Mat,
    config: &SolverConfig,
) -> Result<ConvergenceReport> {
    instance.validate()?;
    let mut solver = Solver::with_initial(
        &instance.a,
        &instance.b,
        vec![&instance.c],
        vec![x0],
        config.clone(),
    )?;
    let mut report = solver.run()?;
    if let Some(xs) = &instance.x_star {
        let denom = xs.frob_norm();
        let err = report.x_final.sub(xs)?.frob_norm();
        report.error_to_oracle = Some(if denom > 0.0 { err / denom } else { err });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::gen_dense;
    use crate::rng::RngSpec;

    fn identity_instance() -> ProblemInstance {
        let i2 = Mat::identity(2);
        let c = Mat::from_diag(&[2.0, 3.0]);
        ProblemInstance::new(i2.clone(), i2, c.clone(), Some(c), "identity").unwrap()
    }

    #[test]
    fn me_step_identity_example() {
        let inst = identity_instance();
        let mut s = Solver::new(
            &inst.a,
            &inst.b,
            vec![&inst.c],
            SolverConfig::new(Method::MeRgrk),
        )
        .unwrap();
        s.me_rgrk_step((0, 0)).unwrap();
        assert_eq!(s.iterate(0), &Mat::from_rows(&[&[2., 0.], &[0., 0.]]));
        // the satisfied pair is now a fixed point
        let before = s.iterate(0).clone();
        s.me_rgrk_step((0, 0)).unwrap();
        assert_eq!(s.iterate(0), &before);
    }

    #[test]
    fn pm_step_identity_example() {
        let inst = identity_instance();
        let cfg = SolverConfig::new(Method::PmRgrk);
        let mut s = Solver::new(&inst.a, &inst.b, vec![&inst.c], cfg).unwrap();
        s.pm_rgrk_step((0, 0), 0.9, 0.3).unwrap();
        let x = s.iterate(0);
        assert!((x[(0, 0)] - 1.8).abs() < 1e-15);
        assert_eq!(x.nnz(), 1);
    }

    #[test]
    fn nm_step_identity_example() {
        let inst = identity_instance();
        let mut s = Solver::new(
            &inst.a,
            &inst.b,
            vec![&inst.c],
            SolverConfig::new(Method::NmRgrk),
        )
        .unwrap();
        s.nm_rgrk_step((0, 0), 0.8, 0.5).unwrap();
        let y = s.state(0).y.as_ref().unwrap();
        assert!((y[(0, 0)] - 1.6).abs() < 1e-15);
        assert!((s.iterate(0)[(0, 0)] - 2.4).abs() < 1e-15);
        assert_eq!(s.iterate(0).nnz(), 1);
    }

    #[test]
    fn wrong_method_step_rejected() {
        let inst = identity_instance();
        let mut s = Solver::new(
            &inst.a,
            &inst.b,
            vec![&inst.c],
            SolverConfig::new(Method::MeRgrk),
        )
        .unwrap();
        assert!(s.pm_rgrk_step((0, 0), 0.9, 0.3).is_err());
    }

    #[test]
    fn projection_holds_after_me_step() {
        let inst = gen_dense(4, 2, 3, RngSpec::problem(5)).unwrap();
        let mut s = Solver::new(
            &inst.a,
            &inst.b,
            vec![&inst.c],
            SolverConfig::new(Method::MeRgrk),
        )
        .unwrap();
        for _ in 0..5 {
            let (i, j) = s.advance().unwrap();
            let fitted =
                crate::linalg::dot(&s.iterate(0).matvec(&inst.b.col(j)).unwrap(), inst.a.row(i));
            let target = inst.c[(i, j)];
            assert!((fitted - target).abs() <= 1e-12 * target.abs() + 1e-14);
        }
    }

    #[test]
    fn maintained_residual_tracks_recompute() {
        let inst = gen_dense(20, 5, 10, RngSpec::problem(2)).unwrap();
        let c_norm = inst.c.frob_norm();
        for method in Method::ALL {
            let mut cfg = SolverConfig::new(method);
            cfg.refresh_period = 1_000_000;
            let mut s = Solver::new(&inst.a, &inst.b, vec![&inst.c], cfg).unwrap();
            s.advance().unwrap();
            let fresh = residual(&inst.a, s.iterate(0), &inst.b, &inst.c).unwrap();
            let drift = s.state(0).r.sub(&fresh).unwrap().frob_norm();
            assert!(drift <= 1e-13 * c_norm, "{method}: {drift}");
        }
    }

    #[test]
    fn gram_and_matvec_paths_agree() {
        let inst = gen_dense(12, 4, 6, RngSpec::problem(8)).unwrap();
        let run = |budget| {
            let mut cfg = SolverConfig::new(Method::PmRgrk).with_seed(4);
            cfg.gram_budget_bytes = budget;
            let mut s = Solver::new(&inst.a, &inst.b, vec![&inst.c], cfg).unwrap();
            for _ in 0..50 {
                s.advance().unwrap();
            }
            s.iterate(0).clone()
        };
        let with = run(usize::MAX);
        let without = run(0);
        assert!(with.sub(&without).unwrap().frob_norm() <= 1e-10 * with.frob_norm());
    }

    #[test]
    fn starting_at_solution_converges_immediately() {
        let inst = gen_dense(8, 3, 5, RngSpec::problem(1)).unwrap();
        let xs = inst.x_star.clone().unwrap();
        let rep = solve_from(&inst, xs, &SolverConfig::new(Method::NmRgrk)).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.final_iter, 0);
    }

    #[test]
    fn identity_system_converges_exactly() {
        let inst = identity_instance();
        let cfg = SolverConfig::new(Method::MeRgrk).with_theta(1.0);
        let rep = solve(&inst, &cfg).unwrap();
        // each step zeroes one of the two nonzero residual entries
        assert!(rep.converged);
        assert_eq!(rep.final_iter, 2);
        assert_eq!(rep.x_final, inst.c);
    }

    #[test]
    fn zero_tolerance_exhausts_iterations() {
        let inst = gen_dense(20, 5, 10, RngSpec::problem(3)).unwrap();
        let cfg = SolverConfig::new(Method::MeRgrk)
            .with_tol(0.0)
            .with_max_iters(200);
        let rep = solve(&inst, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.final_iter, 200);
    }

    #[test]
    fn history_is_strided_and_increasing() {
        let inst = gen_dense(20, 5, 10, RngSpec::problem(3)).unwrap();
        let rep = solve(&inst, &SolverConfig::new(Method::PmRgrk)).unwrap();
        assert!(rep.history.windows(2).all(|w| w[0].iter < w[1].iter));
        assert_eq!(rep.history[0].iter, 0);
        assert_eq!(rep.history[0].rrn, 1.0);
        assert_eq!(rep.history.last().unwrap().iter, rep.final_iter);
    }

    #[test]
    fn multi_rhs_shares_pairs() {
        let inst = gen_dense(10, 3, 6, RngSpec::problem(6)).unwrap();
        let c2 = inst.c.scaled(-2.0);
        let cfg = SolverConfig::new(Method::NmRgrk).with_tol(1e-8);
        let mut s = Solver::new(&inst.a, &inst.b, vec![&inst.c, &c2], cfg).unwrap();
        let rep = s.run().unwrap();
        assert!(rep.converged);
        let x1 = s.iterate(0);
        let x2 = s.iterate(1);
        // the second system is the first scaled, and shares every pair
        assert!(x2.sub(&x1.scaled(-2.0)).unwrap().frob_norm() <= 1e-12 * x2.frob_norm());
    }
}
