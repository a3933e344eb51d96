//! Maximum-likelihood fitting of the crossed random-effects model.
//!
//! Two likelihood routes are provided:
//!
//! * `Crossed`: for fully crossed tables (every worker rates every item
//!   under both conditions). With `u = (y+ + y-)/2` and `v = y+ - y-` per
//!   worker/item cell the likelihood splits into two independent balanced
//!   two-way crossed models (unit Jacobian), whose covariance matrices have
//!   four known eigenvalues. One likelihood evaluation is then `O(1)` given
//!   the ANOVA sums of squares.
//! * `Dense`: the general marginal covariance `V` is formed explicitly and
//!   factored by Cholesky, costing `O(N^3)` per evaluation. Used for
//!   incomplete tables.
//!
//! Both maximize over the five log-variances with Nelder–Mead; variances
//! are floored at `e^-30` and reported as exactly 0 when they end at the
//! floor.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::Serialize;

use super::{Condition, LikertParams, RatingsTable};
use crate::linalg::{cholesky_in_place, cholesky_log_det, cholesky_solve};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::{Error, Result};

const LOG_VAR_FLOOR: f64 = -30.0;
const LOG_VAR_CEIL: f64 = 10.0;
const DENSE_MAX_OBS: usize = 20_000;
const JITTER: f64 = 1e-10;

/// Standard deviations of the random effects and residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceComponents {
    pub sigma_w0: f64,
    pub sigma_w1: f64,
    pub sigma_i0: f64,
    pub sigma_i1: f64,
    pub sigma_e: f64,
}

impl VarianceComponents {
    /// Variances in the order w0, w1, i0, i1, e.
    pub fn variances(&self) -> [f64; 5] {
        [
            self.sigma_w0 * self.sigma_w0,
            self.sigma_w1 * self.sigma_w1,
            self.sigma_i0 * self.sigma_i0,
            self.sigma_i1 * self.sigma_i1,
            self.sigma_e * self.sigma_e,
        ]
    }

    pub fn from_variances(v: [f64; 5]) -> Self {
        let s = |x: f64| libm::sqrt(x.max(0.0));
        Self {
            sigma_w0: s(v[0]),
            sigma_w1: s(v[1]),
            sigma_i0: s(v[2]),
            sigma_i1: s(v[3]),
            sigma_e: s(v[4]),
        }
    }

    pub fn of(params: &LikertParams) -> Self {
        Self {
            sigma_w0: params.sigma_w0,
            sigma_w1: params.sigma_w1,
            sigma_i0: params.sigma_i0,
            sigma_i1: params.sigma_i1,
            sigma_e: params.sigma_e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Crossed,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmmFit {
    pub beta0: f64,
    pub beta1: f64,
    pub se_beta0: f64,
    pub se_beta1: f64,
    pub components: VarianceComponents,
    /// `beta1 / se_beta1`.
    pub t_beta1: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub method: FitMethod,
    pub evaluations: usize,
    pub warnings: Vec<String>,
}

fn to_var(theta: f64) -> f64 {
    libm::exp(theta.clamp(LOG_VAR_FLOOR, LOG_VAR_CEIL))
}

fn snap_var(theta: f64) -> f64 {
    if theta <= LOG_VAR_FLOOR + 0.5 {
        0.0
    } else {
        to_var(theta)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        num.signum() * f64::INFINITY
    }
}

fn check_design(table: &RatingsTable) -> Result<()> {
    if table.workers().len() < 2 || table.items().len() < 2 {
        return Err(Error::param("ratings", "need at least 2 workers and 2 items"));
    }
    let has = |c| table.rows().iter().any(|r| r.condition == c);
    if !has(Condition::Baseline) || !has(Condition::Treatment) {
        return Err(Error::param("ratings", "both conditions must be present"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Balanced crossed route

/// ANOVA summary of one `W x I` grid.
#[derive(Debug, Clone, Copy)]
struct Part {
    w: f64,
    i: f64,
    mean: f64,
    ssw: f64,
    ssi: f64,
    sse: f64,
}

impl Part {
    fn from_grid(grid: &[f64], w: usize, i: usize) -> Self {
        let mut row = vec![0.0; w];
        let mut col = vec![0.0; i];
        for a in 0..w {
            for b in 0..i {
                let y = grid[a * i + b];
                row[a] += y;
                col[b] += y;
            }
        }
        for r in row.iter_mut() {
            *r /= i as f64;
        }
        for c in col.iter_mut() {
            *c /= w as f64;
        }
        let mean = row.iter().sum::<f64>() / w as f64;
        let ssw = i as f64 * row.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>();
        let ssi = w as f64 * col.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>();
        let mut sse = 0.0;
        for a in 0..w {
            for b in 0..i {
                let r = grid[a * i + b] - row[a] - col[b] + mean;
                sse += r * r;
            }
        }
        Self {
            w: w as f64,
            i: i as f64,
            mean,
            ssw,
            ssi,
            sse,
        }
    }

    fn n(&self) -> f64 {
        self.w * self.i
    }

    /// Eigenvalues of the grid covariance: grand, worker, item, residual.
    fn lambdas(&self, a: f64, b: f64, e: f64) -> [f64; 4] {
        [e + self.i * a + self.w * b, e + self.i * a, e + self.w * b, e]
    }

    /// `-2 log L` without the `2π` constant, at mean parameter `m`.
    fn neg2ll(&self, a: f64, b: f64, e: f64, m: f64) -> f64 {
        let [l0, lw, li, le] = self.lambdas(a, b, e);
        let (w1, i1) = (self.w - 1.0, self.i - 1.0);
        let d = self.mean - m;
        libm::log(l0)
            + w1 * libm::log(lw)
            + i1 * libm::log(li)
            + w1 * i1 * libm::log(le)
            + self.n() * d * d / l0
            + self.ssw / lw
            + self.ssi / li
            + self.sse / le
    }

    /// Method-of-moments (ANOVA) estimates of (a, b, e).
    fn moments(&self) -> (f64, f64, f64) {
        let (w1, i1) = (self.w - 1.0, self.i - 1.0);
        let mse = self.sse / (w1 * i1);
        let a = (self.ssw / w1 - mse) / self.i;
        let b = (self.ssi / i1 - mse) / self.w;
        (a, b, mse)
    }
}

struct Crossed {
    u: Part,
    v: Part,
}

impl Crossed {
    fn from_table(table: &RatingsTable) -> Option<Self> {
        let workers = table.workers();
        let items = table.items();
        let (w, i) = (workers.len(), items.len());
        if table.len() != 2 * w * i {
            return None;
        }
        let wi: BTreeMap<u32, usize> = workers.iter().enumerate().map(|(k, v)| (*v, k)).collect();
        let ii: BTreeMap<u32, usize> = items.iter().enumerate().map(|(k, v)| (*v, k)).collect();
        let mut plus = vec![f64::NAN; w * i];
        let mut minus = vec![f64::NAN; w * i];
        for r in table.rows() {
            let cell = wi[&r.worker] * i + ii[&r.item];
            match r.condition {
                Condition::Treatment => plus[cell] = r.rating,
                Condition::Baseline => minus[cell] = r.rating,
            }
        }
        if plus.iter().chain(&minus).any(|v| v.is_nan()) {
            return None;
        }
        let u: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| 0.5 * (p + m)).collect();
        let v: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| p - m).collect();
        Some(Self {
            u: Part::from_grid(&u, w, i),
            v: Part::from_grid(&v, w, i),
        })
    }

    fn n_obs(&self) -> f64 {
        2.0 * self.u.n()
    }

    /// `-2 log L` at given fixed effects and variances (w0, w1, i0, i1, e).
    fn neg2ll(&self, vars: [f64; 5], beta0: f64, beta1: f64) -> f64 {
        self.n_obs() * libm::log(2.0 * PI)
            + self.u.neg2ll(vars[0], vars[2], 0.5 * vars[4], beta0)
            + self.v.neg2ll(vars[1], vars[3], 2.0 * vars[4], beta1)
    }

    fn profiled(&self, vars: [f64; 5]) -> f64 {
        self.neg2ll(vars, self.u.mean, self.v.mean)
    }

    fn start(&self) -> [f64; 5] {
        let (a0, b0, eu) = self.u.moments();
        let (a1, b1, ev) = self.v.moments();
        let e = 0.5 * (2.0 * eu + 0.5 * ev);
        let floor = (1e-4 * e).max(libm::exp(LOG_VAR_FLOOR + 1.0));
        [a0.max(floor), a1.max(floor), b0.max(floor), b1.max(floor), e.max(floor)]
    }
}

fn optimize<F: FnMut(&[f64]) -> f64>(mut f: F, start: [f64; 5], max_evals: usize) -> (Vec<f64>, f64, bool, usize) {
    let opts = NelderMeadOptions {
        max_evals,
        f_tol: 1e-11,
        x_tol: 1e-6,
        initial_step: 0.7,
    };
    let mut x: Vec<f64> = start.iter().map(|v| libm::log(*v).clamp(LOG_VAR_FLOOR, LOG_VAR_CEIL)).collect();
    let mut best = f64::INFINITY;
    let mut evals = 0;
    let mut converged = false;
    // Restart from the optimum until a fresh simplex no longer improves it.
    for _ in 0..6 {
        let m = nelder_mead(&mut f, &x, opts);
        evals += m.evals;
        converged = m.converged;
        let improved = best - m.value;
        x = m.x;
        best = m.value;
        if !(improved > 1e-9) {
            break;
        }
    }
    for t in x.iter_mut() {
        *t = t.clamp(LOG_VAR_FLOOR, LOG_VAR_CEIL);
    }
    (x, best, converged, evals)
}

fn fit_crossed(c: &Crossed) -> LmmFit {
    let obj = |t: &[f64]| c.profiled([to_var(t[0]), to_var(t[1]), to_var(t[2]), to_var(t[3]), to_var(t[4])]);
    let (theta, value, converged, evals) = optimize(obj, c.start(), 20_000);
    let vars = [
        snap_var(theta[0]),
        snap_var(theta[1]),
        snap_var(theta[2]),
        snap_var(theta[3]),
        snap_var(theta[4]),
    ];
    let n = c.u.n();
    let l0u = c.u.lambdas(vars[0], vars[2], 0.5 * vars[4])[0];
    let l0v = c.v.lambdas(vars[1], vars[3], 2.0 * vars[4])[0];
    let se_beta0 = libm::sqrt(l0u / n);
    let se_beta1 = libm::sqrt(l0v / n);
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(String::from("optimizer reached its evaluation limit"));
    }
    LmmFit {
        beta0: c.u.mean,
        beta1: c.v.mean,
        se_beta0,
        se_beta1,
        components: VarianceComponents::from_variances(vars),
        t_beta1: ratio(c.v.mean, se_beta1),
        log_likelihood: -0.5 * value,
        converged,
        method: FitMethod::Crossed,
        evaluations: evals,
        warnings,
    }
}

// ---------------------------------------------------------------------------
// Dense route

struct Dense {
    y: Vec<f64>,
    x: Vec<f64>,
    w: Vec<usize>,
    it: Vec<usize>,
}

struct DenseEval {
    beta: [f64; 2],
    cov: [[f64; 2]; 2],
    neg2ll: f64,
    jittered: bool,
}

impl Dense {
    fn from_table(table: &RatingsTable) -> Self {
        let wi: BTreeMap<u32, usize> = table.workers().iter().enumerate().map(|(k, v)| (*v, k)).collect();
        let ii: BTreeMap<u32, usize> = table.items().iter().enumerate().map(|(k, v)| (*v, k)).collect();
        let rows = table.rows();
        Self {
            y: rows.iter().map(|r| r.rating).collect(),
            x: rows.iter().map(|r| r.condition.x()).collect(),
            w: rows.iter().map(|r| wi[&r.worker]).collect(),
            it: rows.iter().map(|r| ii[&r.item]).collect(),
        }
    }

    fn covariance(&self, v: [f64; 5]) -> Vec<f64> {
        let n = self.y.len();
        let mut m = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..=j {
                let xx = self.x[j] * self.x[k];
                let mut c = 0.0;
                if self.w[j] == self.w[k] {
                    c += v[0] + v[1] * xx;
                }
                if self.it[j] == self.it[k] {
                    c += v[2] + v[3] * xx;
                }
                if j == k {
                    c += v[4];
                }
                m[j * n + k] = c;
                m[k * n + j] = c;
            }
        }
        m
    }

    /// GLS fixed effects and `-2 log L`; with `beta` given, the likelihood
    /// is evaluated there instead of at the GLS estimate.
    fn eval(&self, vars: [f64; 5], beta: Option<[f64; 2]>) -> Option<DenseEval> {
        let n = self.y.len();
        let mut l = self.covariance(vars);
        let mut jittered = false;
        if cholesky_in_place(&mut l, n).is_err() {
            l = self.covariance(vars);
            for j in 0..n {
                l[j * n + j] += JITTER;
            }
            cholesky_in_place(&mut l, n).ok()?;
            jittered = true;
        }
        let mut vi1 = vec![1.0; n];
        let mut vix = self.x.clone();
        let mut viy = self.y.clone();
        cholesky_solve(&l, n, &mut vi1);
        cholesky_solve(&l, n, &mut vix);
        cholesky_solve(&l, n, &mut viy);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let a00 = vi1.iter().sum::<f64>();
        let a01 = dot(&self.x, &vi1);
        let a11 = dot(&self.x, &vix);
        let b0 = viy.iter().sum::<f64>();
        let b1 = dot(&self.x, &viy);
        let yy = dot(&self.y, &viy);
        let det = a00 * a11 - a01 * a01;
        if !(det > 0.0) {
            return None;
        }
        let cov = [[a11 / det, -a01 / det], [-a01 / det, a00 / det]];
        let gls = [cov[0][0] * b0 + cov[0][1] * b1, cov[1][0] * b0 + cov[1][1] * b1];
        let beta = beta.unwrap_or(gls);
        // (y - Xβ)' V^-1 (y - Xβ)
        let quad = yy - 2.0 * (beta[0] * b0 + beta[1] * b1)
            + beta[0] * beta[0] * a00
            + 2.0 * beta[0] * beta[1] * a01
            + beta[1] * beta[1] * a11;
        let neg2ll = n as f64 * libm::log(2.0 * PI) + cholesky_log_det(&l, n) + quad;
        Some(DenseEval {
            beta,
            cov,
            neg2ll,
            jittered,
        })
    }

    fn start(&self) -> [f64; 5] {
        let n = self.y.len() as f64;
        let m = self.y.iter().sum::<f64>() / n;
        let s2 = (self.y.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / n).max(1e-8);
        [s2 / 8.0, s2 / 8.0, s2 / 8.0, s2 / 8.0, s2 / 2.0]
    }
}

fn fit_dense_inner(d: &Dense, start: [f64; 5]) -> Result<LmmFit> {
    if d.y.len() > DENSE_MAX_OBS {
        return Err(Error::param(
            "ratings",
            "incomplete tables are fitted with a dense likelihood limited to 20000 ratings",
        ));
    }
    let obj = |t: &[f64]| {
        let v = [to_var(t[0]), to_var(t[1]), to_var(t[2]), to_var(t[3]), to_var(t[4])];
        d.eval(v, None).map_or(f64::INFINITY, |e| e.neg2ll)
    };
    let (theta, value, converged, evals) = optimize(obj, start, 6_000);
    let vars = [
        snap_var(theta[0]),
        snap_var(theta[1]),
        snap_var(theta[2]),
        snap_var(theta[3]),
        snap_var(theta[4]),
    ];
    let mut warnings = Vec::new();
    let at_opt = [to_var(theta[0]), to_var(theta[1]), to_var(theta[2]), to_var(theta[3]), to_var(theta[4])];
    let e = d
        .eval(at_opt, None)
        .ok_or_else(|| Error::Infeasible(String::from("marginal covariance is singular at the optimum")))?;
    if e.jittered {
        warnings.push(String::from("marginal covariance was singular; added 1e-10 ridge jitter"));
    }
    if !converged {
        warnings.push(String::from("optimizer reached its evaluation limit"));
    }
    let se_beta1 = libm::sqrt(e.cov[1][1].max(0.0));
    Ok(LmmFit {
        beta0: e.beta[0],
        beta1: e.beta[1],
        se_beta0: libm::sqrt(e.cov[0][0].max(0.0)),
        se_beta1,
        components: VarianceComponents::from_variances(vars),
        t_beta1: ratio(e.beta[1], se_beta1),
        log_likelihood: -0.5 * value,
        converged,
        method: FitMethod::Dense,
        evaluations: evals,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Public API

/// ML fit of the crossed random-effects model (no intercept/slope
/// correlations). Fully crossed tables use the factorized likelihood, other
/// tables the dense one.
pub fn fit_lmm(table: &RatingsTable) -> Result<LmmFit> {
    check_design(table)?;
    match Crossed::from_table(table) {
        Some(c) => Ok(fit_crossed(&c)),
        None => fit_dense_inner(&Dense::from_table(table), Dense::from_table(table).start()),
    }
}

/// ML fit through the dense marginal covariance, regardless of design.
pub fn fit_lmm_dense(table: &RatingsTable) -> Result<LmmFit> {
    check_design(table)?;
    let d = Dense::from_table(table);
    let start = Crossed::from_table(table).map_or_else(|| d.start(), |c| c.start());
    fit_dense_inner(&d, start)
}

/// Log-likelihood of the table at given fixed effects and components.
pub fn log_likelihood(table: &RatingsTable, beta0: f64, beta1: f64, comps: &VarianceComponents) -> Result<f64> {
    check_design(table)?;
    let v = comps.variances();
    if let Some(c) = Crossed::from_table(table) {
        return Ok(-0.5 * c.neg2ll(v, beta0, beta1));
    }
    Dense::from_table(table)
        .eval(v, Some([beta0, beta1]))
        .map(|e| -0.5 * e.neg2ll)
        .ok_or_else(|| Error::Infeasible(String::from("marginal covariance is singular")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlsEstimate {
    pub beta0: f64,
    pub beta1: f64,
    pub se_beta0: f64,
    pub se_beta1: f64,
}

/// Generalized least squares fixed effects for known variance components,
/// through the dense marginal covariance.
pub fn gls_fixed_effects(table: &RatingsTable, comps: &VarianceComponents) -> Result<GlsEstimate> {
    check_design(table)?;
    if table.len() > DENSE_MAX_OBS {
        return Err(Error::param("ratings", "dense GLS limited to 20000 ratings"));
    }
    let e = Dense::from_table(table)
        .eval(comps.variances(), None)
        .ok_or_else(|| Error::Infeasible(String::from("marginal covariance is singular")))?;
    Ok(GlsEstimate {
        beta0: e.beta[0],
        beta1: e.beta[1],
        se_beta0: libm::sqrt(e.cov[0][0]),
        se_beta1: libm::sqrt(e.cov[1][1]),
    })
}
