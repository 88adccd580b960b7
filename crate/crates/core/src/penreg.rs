//! Weighted Lasso by cyclic coordinate descent, solution paths, adaptive
//! Lasso with modified-BIC tuning, and the screen-then-select estimator.
//!
//! The objective is `||y - X b||^2 + lambda * sum_j w_j |b_j|` with no 1/2
//! or 1/n factor, so the soft-threshold level for coordinate `j` is
//! `lambda * w_j / 2` and `lambda_max = 2 max_j |x_j' y| / w_j`.
//! A weight of `f64::INFINITY` excludes a column; a weight of zero leaves it
//! unpenalized.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::screen::{self, Method, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdOptions {
    /// Stop when `max_j |delta b_j| * ||x_j|| <= tol * ||y||` over a full sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for CdOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_sweeps: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdFit {
    pub coef: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
    /// Penalized objective after each sweep.
    pub objective: Vec<f64>,
}

struct Design<'a> {
    n: usize,
    p: usize,
    data: &'a [f64],
    sq_norms: Vec<f64>,
}

impl<'a> Design<'a> {
    fn new(x: &'a DMatrix<f64>) -> Self {
        let (n, p) = x.shape();
        let data = x.as_slice();
        let sq_norms = (0..p).map(|j| data[j * n..(j + 1) * n].iter().map(|v| v * v).sum()).collect();
        Self { n, p, data, sq_norms }
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn check_problem(x: &DMatrix<f64>, y: &[f64], lambda: f64, weights: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("X has {} rows, y has {}", x.nrows(), y.len())));
    }
    if weights.len() != x.ncols() {
        return Err(Error::Dimension(format!("{} weights for {} columns", weights.len(), x.ncols())));
    }
    if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(Error::Parameter("weights must be nonnegative".into()));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Parameter(format!("lambda {lambda} must be nonnegative")));
    }
    Ok(())
}

/// Active-set sweeps between attempts at a direct solve on the active set.
const DIRECT_EVERY: usize = 10;

struct Solver<'a> {
    d: Design<'a>,
    lambda: f64,
    weights: &'a [f64],
    coef: Vec<f64>,
    resid: Vec<f64>,
    y_norm: f64,
}

impl<'a> Solver<'a> {
    fn penalty(&self) -> f64 {
        self.coef
            .iter()
            .zip(self.weights)
            .filter(|(b, _)| **b != 0.0)
            .map(|(b, w)| self.lambda * w * b.abs())
            .sum()
    }

    fn objective(&self) -> f64 {
        dot(&self.resid, &self.resid) + self.penalty()
    }

    fn update(&mut self, j: usize) -> f64 {
        let w = self.weights[j];
        let nsq = self.d.sq_norms[j];
        if w.is_infinite() || nsq == 0.0 {
            return 0.0;
        }
        let old = self.coef[j];
        let col = self.d.col(j);
        let z = dot(col, &self.resid) + nsq * old;
        let new = soft_threshold(z, self.lambda * w / 2.0) / nsq;
        let delta = new - old;
        if delta != 0.0 {
            for (r, x) in self.resid.iter_mut().zip(col) {
                *r -= delta * x;
            }
            self.coef[j] = new;
        }
        delta.abs() * nsq.sqrt()
    }

    fn sweep(&mut self, idx: &[usize]) -> f64 {
        let mut max_change: f64 = 0.0;
        for &j in idx {
            max_change = max_change.max(self.update(j));
        }
        max_change
    }

    /// Feature-sign step on the active-set subproblem.
    ///
    /// Repeatedly solves the stationarity conditions on the nonzero
    /// coordinates with their signs fixed and moves to the best point on the
    /// segment towards that solution (checking every zero crossing), so the
    /// objective never increases. The step is kept only if it lowers the
    /// objective; the caller's next full sweep certifies or corrects it.
    fn direct_solve(&mut self, active: &[usize]) -> bool {
        let k = active.len();
        if k == 0 || k >= self.d.n {
            return false;
        }
        let mut y = self.resid.clone();
        for &j in active {
            let b = self.coef[j];
            for (r, v) in y.iter_mut().zip(self.d.col(j)) {
                *r += b * v;
            }
        }
        let mut g = DMatrix::zeros(k, k);
        let mut c = vec![0.0; k];
        for (a, &i) in active.iter().enumerate() {
            let ci = self.d.col(i);
            for b in 0..a {
                let v = dot(ci, self.d.col(active[b]));
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
            g[(a, a)] = self.d.sq_norms[i];
            c[a] = dot(ci, &y);
        }
        let half: Vec<f64> = active.iter().map(|&j| self.lambda * self.weights[j] / 2.0).collect();
        // Objective minus the constant y'y.
        let f = |b: &[f64]| -> f64 {
            let mut q = 0.0;
            for a in 0..k {
                if b[a] == 0.0 {
                    continue;
                }
                let gb: f64 = (0..k).filter(|&e| b[e] != 0.0).map(|e| g[(a, e)] * b[e]).sum();
                q += b[a] * gb - 2.0 * c[a] * b[a] + 2.0 * half[a] * b[a].abs();
            }
            q
        };
        let start: Vec<f64> = active.iter().map(|&j| self.coef[j]).collect();
        let f_start = f(&start);
        let mut x = start;
        let mut fx = f_start;
        for _ in 0..=k {
            let set: Vec<usize> = (0..k).filter(|&a| x[a] != 0.0).collect();
            if set.is_empty() {
                break;
            }
            let m = set.len();
            let gs = DMatrix::from_fn(m, m, |r, s| g[(set[r], set[s])]);
            let rhs = nalgebra::DVector::from_fn(m, |r, _| c[set[r]] - x[set[r]].signum() * half[set[r]]);
            let Some(chol) = gs.cholesky() else {
                break;
            };
            let z = chol.solve(&rhs);
            if z.iter().any(|v| !v.is_finite()) {
                break;
            }
            let mut target = vec![0.0; k];
            for (r, &a) in set.iter().enumerate() {
                target[a] = z[r];
            }
            let consistent = set.iter().all(|&a| target[a] != 0.0 && target[a].signum() == x[a].signum());
            let mut best = (f(&target), target.clone());
            if !consistent {
                for &a in &set {
                    if target[a].signum() != x[a].signum() {
                        let t = x[a] / (x[a] - target[a]);
                        if t > 0.0 && t < 1.0 {
                            let mut p: Vec<f64> = x.iter().zip(&target).map(|(u, v)| u + t * (v - u)).collect();
                            p[a] = 0.0;
                            let fp = f(&p);
                            if fp < best.0 {
                                best = (fp, p);
                            }
                        }
                    }
                }
            }
            if !(best.0 < fx) {
                break;
            }
            fx = best.0;
            x = best.1;
            if consistent {
                break;
            }
        }
        if !(fx < f_start) {
            return false;
        }
        let mut resid = y;
        for (&j, &b) in active.iter().zip(&x) {
            self.coef[j] = b;
            if b != 0.0 {
                for (r, v) in resid.iter_mut().zip(self.d.col(j)) {
                    *r -= b * v;
                }
            }
        }
        self.resid = resid;
        true
    }

    fn run(&mut self, opts: CdOptions) -> CdFit {
        let all: Vec<usize> = (0..self.d.p).collect();
        let thresh = opts.tol * self.y_norm.max(f64::MIN_POSITIVE);
        let mut objective = Vec::new();
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < opts.max_sweeps {
            let change = self.sweep(&all);
            sweeps += 1;
            objective.push(self.objective());
            if change <= thresh {
                converged = true;
                break;
            }
            let active: Vec<usize> = all.iter().copied().filter(|&j| self.coef[j] != 0.0).collect();
            let mut inner = 0;
            while sweeps < opts.max_sweeps {
                let c = self.sweep(&active);
                sweeps += 1;
                inner += 1;
                objective.push(self.objective());
                if c <= thresh {
                    break;
                }
                if inner % DIRECT_EVERY == 0 && self.direct_solve(&active) {
                    objective.push(self.objective());
                    break;
                }
            }
        }
        CdFit { coef: self.coef.clone(), converged, sweeps, objective }
    }
}

fn solve_from(
    x: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    weights: &[f64],
    opts: CdOptions,
    init: Option<&[f64]>,
) -> Result<CdFit> {
    check_problem(x, y, lambda, weights)?;
    let d = Design::new(x);
    let mut coef = init.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; d.p]);
    for (c, w) in coef.iter_mut().zip(weights) {
        if w.is_infinite() {
            *c = 0.0;
        }
    }
    let mut resid = y.to_vec();
    for (j, &b) in coef.iter().enumerate() {
        if b != 0.0 {
            for (r, v) in resid.iter_mut().zip(d.col(j)) {
                *r -= b * v;
            }
        }
    }
    let y_norm = dot(y, y).sqrt();
    let mut s = Solver { d, lambda, weights, coef, resid, y_norm };
    Ok(s.run(opts))
}

/// Weighted Lasso at a single `lambda`, cold start.
pub fn lasso_cd(x: &DMatrix<f64>, y: &[f64], lambda: f64, weights: &[f64], opts: CdOptions) -> Result<CdFit> {
    solve_from(x, y, lambda, weights, opts, None)
}

/// Weighted Lasso at a single `lambda`, started from `init`.
pub fn lasso_cd_warm(
    x: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    weights: &[f64],
    opts: CdOptions,
    init: &[f64],
) -> Result<CdFit> {
    if init.len() != x.ncols() {
        return Err(Error::Dimension("warm start length".into()));
    }
    solve_from(x, y, lambda, weights, opts, Some(init))
}

/// Largest KKT violation, normalized by `||x_j|| * ||y||`.
///
/// Inactive `j` need `|x_j' r| <= lambda w_j / 2`; active `j` need
/// `x_j' r = sign(b_j) lambda w_j / 2`.
pub fn kkt_violation(x: &DMatrix<f64>, y: &[f64], coef: &[f64], lambda: f64, weights: &[f64]) -> f64 {
    let d = Design::new(x);
    let mut resid = y.to_vec();
    for (j, &b) in coef.iter().enumerate() {
        if b != 0.0 {
            for (r, v) in resid.iter_mut().zip(d.col(j)) {
                *r -= b * v;
            }
        }
    }
    let y_norm = dot(y, y).sqrt().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for j in 0..d.p {
        let w = weights[j];
        if w.is_infinite() {
            if coef[j] != 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        let norm = d.sq_norms[j].sqrt();
        if norm == 0.0 {
            continue;
        }
        let g = dot(d.col(j), &resid);
        let half = lambda * w / 2.0;
        let v = if coef[j] != 0.0 { (g - coef[j].signum() * half).abs() } else { (g.abs() - half).max(0.0) };
        worst = worst.max(v / (norm * y_norm));
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathOptions {
    pub grid_size: usize,
    /// Smallest lambda as a fraction of `lambda_max`; `None` picks 1e-3
    /// when `n < p` and 1e-4 otherwise.
    pub lambda_min_ratio: Option<f64>,
    /// Stop the path once `rss < min_rss_fraction * ||y||^2` (near-saturated fits).
    pub min_rss_fraction: f64,
    pub cd: CdOptions,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { grid_size: 100, lambda_min_ratio: None, min_rss_fraction: 1e-3, cd: CdOptions::default() }
    }
}

impl PathOptions {
    pub fn with_grid(grid_size: usize) -> Self {
        Self { grid_size, ..Self::default() }
    }
}

/// Lasso solutions over a decreasing lambda grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    pub coefs: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub active_sets: Vec<Vec<usize>>,
    pub rss: Vec<f64>,
    pub weights: Vec<f64>,
    pub converged: Vec<bool>,
    pub n: usize,
}

impl LassoPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|c| *c)
    }
}

fn active(coef: &[f64]) -> Vec<usize> {
    coef.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
}

/// Warm-started weighted Lasso path from `lambda_max` down to
/// `lambda_max * lambda_min_ratio` on a log-spaced grid.
pub fn lasso_path(x: &DMatrix<f64>, y: &[f64], weights: &[f64], opts: PathOptions) -> Result<LassoPath> {
    check_problem(x, y, 0.0, weights)?;
    if opts.grid_size < 2 {
        return Err(Error::Parameter("grid_size must be at least 2".into()));
    }
    let (n, p) = x.shape();
    let ratio = opts.lambda_min_ratio.unwrap_or(if n < p { 1e-3 } else { 1e-4 });
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Parameter(format!("lambda_min_ratio {ratio} must lie in (0, 1)")));
    }

    // Unpenalized columns are fitted first; lambda_max is computed on what they leave.
    let penalized: Vec<f64> = weights.iter().map(|&w| if w > 0.0 { f64::INFINITY } else { 0.0 }).collect();
    let base = if weights.iter().any(|&w| w == 0.0) {
        lasso_cd(x, y, 0.0, &penalized, opts.cd)?.coef
    } else {
        vec![0.0; p]
    };
    let d = Design::new(x);
    let mut resid = y.to_vec();
    for (j, &b) in base.iter().enumerate() {
        if b != 0.0 {
            for (r, v) in resid.iter_mut().zip(d.col(j)) {
                *r -= b * v;
            }
        }
    }
    let mut lambda_max: f64 = 0.0;
    for j in 0..p {
        let w = weights[j];
        if w > 0.0 && w.is_finite() {
            lambda_max = lambda_max.max(2.0 * dot(d.col(j), &resid).abs() / w);
        }
    }
    if !(lambda_max > 0.0) {
        lambda_max = 1.0;
    }

    let k = opts.grid_size;
    let tss = dot(y, y);
    let mut path = LassoPath {
        lambdas: Vec::with_capacity(k),
        coefs: Vec::with_capacity(k),
        intercepts: Vec::with_capacity(k),
        active_sets: Vec::with_capacity(k),
        rss: Vec::with_capacity(k),
        weights: weights.to_vec(),
        converged: Vec::with_capacity(k),
        n,
    };
    let mut warm = base;
    for i in 0..k {
        let lambda = lambda_max * ratio.powf(i as f64 / (k - 1) as f64);
        let fit = if i == 0 {
            CdFit { coef: warm.clone(), converged: true, sweeps: 0, objective: Vec::new() }
        } else {
            lasso_cd_warm(x, y, lambda, weights, opts.cd, &warm)?
        };
        let rss = {
            let mut r = y.to_vec();
            for (j, &b) in fit.coef.iter().enumerate() {
                if b != 0.0 {
                    for (rv, v) in r.iter_mut().zip(d.col(j)) {
                        *rv -= b * v;
                    }
                }
            }
            dot(&r, &r)
        };
        path.lambdas.push(lambda);
        path.active_sets.push(active(&fit.coef));
        path.coefs.push(fit.coef.clone());
        path.intercepts.push(0.0);
        path.rss.push(rss);
        path.converged.push(fit.converged);
        warm = fit.coef;
        if rss < opts.min_rss_fraction * tss {
            break;
        }
    }
    Ok(path)
}

/// Column means and sample standard deviations (divisor n).
#[derive(Debug, Clone, PartialEq)]
pub struct Centering {
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
    pub y_mean: f64,
}

/// Center `x` and `y`; returns the centered copies and the shifts.
pub fn center(x: &DMatrix<f64>, y: &[f64]) -> (DMatrix<f64>, Vec<f64>, Centering) {
    let (n, p) = x.shape();
    let nf = n as f64;
    let mut xc = x.clone();
    let mut x_mean = Vec::with_capacity(p);
    let mut x_sd = Vec::with_capacity(p);
    for j in 0..p {
        let mut col = xc.column_mut(j);
        let m = col.sum() / nf;
        col.add_scalar_mut(-m);
        x_mean.push(m);
        x_sd.push((col.norm_squared() / nf).sqrt());
    }
    let y_mean = y.iter().sum::<f64>() / nf;
    let yc = y.iter().map(|v| v - y_mean).collect();
    (xc, yc, Centering { x_mean, x_sd, y_mean })
}

fn restore_intercepts(path: &mut LassoPath, c: &Centering) {
    for (b, icpt) in path.coefs.iter().zip(path.intercepts.iter_mut()) {
        *icpt = c.y_mean - b.iter().zip(&c.x_mean).map(|(b, m)| b * m).sum::<f64>();
    }
}

/// Lasso on standardized columns with unit penalty, reported on the
/// original scale (equivalently: weights equal to the column sds).
pub fn standardized_lasso_path(x: &DMatrix<f64>, y: &[f64], opts: PathOptions) -> Result<LassoPath> {
    let (xc, yc, c) = center(x, y);
    let weights: Vec<f64> = c.x_sd.iter().map(|&s| if s > 0.0 { s } else { f64::INFINITY }).collect();
    let mut path = lasso_path(&xc, &yc, &weights, opts)?;
    restore_intercepts(&mut path, &c);
    Ok(path)
}

/// Adaptive Lasso path with weights `1 / |initial_j|`; columns whose
/// initial coefficient is zero are excluded.
pub fn adaptive_lasso(x: &DMatrix<f64>, y: &[f64], initial: &[f64], opts: PathOptions) -> Result<LassoPath> {
    if initial.len() != x.ncols() {
        return Err(Error::Dimension(format!("{} initial coefficients for {} columns", initial.len(), x.ncols())));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("initial coefficients must be finite".into()));
    }
    if initial.iter().all(|v| *v == 0.0) {
        return Err(Error::NoAdmissibleColumns);
    }
    let weights: Vec<f64> = initial.iter().map(|b| if *b == 0.0 { f64::INFINITY } else { 1.0 / b.abs() }).collect();
    let (xc, yc, c) = center(x, y);
    let mut path = lasso_path(&xc, &yc, &weights, opts)?;
    restore_intercepts(&mut path, &c);
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MbicOptions {
    /// Multiplier on the `log(log p)` factor.
    pub scale: f64,
}

impl Default for MbicOptions {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

/// `log(RSS/n) + |A| (log n / n) c log(log p)`, with `p` floored at 3 so
/// the dimension factor stays positive.
pub fn mbic(rss: f64, size: usize, n: usize, p: usize, opts: MbicOptions) -> f64 {
    let nf = n as f64;
    let cn = opts.scale * (p.max(3) as f64).ln().ln();
    (rss.max(f64::MIN_POSITIVE) / nf).ln() + size as f64 * nf.ln() / nf * cn
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbicChoice {
    pub index: usize,
    pub lambda: f64,
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub criterion: Vec<f64>,
}

/// Grid point minimizing the modified BIC; ties go to the larger lambda.
pub fn mbic_select(path: &LassoPath, n: usize, p: usize, opts: MbicOptions) -> Result<MbicChoice> {
    if path.is_empty() {
        return Err(Error::Parameter("empty path".into()));
    }
    let criterion: Vec<f64> = path
        .rss
        .iter()
        .zip(&path.active_sets)
        .map(|(rss, a)| mbic(*rss, a.len(), n, p, opts))
        .collect();
    let mut best = 0;
    for (i, c) in criterion.iter().enumerate() {
        if *c < criterion[best] {
            best = i;
        }
    }
    Ok(MbicChoice {
        index: best,
        lambda: path.lambdas[best],
        coef: path.coefs[best].clone(),
        intercept: path.intercepts[best],
        criterion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoStageOptions {
    pub path: PathOptions,
    pub mbic: MbicOptions,
    /// Standardize columns before screening.
    pub standardize: bool,
    /// Run the adaptive step; when false the MBIC-tuned Lasso is final.
    pub adaptive: bool,
}

impl Default for TwoStageOptions {
    fn default() -> Self {
        Self { path: PathOptions::default(), mbic: MbicOptions::default(), standardize: true, adaptive: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageResult {
    /// Columns kept by the screen, ascending.
    pub screened: Vec<usize>,
    /// Length-p coefficients; zero outside `screened`.
    pub coefs: Vec<f64>,
    pub intercept: f64,
    /// Nonzero final coefficients as `(column, sign)`.
    pub selected_support: Vec<(usize, i8)>,
    /// Stage-two path over the screened columns (`screened[k]` is column k).
    pub path: LassoPath,
    /// Initial Lasso estimate over the screened columns.
    pub initial: Vec<f64>,
    /// True when the initial estimate was all zeros.
    pub empty_model: bool,
    pub screen_warnings: Vec<screen::ScreenWarning>,
}

impl TwoStageResult {
    /// Active sets of the stage-two path in original column indices.
    pub fn path_supports(&self) -> Vec<Vec<usize>> {
        self.path
            .active_sets
            .iter()
            .map(|a| a.iter().map(|&k| self.screened[k]).collect())
            .collect()
    }

    /// Some grid point selects exactly `support`.
    pub fn path_hits(&self, support: &[usize]) -> bool {
        let mut want = support.to_vec();
        want.sort_unstable();
        self.path_supports().iter().any(|s| *s == want)
    }
}

fn submatrix(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, k| x[(i, cols[k])])
}

/// Lasso (MBIC) initial estimate followed by the adaptive Lasso path over
/// the given columns; the final coefficients are the MBIC choice on the
/// adaptive path.
fn select_on(x: &DMatrix<f64>, y: &[f64], cols: Vec<usize>, opts: TwoStageOptions, warnings: Vec<screen::ScreenWarning>) -> Result<TwoStageResult> {
    let (n, p) = x.shape();
    let sub = submatrix(x, &cols);
    let d = cols.len();
    let init_path = standardized_lasso_path(&sub, y, opts.path)?;
    let init = mbic_select(&init_path, n, d, opts.mbic)?;
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let empty = |path: LassoPath, initial: Vec<f64>| TwoStageResult {
        screened: cols.clone(),
        coefs: vec![0.0; p],
        intercept: y_mean,
        selected_support: Vec::new(),
        path,
        initial,
        empty_model: true,
        screen_warnings: warnings.clone(),
    };
    if init.coef.iter().all(|b| *b == 0.0) {
        return Ok(empty(init_path, init.coef));
    }
    let (path, choice) = if opts.adaptive {
        let path = adaptive_lasso(&sub, y, &init.coef, opts.path)?;
        let choice = mbic_select(&path, n, d, opts.mbic)?;
        (path, choice)
    } else {
        (init_path, init.clone())
    };
    let mut coefs = vec![0.0; p];
    for (k, &j) in cols.iter().enumerate() {
        coefs[j] = choice.coef[k];
    }
    let selected_support = coefs
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, b)| (j, if *b > 0.0 { 1 } else { -1 }))
        .collect();
    Ok(TwoStageResult {
        screened: cols,
        coefs,
        intercept: choice.intercept,
        selected_support,
        path,
        initial: init.coef,
        empty_model: false,
        screen_warnings: warnings,
    })
}

/// Screen to the top `d_n` columns, then adaptive Lasso on the survivors.
pub fn two_stage(x: &DMatrix<f64>, y: &[f64], method: Method, d_n: usize, opts: TwoStageOptions) -> Result<TwoStageResult> {
    let (n, p) = x.shape();
    if n != y.len() {
        return Err(Error::Dimension(format!("X has {n} rows, y has {}", y.len())));
    }
    if d_n == 0 || d_n > p || d_n > n.saturating_sub(1) {
        return Err(Error::Parameter(format!("d_n = {d_n} must lie in 1..=min(n-1, p) = {}", p.min(n.saturating_sub(1)))));
    }
    let sr = screen::screen(x, y, method, opts.standardize, Rule::Top { d: d_n })?;
    select_on(x, y, sr.selected, opts, sr.warnings)
}

/// Adaptive Lasso over all columns (no screening).
pub fn adaptive_pipeline(x: &DMatrix<f64>, y: &[f64], opts: TwoStageOptions) -> Result<TwoStageResult> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("X has {} rows, y has {}", x.nrows(), y.len())));
    }
    select_on(x, y, (0..x.ncols()).collect(), opts, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn randn_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut r = rng::stream(seed, 0);
        DMatrix::from_fn(n, p, |_, _| r.sample(StandardNormal))
    }

    fn randn(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 1);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    #[test]
    fn lambda_zero_is_ols() {
        let x = randn_matrix(40, 5, 1);
        let y = randn(40, 2);
        let fit = lasso_cd(&x, &y, 0.0, &[1.0; 5], CdOptions { tol: 1e-14, max_sweeps: 100_000 }).unwrap();
        assert!(fit.converged);
        let ols = x.clone().svd(true, true).solve(&nalgebra::DVector::from_vec(y), 1e-14).unwrap();
        for j in 0..5 {
            assert!((fit.coef[j] - ols[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn lambda_max_gives_zero() {
        let x = randn_matrix(30, 6, 3);
        let y = randn(30, 4);
        let w = [1.0, 2.0, 0.5, 1.0, 3.0, 1.0];
        let lmax = (0..6)
            .map(|j| 2.0 * x.column(j).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().abs() / w[j])
            .fold(0.0, f64::max);
        let fit = lasso_cd(&x, &y, lmax, &w, CdOptions::default()).unwrap();
        assert!(fit.coef.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn orthonormal_design_soft_thresholds() {
        let a = randn_matrix(20, 4, 5);
        let q = a.qr().q();
        let y = randn(20, 6);
        let w = [1.0, 0.5, 2.0, 1.0];
        let lambda = 0.8;
        let fit = lasso_cd(&q, &y, lambda, &w, CdOptions::default()).unwrap();
        for j in 0..4 {
            let z: f64 = q.column(j).iter().zip(&y).map(|(a, b)| a * b).sum();
            let expect = z.signum() * (z.abs() - lambda * w[j] / 2.0).max(0.0);
            assert!((fit.coef[j] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn objective_never_increases() {
        let x = randn_matrix(50, 30, 7);
        let y = randn(50, 8);
        let fit = lasso_cd(&x, &y, 5.0, &vec![1.0; 30], CdOptions::default()).unwrap();
        for w in fit.objective.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn excluded_columns_stay_zero() {
        let x = randn_matrix(30, 4, 9);
        let y: Vec<f64> = (0..30).map(|i| x[(i, 1)] * 3.0).collect();
        let w = [1.0, f64::INFINITY, 1.0, 1.0];
        let fit = lasso_cd(&x, &y, 0.1, &w, CdOptions::default()).unwrap();
        assert_eq!(fit.coef[1], 0.0);
        assert!(kkt_violation(&x, &y, &fit.coef, 0.1, &w) < 1e-8);
    }

    #[test]
    fn unpenalized_columns_enter_at_lambda_max() {
        let x = randn_matrix(40, 3, 10);
        let y: Vec<f64> = (0..40).map(|i| 2.0 * x[(i, 0)]).collect();
        let path = lasso_path(&x, &y, &[0.0, 1.0, 1.0], PathOptions::with_grid(10)).unwrap();
        assert!((path.coefs[0][0] - 2.0).abs() < 1e-8);
        assert!(path.active_sets[0] == vec![0]);
    }

    #[test]
    fn path_basics() {
        let x = randn_matrix(60, 15, 11);
        let mut y = randn(60, 12);
        for i in 0..60 {
            y[i] += 2.0 * x[(i, 0)] - x[(i, 3)];
        }
        let path = lasso_path(&x, &y, &vec![1.0; 15], PathOptions::with_grid(30)).unwrap();
        assert!(path.active_sets[0].is_empty());
        for w in path.rss.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-10));
        }
        for (i, lambda) in path.lambdas.iter().enumerate() {
            assert!(kkt_violation(&x, &y, &path.coefs[i], *lambda, &path.weights) < 1e-6);
            let cold = lasso_cd(&x, &y, *lambda, &path.weights, CdOptions::default()).unwrap();
            for (a, b) in cold.coef.iter().zip(&path.coefs[i]) {
                assert!((a - b).abs() < 1e-6);
            }
        }
        assert!(lasso_path(&x, &y, &vec![1.0; 15], PathOptions::with_grid(1)).is_err());
    }

    #[test]
    fn unit_initial_reduces_to_plain_lasso() {
        let x = randn_matrix(40, 6, 13);
        let y = randn(40, 14);
        let a = adaptive_lasso(&x, &y, &[1.0; 6], PathOptions::with_grid(20)).unwrap();
        let (xc, yc, _) = center(&x, &y);
        let b = lasso_path(&xc, &yc, &[1.0; 6], PathOptions::with_grid(20)).unwrap();
        assert_eq!(a.lambdas, b.lambdas);
        assert_eq!(a.coefs, b.coefs);
    }

    #[test]
    fn zero_initial_excludes_column() {
        let x = randn_matrix(40, 4, 15);
        let y: Vec<f64> = (0..40).map(|i| x[(i, 2)] + 0.5 * x[(i, 0)]).collect();
        let path = adaptive_lasso(&x, &y, &[1.0, 1.0, 0.0, 1.0], PathOptions::with_grid(25)).unwrap();
        assert!(path.coefs.iter().all(|b| b[2] == 0.0));
        assert!(matches!(adaptive_lasso(&x, &y, &[0.0; 4], PathOptions::default()), Err(Error::NoAdmissibleColumns)));
    }

    #[test]
    fn heavy_weights_drop_out_first() {
        let x = randn_matrix(80, 3, 16);
        let y: Vec<f64> = (0..80).map(|i| x[(i, 0)] + x[(i, 1)] + x[(i, 2)]).collect();
        // weights (1, 10, 10)
        let init = [1.0, 0.1, 0.1];
        let path = adaptive_lasso(&x, &y, &init, PathOptions::with_grid(40)).unwrap();
        let (xc, yc, _) = center(&x, &y);
        let mut seen_alone = false;
        for (i, lambda) in path.lambdas.iter().enumerate() {
            assert!(kkt_violation(&xc, &yc, &path.coefs[i], *lambda, &path.weights) < 1e-6);
            if path.active_sets[i] == vec![0] {
                seen_alone = true;
            }
            if path.coefs[i][1] != 0.0 || path.coefs[i][2] != 0.0 {
                assert!(path.coefs[i][0] != 0.0);
            }
        }
        assert!(seen_alone);
    }

    #[test]
    fn mbic_trivial_cases() {
        let path = LassoPath {
            lambdas: vec![2.0],
            coefs: vec![vec![0.0]],
            intercepts: vec![0.0],
            active_sets: vec![vec![]],
            rss: vec![5.0],
            weights: vec![1.0],
            converged: vec![true],
            n: 10,
        };
        assert_eq!(mbic_select(&path, 10, 1, MbicOptions::default()).unwrap().index, 0);

        let two = LassoPath {
            lambdas: vec![2.0, 1.0],
            coefs: vec![vec![1.0; 5], vec![1.0; 5]],
            intercepts: vec![0.0; 2],
            active_sets: vec![vec![0, 1], vec![0, 1, 2, 3, 4]],
            rss: vec![3.0, 3.0],
            weights: vec![1.0; 5],
            converged: vec![true; 2],
            n: 50,
        };
        assert_eq!(mbic_select(&two, 50, 5, MbicOptions::default()).unwrap().index, 0);
    }

    #[test]
    fn two_stage_reembeds_zeros() {
        let (n, p) = (80, 30);
        let x = randn_matrix(n, p, 17);
        let mut y = randn(n, 18);
        for i in 0..n {
            y[i] += 1.5 * x[(i, 4)] - 1.5 * x[(i, 9)];
        }
        let r = two_stage(&x, &y, Method::Sis, 10, TwoStageOptions::default()).unwrap();
        assert_eq!(r.screened.len(), 10);
        for j in 0..p {
            if !r.screened.contains(&j) {
                assert_eq!(r.coefs[j], 0.0);
            }
        }
        assert!(r.path_hits(&[4, 9]));
        assert!(r.selected_support.contains(&(4, 1)));
        assert!(r.selected_support.contains(&(9, -1)));
        assert!(two_stage(&x, &y, Method::Sis, n, TwoStageOptions::default()).is_err());
    }

    #[test]
    fn full_screen_equals_standalone() {
        let (n, p) = (60, 12);
        let x = randn_matrix(n, p, 19);
        let mut y = randn(n, 20);
        for i in 0..n {
            y[i] += x[(i, 2)];
        }
        let a = two_stage(&x, &y, Method::Glss { band: 5, taper: true }, p, TwoStageOptions::default()).unwrap();
        let b = adaptive_pipeline(&x, &y, TwoStageOptions::default()).unwrap();
        assert_eq!(a.coefs, b.coefs);
        assert_eq!(a.path_supports(), b.path_supports());
    }
}
