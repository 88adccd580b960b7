//! Monte-Carlo experiments and the rolling-window forecasting pipeline.
//!
//! Replications run in parallel on the current rayon pool. Each one draws
//! from its own `(seed, rep)` stream and results are aggregated by counting,
//! so reports do not depend on scheduling.

mod forecast;

pub use forecast::{
    build_inflation_target, pca_factors, rolling_forecast, DnRule, ForecastConfig, ForecastModel, ForecastOutcome,
    ForecastPoint, InflationSeries, TargetTransform,
};

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::fmt_f64;
use crate::depmeas;
use crate::dgp::{self, ArErrorSpec, InnovationSpec, SimDesign};
use crate::error::{Error, Result};
use crate::penreg::{self, TwoStageOptions};
use crate::rng;
use crate::screen::{self, Method, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    CoverageProportion,
    ExactSupportProportion,
    MaeCurve,
    RelativeMseMae,
    AsymptoticVariance,
}

/// One table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub design: String,
    pub method: String,
    pub value: f64,
    /// Monte-Carlo standard error, when the value is a proportion or mean.
    pub mc_se: Option<f64>,
}

/// One point of an OLS-versus-GLS error curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub rho: f64,
    pub ols_mae: f64,
    pub gls_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub design_id: String,
    pub method: String,
    pub metric: Metric,
    pub replications: usize,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub curve: Vec<CurvePoint>,
    /// Replications that errored (counted as failures, never resampled).
    pub failures: usize,
    pub warnings: Vec<String>,
    pub wall_time_secs: f64,
    /// Fully resolved configuration that produced the report.
    pub config: serde_json::Value,
}

impl ExperimentReport {
    fn new(design_id: impl Into<String>, method: impl Into<String>, metric: Metric, reps: usize, seed: u64) -> Self {
        Self {
            design_id: design_id.into(),
            method: method.into(),
            metric,
            replications: reps,
            seed,
            rows: Vec::new(),
            curve: Vec::new(),
            failures: 0,
            warnings: Vec::new(),
            wall_time_secs: 0.0,
            config: serde_json::Value::Null,
        }
    }

    /// First row's value.
    pub fn value(&self) -> f64 {
        self.rows.first().map_or(f64::NAN, |r| r.value)
    }

    /// Row whose method label is `method`.
    pub fn value_of(&self, method: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.method == method).map(|r| r.value)
    }

    /// Same report with the timing cleared, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_secs: 0.0, ..self.clone() }
    }

    /// Curves as `rho,ols_mae,gls_mae`; everything else as
    /// `design,method,value,mc_se`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        if self.metric == Metric::MaeCurve {
            wr.write_record(["rho", "ols_mae", "gls_mae"]).map_err(io)?;
            for c in &self.curve {
                wr.write_record([fmt_f64(c.rho), fmt_f64(c.ols_mae), fmt_f64(c.gls_mae)]).map_err(io)?;
            }
        } else {
            wr.write_record(["design", "method", "value", "mc_se"]).map_err(io)?;
            for r in &self.rows {
                let se = r.mc_se.map(fmt_f64).unwrap_or_default();
                wr.write_record([r.design.clone(), r.method.clone(), fmt_f64(r.value), se]).map_err(io)?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// `sqrt(p (1 - p) / reps)`.
pub fn proportion_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::Parameter("reps must be at least 1".into()));
    }
    Ok(())
}

/// Count successes over replications; errors count as failures and are
/// recorded in the report's warnings.
fn tally<F>(report: &mut ExperimentReport, reps: usize, f: F) -> usize
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    let outcomes: Vec<Result<bool>> = (0..reps as u64).into_par_iter().map(&f).collect();
    let mut hits = 0;
    for (rep, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(true) => hits += 1,
            Ok(false) => {}
            Err(e) => {
                report.failures += 1;
                report.warnings.push(format!("replication {rep} failed: {e}"));
            }
        }
    }
    hits
}

/// Proportion of replications whose top-`d_n` screened set contains the
/// true support.
pub fn run_screen_experiment(design: &SimDesign, method: Method, d_n: usize, reps: usize) -> Result<ExperimentReport> {
    check_reps(reps)?;
    design.validate()?;
    if d_n > design.p {
        return Err(Error::Parameter(format!("d_n = {d_n} exceeds p = {}", design.p)));
    }
    let start = Instant::now();
    let support = design.true_support();
    let mut report = ExperimentReport::new(design_label(design), method.to_string(), Metric::CoverageProportion, reps, design.seed);
    let hits = tally(&mut report, reps, |rep| {
        let data = dgp::generate(design, rep)?;
        let sr = screen::screen(&data.x, &data.y, method, true, Rule::Top { d: d_n })?;
        Ok(screen::coverage(&sr.selected, &support))
    });
    let value = hits as f64 / reps as f64;
    report.rows.push(ReportRow {
        design: report.design_id.clone(),
        method: report.method.clone(),
        value,
        mc_se: Some(proportion_se(value, reps)),
    });
    report.config = serde_json::json!({ "design": design, "method": method, "d_n": d_n, "reps": reps });
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Proportion of replications in which some point of the stage-two path
/// selects exactly the true support. `first_stage = None` runs the
/// selector on all columns.
pub fn run_two_stage_experiment(
    design: &SimDesign,
    first_stage: Option<Method>,
    d_n: usize,
    reps: usize,
    opts: TwoStageOptions,
) -> Result<ExperimentReport> {
    check_reps(reps)?;
    design.validate()?;
    let start = Instant::now();
    let support = design.true_support();
    let label = method_label(first_stage, opts.adaptive);
    let mut report = ExperimentReport::new(design_label(design), label, Metric::ExactSupportProportion, reps, design.seed);
    let hits = tally(&mut report, reps, |rep| {
        let data = dgp::generate(design, rep)?;
        let fit = match first_stage {
            Some(m) => penreg::two_stage(&data.x, &data.y, m, d_n, opts)?,
            None => penreg::adaptive_pipeline(&data.x, &data.y, opts)?,
        };
        Ok(fit.path_hits(&support))
    });
    let value = hits as f64 / reps as f64;
    report.rows.push(ReportRow {
        design: report.design_id.clone(),
        method: report.method.clone(),
        value,
        mc_se: Some(proportion_se(value, reps)),
    });
    report.config = serde_json::json!({
        "design": design, "first_stage": first_stage, "d_n": d_n, "reps": reps, "options": opts,
    });
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Label such as `glss(l=15,taper)-adalasso` or `lasso`.
pub fn method_label(first_stage: Option<Method>, adaptive: bool) -> String {
    let second = if adaptive { "adalasso" } else { "lasso" };
    match first_stage {
        Some(m) => format!("{m}-{second}"),
        None => second.to_string(),
    }
}

fn design_label(d: &SimDesign) -> String {
    format!("n={},p={},s={},alpha={}", d.n, d.p, d.true_support().len(), d.errors.alpha)
}

/// Feasible GLS used by the error curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveGls {
    /// Banded or tapered sample autocovariance of the OLS residuals.
    Nonparametric { band: usize, taper: bool },
}

impl Default for CurveGls {
    fn default() -> Self {
        CurveGls::Nonparametric { band: crate::covest::DEFAULT_BAND, taper: true }
    }
}

/// Slope used in the univariate error-curve model.
pub const CURVE_BETA: f64 = 0.5;

/// Mean absolute error of the OLS and feasible GLS slope in
/// `y_t = 0.5 x_t + e_t`, `x_t` iid N(0,1), `e_t` Gaussian AR(1) with
/// coefficient `rho`, for each `rho` in the grid.
pub fn gls_vs_ols_curve(rho_grid: &[f64], n: usize, reps: usize, seed: u64, gls: CurveGls) -> Result<ExperimentReport> {
    check_reps(reps)?;
    if let Some(r) = rho_grid.iter().find(|r| !(r.abs() < 1.0)) {
        return Err(Error::Parameter(format!("rho = {r} must lie in (-1, 1)")));
    }
    let start = Instant::now();
    let mut report = ExperimentReport::new(format!("univariate,n={n},beta={CURVE_BETA}"), "ols-vs-gls", Metric::MaeCurve, reps, seed);
    for (g, &rho) in rho_grid.iter().enumerate() {
        let errs: Vec<Result<(f64, f64)>> = (0..reps as u64)
            .into_par_iter()
            .map(|rep| {
                let mut r = rng::substream(seed, rep, 100 + g as u64);
                let x = dgp::gen_ar_error_with_rng(&unit_ar(0.0, true), n, 0, &mut r)?;
                let e = dgp::gen_ar_error_with_rng(&unit_ar(rho, true), n, 0, &mut r)?;
                let y: Vec<f64> = x.iter().zip(&e).map(|(x, e)| CURVE_BETA * x + e).collect();
                let xm = nalgebra::DMatrix::from_vec(n, 1, x);
                let ols = screen::sis_scores(&xm, &y, false)?.values[0];
                let CurveGls::Nonparametric { band, taper } = gls;
                let gls = screen::glss_scores(&xm, &y, band, taper, false)?.values[0];
                Ok(((ols - CURVE_BETA).abs(), (gls - CURVE_BETA).abs()))
            })
            .collect();
        let (mut so, mut sg, mut ok) = (0.0, 0.0, 0usize);
        for (rep, e) in errs.into_iter().enumerate() {
            match e {
                Ok((o, gl)) => {
                    so += o;
                    sg += gl;
                    ok += 1;
                }
                Err(err) => {
                    report.failures += 1;
                    report.warnings.push(format!("rho {rho}, replication {rep} failed: {err}"));
                }
            }
        }
        let denom = ok.max(1) as f64;
        report.curve.push(CurvePoint { rho, ols_mae: so / denom, gls_mae: sg / denom });
    }
    for c in &report.curve {
        report.rows.push(ReportRow { design: format!("rho={}", c.rho), method: "ols".into(), value: c.ols_mae, mc_se: None });
        report.rows.push(ReportRow { design: format!("rho={}", c.rho), method: "gls".into(), value: c.gls_mae, mc_se: None });
    }
    report.config = serde_json::json!({ "rho_grid": rho_grid, "n": n, "reps": reps, "seed": seed, "gls": gls });
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

fn unit_ar(alpha: f64, stationary_start: bool) -> ArErrorSpec {
    ArErrorSpec {
        alpha,
        innovation: InnovationSpec::gaussian(dgp::CovStructure::Identity),
        stationary_start,
    }
}

/// Monte-Carlo and closed-form variances of `sqrt(n)(estimate - truth)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsyVarCheck {
    pub alpha: f64,
    pub phi: f64,
    /// Infeasible GLS (known AR(1) error precision).
    pub gls_mc: f64,
    pub gls_closed: f64,
    pub ols_mc: f64,
    pub ols_closed: f64,
}

impl AsyVarCheck {
    pub fn gls_rel_err(&self) -> f64 {
        (self.gls_mc / self.gls_closed - 1.0).abs()
    }

    pub fn ols_rel_err(&self) -> f64 {
        (self.ols_mc / self.ols_closed - 1.0).abs()
    }
}

/// Sampling variance of the OLS and infeasible GLS slope in
/// `y_t = b x_t + e_t` with `x_t` AR(1) in `phi` and `e_t` AR(1) in
/// `alpha`, both with unit-variance Gaussian innovations and stationary
/// starts, against the closed forms in [`depmeas`].
pub fn asy_var_monte_carlo(alpha: f64, phi: f64, n: usize, reps: usize, seed: u64) -> Result<AsyVarCheck> {
    check_reps(reps)?;
    if n < 2 {
        return Err(Error::Parameter("n must be at least 2".into()));
    }
    let (gls_closed, ols_closed) = if phi == 0.0 {
        depmeas::asy_var_case1(alpha, 1.0, 1.0)?
    } else {
        depmeas::asy_var_case2(alpha, phi, 1.0, 1.0)?
    };
    let draws: Vec<Result<(f64, f64)>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut r = rng::stream(seed, rep);
            let x = dgp::gen_ar_error_with_rng(&unit_ar(phi, true), n, 0, &mut r)?;
            let e = dgp::gen_ar_error_with_rng(&unit_ar(alpha, true), n, 0, &mut r)?;
            // Slope 1 without loss of generality: both estimators are
            // equivariant, so estimate - truth depends on e only.
            let (mut xy, mut xx) = (0.0, 0.0);
            for (a, b) in x.iter().zip(&e) {
                xy += a * b;
                xx += a * a;
            }
            let ols = xy / xx;
            // Prais-Winsten transform with the true alpha.
            let head = (1.0 - alpha * alpha).sqrt();
            let (mut gy, mut gx) = (head * x[0] * head * e[0], head * x[0] * head * x[0]);
            for t in 1..n {
                let xt = x[t] - alpha * x[t - 1];
                let et = e[t] - alpha * e[t - 1];
                gy += xt * et;
                gx += xt * xt;
            }
            Ok((ols, gy / gx))
        })
        .collect();
    let mut ols = Vec::with_capacity(reps);
    let mut gls = Vec::with_capacity(reps);
    for d in draws {
        let (o, g) = d?;
        ols.push(o * (n as f64).sqrt());
        gls.push(g * (n as f64).sqrt());
    }
    Ok(AsyVarCheck { alpha, phi, gls_mc: sample_var(&gls), gls_closed, ols_mc: sample_var(&ols), ols_closed })
}

/// Run [`asy_var_monte_carlo`] over a grid and collect the cells.
pub fn asy_var_experiment(alphas: &[f64], phis: &[f64], n: usize, reps: usize, seed: u64) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = ExperimentReport::new(format!("ar1-ar1,n={n}"), "ols,gls", Metric::AsymptoticVariance, reps, seed);
    for (i, &phi) in phis.iter().enumerate() {
        for (k, &alpha) in alphas.iter().enumerate() {
            let c = asy_var_monte_carlo(alpha, phi, n, reps, seed.wrapping_add((i * alphas.len() + k) as u64))?;
            let design = format!("alpha={alpha},phi={phi}");
            let se = |v: f64| Some(v * (2.0 / (reps as f64 - 1.0)).sqrt());
            report.rows.push(ReportRow { design: design.clone(), method: "ols-mc".into(), value: c.ols_mc, mc_se: se(c.ols_mc) });
            report.rows.push(ReportRow { design: design.clone(), method: "ols-closed".into(), value: c.ols_closed, mc_se: None });
            report.rows.push(ReportRow { design: design.clone(), method: "gls-mc".into(), value: c.gls_mc, mc_se: se(c.gls_mc) });
            report.rows.push(ReportRow { design, method: "gls-closed".into(), value: c.gls_closed, mc_se: None });
        }
    }
    report.config = serde_json::json!({ "alphas": alphas, "phis": phis, "n": n, "reps": reps, "seed": seed });
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

fn sample_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{PresetCase, PresetDist, PresetParams, SparseBeta};

    fn small_design(seed: u64) -> SimDesign {
        let mut d = dgp::preset_design(
            PresetCase::C1,
            30,
            PresetDist::Gaussian,
            PresetParams { gamma: Some(0.4), alpha: 0.6, seed },
        )
        .unwrap();
        d.n = 60;
        d
    }

    #[test]
    fn empty_support_always_covered() {
        let mut d = small_design(1);
        d.beta = SparseBeta { indices: vec![], values: vec![] };
        let r = run_screen_experiment(&d, Method::Sis, 5, 10).unwrap();
        assert_eq!(r.value(), 1.0);
        assert_eq!(r.rows[0].mc_se, Some(0.0));
    }

    #[test]
    fn reports_are_reproducible_and_bounded() {
        let d = small_design(9);
        let a = run_screen_experiment(&d, Method::default(), 20, 16).unwrap();
        let b = run_screen_experiment(&d, Method::default(), 20, 16).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
        assert!((0.0..=1.0).contains(&a.value()));
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = serial.install(|| run_screen_experiment(&d, Method::default(), 20, 16)).unwrap();
        assert_eq!(a.without_timing(), c.without_timing());
    }

    #[test]
    fn strong_single_signal_is_found() {
        let mut d = small_design(3);
        d.covariates.coef = dgp::VarCoefSpec::Diag { gamma: 0.0 };
        d.errors.alpha = 0.0;
        d.n = 100;
        d.beta = SparseBeta { indices: vec![7], values: vec![3.0] };
        let r = run_two_stage_experiment(&d, Some(Method::Sis), 10, 50, TwoStageOptions::default()).unwrap();
        assert!(r.value() >= 0.99, "{}", r.value());
    }

    #[test]
    fn failed_replications_count_against_coverage() {
        let d = small_design(2);
        // d_n larger than p makes every two-stage fit fail.
        let r = run_two_stage_experiment(&d, Some(Method::Sis), 31, 4, TwoStageOptions::default()).unwrap();
        assert_eq!(r.failures, 4);
        assert_eq!(r.value(), 0.0);
        assert_eq!(r.warnings.len(), 4);
    }

    #[test]
    fn curve_at_zero_rho_agrees() {
        let r = gls_vs_ols_curve(&[0.0], 200, 200, 5, CurveGls::default()).unwrap();
        let c = r.curve[0];
        assert!((c.ols_mae / c.gls_mae - 1.0).abs() < 0.1, "{c:?}");
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("rho,ols_mae,gls_mae\n"));
    }

    #[test]
    fn asy_var_small_check() {
        let c = asy_var_monte_carlo(0.6, 0.4, 500, 1000, 11).unwrap();
        assert!(c.ols_rel_err() < 0.15, "{c:?}");
        assert!(c.gls_rel_err() < 0.15, "{c:?}");
    }

    #[test]
    fn report_csv_layout() {
        let mut r = ExperimentReport::new("d", "m", Metric::CoverageProportion, 10, 1);
        r.rows.push(ReportRow { design: "d".into(), method: "m".into(), value: 0.5, mc_se: Some(proportion_se(0.5, 100)) });
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "design,method,value,mc_se");
        assert_eq!(s.lines().nth(1).unwrap(), "d,m,5.0000000000000000e-1,5.0000000000000003e-2");
    }
}
