//! Rolling-window direct forecasts of h-step inflation.
//!
//! Time indices are dataset rows. With monthly rate `r_t` and target
//! `y_t = mean(r_{t+1}, ..., r_{t+h})` (for price levels this is
//! `(1200/h) log(P_{t+h}/P_t)`), the forecast made at origin `o` uses
//! regressors dated `o` and a model fitted on rows
//! `o - gap - window + 1 ..= o - gap`. Every training target is realized by
//! `o` as long as `gap >= h`; a smaller gap is rejected as look-ahead.
//! Factors are principal components of the predictors and their lags over
//! the training rows plus the origin row, so nothing after `o` is read.

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Metric, ReportRow};
use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::penreg::{self, TwoStageOptions};
use crate::screen::Method;

/// Monthly rate and h-step target, aligned with the input index.
#[derive(Debug, Clone, PartialEq)]
pub struct InflationSeries {
    /// `1200 log(P_t / P_{t-1})`; `None` at `t = 0`.
    pub monthly: Vec<Option<f64>>,
    /// `(1200 / h) log(P_{t+h} / P_t)`; `None` for the last `h` rows.
    pub target: Vec<Option<f64>>,
}

/// Transform a price-level series. At `horizon = 12` the target is
/// `100 log(P_{t+12} / P_t)`.
pub fn build_inflation_target(levels: &[f64], horizon: usize) -> Result<InflationSeries> {
    if horizon == 0 {
        return Err(Error::Parameter("horizon must be positive".into()));
    }
    if levels.len() <= horizon + 1 {
        return Err(Error::Parameter(format!("{} levels is too short for horizon {horizon}", levels.len())));
    }
    if let Some(i) = levels.iter().position(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::Transform { index: i, msg: format!("price level {} is not positive", levels[i]) });
    }
    let logs: Vec<f64> = levels.iter().map(|p| p.ln()).collect();
    let n = levels.len();
    let monthly = (0..n).map(|t| (t > 0).then(|| 1200.0 * (logs[t] - logs[t - 1]))).collect();
    let scale = 1200.0 / horizon as f64;
    let target = (0..n).map(|t| (t + horizon < n).then(|| scale * (logs[t + horizon] - logs[t]))).collect();
    Ok(InflationSeries { monthly, target })
}

fn rate_target(rate: &[f64], horizon: usize) -> Vec<Option<f64>> {
    let n = rate.len();
    (0..n)
        .map(|t| (t + horizon < n).then(|| rate[t + 1..=t + horizon].iter().sum::<f64>() / horizon as f64))
        .collect()
}

/// Principal-component scores of the column-standardized `x`.
///
/// Scores are `Z v_k` for the leading right singular vectors `v_k` of the
/// standardized matrix `Z`, signed so each loading vector's largest-magnitude
/// entry is positive. Constant columns contribute zeros.
pub fn pca_factors(x: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let (n, m) = x.shape();
    if k > n.min(m) {
        return Err(Error::Parameter(format!("{k} factors requested from a {n}x{m} matrix")));
    }
    if k == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let z = standardize(x);
    let svd = z.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let mut loadings = DMatrix::zeros(m, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        let mut v: Vec<f64> = v_t.row(i).iter().copied().collect();
        let big = v.iter().copied().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)));
        if let Some((_, val)) = big {
            if val < 0.0 {
                v.iter_mut().for_each(|e| *e = -*e);
            }
        }
        loadings.column_mut(c).copy_from_slice(&v);
    }
    Ok(z * loadings)
}

fn standardize(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = x.shape();
    let mut z = x.clone();
    for j in 0..m {
        let mut col = z.column_mut(j);
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / (n as f64 - 1.0).max(1.0)).sqrt();
        if sd > 1e-12 * mean.abs().max(1.0) {
            col /= sd;
        } else {
            col.fill(0.0);
        }
    }
    z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecastModel {
    Ar4,
    #[serde(rename = "ar4+factors")]
    Ar4Factors,
    Lasso,
    Adalasso,
    SisLasso,
    SisAdalasso,
    GlssLasso,
    GlssAdalasso,
}

impl ForecastModel {
    pub const ALL: [ForecastModel; 8] = [
        ForecastModel::Ar4,
        ForecastModel::Ar4Factors,
        ForecastModel::Lasso,
        ForecastModel::Adalasso,
        ForecastModel::SisLasso,
        ForecastModel::SisAdalasso,
        ForecastModel::GlssLasso,
        ForecastModel::GlssAdalasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ForecastModel::Ar4 => "ar4",
            ForecastModel::Ar4Factors => "ar4+factors",
            ForecastModel::Lasso => "lasso",
            ForecastModel::Adalasso => "adalasso",
            ForecastModel::SisLasso => "sis-lasso",
            ForecastModel::SisAdalasso => "sis-adalasso",
            ForecastModel::GlssLasso => "glss-lasso",
            ForecastModel::GlssAdalasso => "glss-adalasso",
        }
    }

    fn first_stage(self, glss: Method) -> Option<Method> {
        match self {
            ForecastModel::SisLasso | ForecastModel::SisAdalasso => Some(Method::Sis),
            ForecastModel::GlssLasso | ForecastModel::GlssAdalasso => Some(glss),
            _ => None,
        }
    }

    fn adaptive(self) -> bool {
        matches!(self, ForecastModel::Adalasso | ForecastModel::SisAdalasso | ForecastModel::GlssAdalasso)
    }
}

impl std::str::FromStr for ForecastModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ForecastModel::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Parameter(format!("unknown forecast model '{s}'")))
    }
}

/// How many columns the first stage keeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DnRule {
    Fixed { d: usize },
    /// `ceil(n / ln n)` for a window of `n` rows.
    NOverLogN,
}

impl DnRule {
    pub fn resolve(self, n: usize, p: usize) -> usize {
        let d = match self {
            DnRule::Fixed { d } => d,
            DnRule::NOverLogN => (n as f64 / (n as f64).ln()).ceil() as usize,
        };
        d.clamp(1, p.min(n.saturating_sub(1)).max(1))
    }
}

/// Whether the target column holds price levels or an already computed
/// monthly rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetTransform {
    #[default]
    Levels,
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastConfig {
    /// Name of the target column.
    pub target: String,
    #[serde(default)]
    pub transform: TargetTransform,
    /// Predictor columns; all non-target columns when absent.
    #[serde(default)]
    pub predictors: Option<Vec<String>>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Regression rows per window.
    pub window: usize,
    /// Row of the first forecast origin.
    pub first_origin: usize,
    /// Row of the last forecast origin; defaults to the last row whose
    /// target is observed.
    #[serde(default)]
    pub last_origin: Option<usize>,
    #[serde(default = "one")]
    pub step: usize,
    /// Rows between the last training regressor and the origin; defaults to
    /// the horizon and may not be smaller.
    #[serde(default)]
    pub gap: Option<usize>,
    pub model: ForecastModel,
    /// Current value plus `lags - 1` lags of the target rate and of each predictor.
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default = "default_factors")]
    pub factors: usize,
    /// Lags of each predictor added to the principal-component input.
    #[serde(default = "default_factor_lags")]
    pub factor_lags: usize,
    #[serde(default = "default_dn")]
    pub d_n: DnRule,
    #[serde(default)]
    pub glss: Method,
    #[serde(default)]
    pub selection: TwoStageOptions,
}

fn default_horizon() -> usize {
    12
}
fn one() -> usize {
    1
}
fn default_lags() -> usize {
    4
}
fn default_factors() -> usize {
    4
}
fn default_factor_lags() -> usize {
    3
}
fn default_dn() -> DnRule {
    DnRule::NOverLogN
}

impl ForecastConfig {
    pub fn new(target: &str, model: ForecastModel, window: usize, first_origin: usize) -> Self {
        Self {
            target: target.to_string(),
            transform: TargetTransform::Levels,
            predictors: None,
            horizon: default_horizon(),
            window,
            first_origin,
            last_origin: None,
            step: 1,
            gap: None,
            model,
            lags: default_lags(),
            factors: default_factors(),
            factor_lags: default_factor_lags(),
            d_n: default_dn(),
            glss: Method::default(),
            selection: TwoStageOptions::default(),
        }
    }
}

/// One forecast origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub origin: usize,
    pub forecast: f64,
    pub benchmark: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastOutcome {
    pub report: ExperimentReport,
    pub points: Vec<ForecastPoint>,
    pub relative_mse: f64,
    pub relative_mae: f64,
}

struct Prepared {
    rate: Vec<Option<f64>>,
    target: Vec<Option<f64>>,
    predictors: Vec<Vec<f64>>,
    /// First row with a full set of lagged regressors.
    first_row: usize,
}

fn prepare(ds: &TimeSeriesDataset, cfg: &ForecastConfig) -> Result<Prepared> {
    let t_idx = ds
        .column_index(&cfg.target)
        .ok_or_else(|| Error::Config(format!("target column '{}' not found", cfg.target)))?;
    let pred_idx: Vec<usize> = match &cfg.predictors {
        Some(names) => names
            .iter()
            .map(|s| ds.column_index(s).ok_or_else(|| Error::Config(format!("predictor column '{s}' not found"))))
            .collect::<Result<_>>()?,
        None => (0..ds.ncols()).filter(|&j| j != t_idx).collect(),
    };
    if pred_idx.contains(&t_idx) {
        return Err(Error::Config("the target cannot also be a predictor".into()));
    }
    for &j in std::iter::once(&t_idx).chain(&pred_idx) {
        if let Some(i) = ds.columns[j].iter().position(|v| !v.is_finite()) {
            return Err(Error::Missing { row: i + 1, col: j + 1 });
        }
    }
    let col = &ds.columns[t_idx];
    let (rate, target, first_rate) = match cfg.transform {
        TargetTransform::Levels => {
            let s = build_inflation_target(col, cfg.horizon)?;
            (s.monthly, s.target, 1)
        }
        TargetTransform::Rate => (col.iter().copied().map(Some).collect(), rate_target(col, cfg.horizon), 0),
    };
    let depth = cfg.lags.saturating_sub(1).max(if cfg.factors > 0 { cfg.factor_lags } else { 0 });
    Ok(Prepared {
        rate,
        target,
        predictors: pred_idx.iter().map(|&j| ds.columns[j].clone()).collect(),
        first_row: first_rate + depth,
    })
}

fn validate(cfg: &ForecastConfig, prep: &Prepared, n_rows: usize) -> Result<(Vec<usize>, usize)> {
    if cfg.lags == 0 {
        return Err(Error::Parameter("at least one autoregressive lag is required".into()));
    }
    if cfg.step == 0 || cfg.window < 2 {
        return Err(Error::Parameter("step must be positive and window at least 2".into()));
    }
    let gap = cfg.gap.unwrap_or(cfg.horizon);
    if gap < cfg.horizon {
        return Err(Error::Leakage(format!(
            "gap {gap} < horizon {}: training targets would be realized after the origin",
            cfg.horizon
        )));
    }
    if cfg.window + cfg.horizon > n_rows {
        return Err(Error::Parameter(format!("window {} + horizon {} exceeds {n_rows} rows", cfg.window, cfg.horizon)));
    }
    let last_possible = n_rows.checked_sub(cfg.horizon + 1).ok_or_else(|| Error::Parameter("series too short".into()))?;
    let last = cfg.last_origin.unwrap_or(last_possible);
    if last > last_possible {
        return Err(Error::Leakage(format!("origin {last} has no realized target (last is {last_possible})")));
    }
    let earliest = prep.first_row + cfg.window - 1 + gap;
    if cfg.first_origin < earliest {
        return Err(Error::Parameter(format!(
            "first origin {} leaves fewer than {} training rows (earliest valid origin is {earliest})",
            cfg.first_origin, cfg.window
        )));
    }
    if cfg.first_origin > last {
        return Err(Error::Parameter(format!("first origin {} is after last origin {last}", cfg.first_origin)));
    }
    Ok(((cfg.first_origin..=last).step_by(cfg.step).collect(), gap))
}

/// Rows `rows` of the regressor block: target lags, then each predictor's
/// lags, then `factors`' matching rows.
fn regressors(prep: &Prepared, lags: usize, rows: &[usize], factors: Option<&DMatrix<f64>>, with_predictors: bool) -> DMatrix<f64> {
    let n_pred = if with_predictors { prep.predictors.len() } else { 0 };
    let k = factors.map_or(0, |f| f.ncols());
    let width = lags * (1 + n_pred) + k;
    DMatrix::from_fn(rows.len(), width, |i, c| {
        let t = rows[i];
        if c < lags {
            prep.rate[t - c].expect("lag rows are validated")
        } else if c < lags * (1 + n_pred) {
            let c = c - lags;
            prep.predictors[c / lags][t - c % lags]
        } else {
            factors.expect("factor columns")[(i, c - lags * (1 + n_pred))]
        }
    })
}

/// Factor scores for rows `rows` (training rows then the origin row).
fn window_factors(prep: &Prepared, cfg: &ForecastConfig, rows: &[usize]) -> Result<DMatrix<f64>> {
    let depth = cfg.factor_lags + 1;
    let m = prep.predictors.len() * depth;
    if m == 0 {
        return Err(Error::Config("factor models need at least one predictor column".into()));
    }
    let x = DMatrix::from_fn(rows.len(), m, |i, c| prep.predictors[c / depth][rows[i] - c % depth]);
    pca_factors(&x, cfg.factors)
}

fn ols_forecast(x: &DMatrix<f64>, y: &[f64], x_new: &[f64]) -> Result<f64> {
    let (n, p) = x.shape();
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let rhs = nalgebra::DVector::from_column_slice(y);
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Parameter(format!("least squares failed: {e}")))?;
    Ok(coef[0] + x_new.iter().zip(coef.iter().skip(1)).map(|(a, b)| a * b).sum::<f64>())
}

fn forecast_at(prep: &Prepared, cfg: &ForecastConfig, origin: usize, gap: usize) -> Result<(f64, f64)> {
    let end = origin - gap;
    let train: Vec<usize> = (end + 1 - cfg.window..=end).collect();
    let y: Vec<f64> = train.iter().map(|&t| prep.target[t].expect("training targets are realized")).collect();
    let all_rows: Vec<usize> = train.iter().copied().chain(std::iter::once(origin)).collect();
    let ar = regressors(prep, cfg.lags, &all_rows, None, false);
    let n = train.len();
    let split = |m: &DMatrix<f64>| (m.rows(0, n).into_owned(), m.row(n).iter().copied().collect::<Vec<f64>>());
    let (ar_x, ar_new) = split(&ar);
    let benchmark = ols_forecast(&ar_x, &y, &ar_new)?;
    let factors = if cfg.factors > 0 && cfg.model != ForecastModel::Ar4 {
        Some(window_factors(prep, cfg, &all_rows)?)
    } else {
        None
    };
    let forecast = match cfg.model {
        ForecastModel::Ar4 => benchmark,
        ForecastModel::Ar4Factors => {
            let (fx, fnew) = split(&regressors(prep, cfg.lags, &all_rows, factors.as_ref(), false));
            ols_forecast(&fx, &y, &fnew)?
        }
        model => {
            let full = regressors(prep, cfg.lags, &all_rows, factors.as_ref(), true);
            let (x, x_new) = split(&full);
            let opts = TwoStageOptions { adaptive: model.adaptive(), ..cfg.selection };
            let fit = match model.first_stage(cfg.glss) {
                Some(method) => penreg::two_stage(&x, &y, method, cfg.d_n.resolve(n, x.ncols()), opts)?,
                None => penreg::adaptive_pipeline(&x, &y, opts)?,
            };
            fit.intercept + fit.coefs.iter().zip(&x_new).map(|(b, v)| b * v).sum::<f64>()
        }
    };
    Ok((forecast, benchmark))
}

/// Rolling-window forecasts with MSE and MAE relative to the AR benchmark.
pub fn rolling_forecast(dataset: &TimeSeriesDataset, cfg: &ForecastConfig) -> Result<ForecastOutcome> {
    let start = Instant::now();
    let prep = prepare(dataset, cfg)?;
    let (origins, gap) = validate(cfg, &prep, dataset.n())?;
    let results: Vec<Result<(f64, f64)>> = origins.par_iter().map(|&o| forecast_at(&prep, cfg, o, gap)).collect();
    let mut points = Vec::with_capacity(origins.len());
    for (&origin, r) in origins.iter().zip(results) {
        let (forecast, benchmark) = r?;
        let actual = prep.target[origin].expect("origins have realized targets");
        points.push(ForecastPoint { origin, forecast, benchmark, actual });
    }
    let sum = |f: &dyn Fn(&ForecastPoint) -> f64| points.iter().map(f).sum::<f64>();
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else if a == 0.0 { 1.0 } else { f64::INFINITY };
    let relative_mse = ratio(sum(&|p| (p.forecast - p.actual).powi(2)), sum(&|p| (p.benchmark - p.actual).powi(2)));
    let relative_mae = ratio(sum(&|p| (p.forecast - p.actual).abs()), sum(&|p| (p.benchmark - p.actual).abs()));
    let mut report = ExperimentReport::new(cfg.target.clone(), cfg.model.name(), Metric::RelativeMseMae, points.len(), 0);
    report.rows.push(ReportRow { design: format!("{}:mse", cfg.target), method: cfg.model.name().into(), value: relative_mse, mc_se: None });
    report.rows.push(ReportRow { design: format!("{}:mae", cfg.target), method: cfg.model.name().into(), value: relative_mae, mc_se: None });
    report.config = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(ForecastOutcome { report, points, relative_mse, relative_mae })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn trivial_inflation_transforms() {
        let s = build_inflation_target(&[5.0; 30], 12).unwrap();
        assert!(s.monthly[1..].iter().all(|v| *v == Some(0.0)));
        assert!(s.target[..18].iter().all(|v| *v == Some(0.0)));
        assert!(s.target[18..].iter().all(Option::is_none));
        let levels: Vec<f64> = (0..40).map(|t| (t as f64 / 100.0).exp()).collect();
        let s = build_inflation_target(&levels, 12).unwrap();
        assert!(s.monthly[1..].iter().all(|v| (v.unwrap() - 12.0).abs() < 1e-9));
        assert!(s.target.iter().flatten().all(|v| (v - 12.0).abs() < 1e-9));
        assert_eq!(s.monthly[0], None);
    }

    #[test]
    fn nonpositive_level_is_located() {
        let err = build_inflation_target(&[1.0, 2.0, 0.0, 3.0, 4.0, 5.0], 2).unwrap_err();
        assert!(matches!(err, Error::Transform { index: 2, .. }));
    }

    #[test]
    fn shifting_input_shifts_outputs() {
        let mut r = rng::stream(4, 0);
        let mut level = 100.0;
        let levels: Vec<f64> = (0..80)
            .map(|_| {
                level *= (0.002 + 0.003 * r.sample::<f64, _>(StandardNormal)).exp();
                level
            })
            .collect();
        let a = build_inflation_target(&levels, 12).unwrap();
        let b = build_inflation_target(&levels[1..], 12).unwrap();
        for t in 1..b.target.len() {
            assert_eq!(a.monthly[t + 1], b.monthly[t]);
            assert_eq!(a.target[t + 1], b.target[t]);
        }
    }

    #[test]
    fn rate_target_matches_levels_target() {
        let levels: Vec<f64> = (0..50).map(|t| 100.0 + t as f64 + (t as f64).sin()).collect();
        let s = build_inflation_target(&levels, 12).unwrap();
        let rate: Vec<f64> = s.monthly.iter().map(|v| v.unwrap_or(0.0)).collect();
        let alt = rate_target(&rate, 12);
        for t in 1..50 {
            match (s.target[t], alt[t]) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-10),
                (None, None) => {}
                other => panic!("misaligned at {t}: {other:?}"),
            }
        }
    }

    fn random_matrix(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        let mut r = rng::stream(seed, 0);
        DMatrix::from_fn(n, m, |_, _| r.sample(StandardNormal))
    }

    #[test]
    fn pca_matches_eigen_oracle() {
        for (n, m) in [(40, 7), (12, 30)] {
            let x = random_matrix(n, m, n as u64);
            let k = 4;
            let f = pca_factors(&x, k).unwrap();
            let z = standardize(&x);
            let corr = z.transpose() * &z / (n as f64 - 1.0);
            let eig = corr.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            for c in 0..k {
                let v = eig.eigenvectors.column(order[c]);
                let oracle = &z * v;
                let same = (f.column(c) - &oracle).amax();
                let flipped = (f.column(c) + &oracle).amax();
                assert!(same.min(flipped) < 1e-8 * oracle.amax().max(1.0), "component {c}: {same} {flipped}");
            }
        }
    }

    #[test]
    fn pca_scores_orthogonal_and_rank_one() {
        let x = random_matrix(30, 6, 2);
        let f = pca_factors(&x, 3).unwrap();
        let g = f.transpose() * &f;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(g[(i, j)].abs() < 1e-8 * g[(i, i)]);
                }
            }
        }
        let u = random_matrix(25, 1, 3);
        let w = DMatrix::from_row_slice(1, 5, &[1.0, -2.0, 0.5, 3.0, 1.5]);
        let r1 = &u * &w;
        let f = pca_factors(&r1, 2).unwrap();
        let z = standardize(&r1);
        let share = f.column(0).norm_squared() / z.norm_squared();
        assert!((share - 1.0).abs() < 1e-10);
        assert!(matches!(pca_factors(&r1, 6), Err(Error::Parameter(_))));
    }

    #[test]
    fn pca_sign_convention() {
        let x = random_matrix(20, 5, 8);
        let a = pca_factors(&x, 2).unwrap();
        let b = pca_factors(&(-&x), 2).unwrap();
        // Loadings are sign-normalized, so negating the data negates the scores.
        assert!((a + b).amax() < 1e-10);
    }

    #[test]
    fn dn_rule_rounding() {
        assert_eq!(DnRule::NOverLogN.resolve(451, 532), 74);
        assert_eq!(DnRule::Fixed { d: 73 }.resolve(451, 532), 73);
        assert_eq!(DnRule::Fixed { d: 999 }.resolve(100, 50), 50);
    }

    #[test]
    fn model_names_round_trip() {
        for m in ForecastModel::ALL {
            assert_eq!(m.name().parse::<ForecastModel>().unwrap(), m);
        }
    }
}
