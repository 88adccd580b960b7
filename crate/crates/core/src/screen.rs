//! Marginal screening: SIS (per-column OLS) and GLS screening (per-column
//! feasible GLS under a banded or tapered Toeplitz estimate of the marginal
//! error autocovariance).
//!
//! Columns and the response are always centered. With `standardize` the
//! columns are also scaled to unit sample variance (divisor n), which makes
//! rankings invariant to positive per-column rescaling.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covest::{build_cov, sample_autocov, DEFAULT_BAND};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Method {
    Sis,
    Glss { band: usize, taper: bool },
}

impl Default for Method {
    fn default() -> Self {
        Method::Glss { band: DEFAULT_BAND, taper: true }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Sis => write!(f, "sis"),
            Method::Glss { band, taper: true } => write!(f, "glss(l={band},taper)"),
            Method::Glss { band, taper: false } => write!(f, "glss(l={band},banded)"),
        }
    }
}

/// Non-fatal events recorded while scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScreenWarning {
    /// Column has (numerically) zero variance; its score is 0.
    ZeroVariance { column: usize },
    /// Marginal covariance could not be factorized; its score is 0.
    SingularCovariance { column: usize },
    /// Factorization needed a diagonal ridge of `ridge * gamma_0`.
    Escalated { column: usize, ridge: f64 },
}

impl fmt::Display for ScreenWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScreenWarning::ZeroVariance { column } => write!(f, "column {column}: zero variance, score set to 0"),
            ScreenWarning::SingularCovariance { column } => {
                write!(f, "column {column}: marginal covariance not positive definite, score set to 0")
            }
            ScreenWarning::Escalated { column, ridge } => {
                write!(f, "column {column}: covariance factorized with ridge {ridge:e}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalScores {
    pub values: Vec<f64>,
    pub warnings: Vec<ScreenWarning>,
}

/// Selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Rule {
    /// `{ j : |score_j| >= gamma }`.
    Threshold { gamma: f64 },
    /// First `d` entries of the ranking.
    Top { d: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningResult {
    pub scores: Vec<f64>,
    /// Column indices by decreasing `|score|`, ties by ascending index.
    pub ranking: Vec<usize>,
    /// Selected columns, ascending.
    pub selected: Vec<usize>,
    pub method: Method,
    pub warnings: Vec<ScreenWarning>,
}

fn check_inputs(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("X has {} rows, y has {}", x.nrows(), y.len())));
    }
    if x.nrows() < 2 {
        return Err(Error::Parameter("need at least two observations".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Parameter("inputs must be finite".into()));
    }
    Ok(())
}

fn centered(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}

/// Centered (optionally standardized) copy of column `j`, or `None` when
/// the column has zero variance.
fn prepared_column(x: &DMatrix<f64>, j: usize, standardize: bool) -> Option<Vec<f64>> {
    let col = x.column(j);
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let mut c: Vec<f64> = col.iter().map(|v| v - mean).collect();
    let ss = c.iter().map(|v| v * v).sum::<f64>();
    let sd = (ss / n).sqrt();
    if !(sd > 1e-12 * mean.abs().max(1.0)) {
        return None;
    }
    if standardize {
        c.iter_mut().for_each(|v| *v /= sd);
    }
    Some(c)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

enum ColumnScore {
    Value(f64),
    Escalated(f64, f64),
    ZeroVariance,
    Singular,
}

fn collect_scores(parts: Vec<ColumnScore>) -> MarginalScores {
    let mut values = Vec::with_capacity(parts.len());
    let mut warnings = Vec::new();
    for (column, s) in parts.into_iter().enumerate() {
        match s {
            ColumnScore::Value(v) => values.push(v),
            ColumnScore::Escalated(v, ridge) => {
                values.push(v);
                warnings.push(ScreenWarning::Escalated { column, ridge });
            }
            ColumnScore::ZeroVariance => {
                values.push(0.0);
                warnings.push(ScreenWarning::ZeroVariance { column });
            }
            ColumnScore::Singular => {
                values.push(0.0);
                warnings.push(ScreenWarning::SingularCovariance { column });
            }
        }
    }
    MarginalScores { values, warnings }
}

/// Marginal OLS slopes `(x_j' x_j)^-1 x_j' y` on centered data.
pub fn sis_scores(x: &DMatrix<f64>, y: &[f64], standardize: bool) -> Result<MarginalScores> {
    check_inputs(x, y)?;
    let yc = centered(y);
    let parts = (0..x.ncols())
        .into_par_iter()
        .map(|j| match prepared_column(x, j, standardize) {
            Some(c) => ColumnScore::Value(dot(&c, &yc) / dot(&c, &c)),
            None => ColumnScore::ZeroVariance,
        })
        .collect();
    Ok(collect_scores(parts))
}

/// Marginal feasible-GLS slopes.
///
/// For each column: OLS residuals, their sample autocovariances up to lag
/// `band`, the banded (or Bartlett-tapered) Toeplitz estimate `S`, then
/// `(x' S^-1 x)^-1 x' S^-1 y`. Because `S` is symmetric a single solve
/// `S a = x` gives both quadratic forms.
pub fn glss_scores(x: &DMatrix<f64>, y: &[f64], band: usize, taper: bool, standardize: bool) -> Result<MarginalScores> {
    check_inputs(x, y)?;
    let n = x.nrows();
    if band >= n {
        return Err(Error::LagTooLong { max_lag: band, n });
    }
    let yc = centered(y);
    let parts = (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let Some(c) = prepared_column(x, j, standardize) else {
                return ColumnScore::ZeroVariance;
            };
            glss_column(&c, &yc, band, taper)
        })
        .collect();
    Ok(collect_scores(parts))
}

fn glss_column(c: &[f64], yc: &[f64], band: usize, taper: bool) -> ColumnScore {
    let n = c.len();
    let rho = dot(c, yc) / dot(c, c);
    let resid: Vec<f64> = yc.iter().zip(c).map(|(y, x)| y - x * rho).collect();
    let Ok(gamma) = sample_autocov(&resid, band) else {
        return ColumnScore::Singular;
    };
    let Ok(cov) = build_cov(&gamma, band, n, taper) else {
        return ColumnScore::Singular;
    };
    let Ok(factor) = cov.factor() else {
        return ColumnScore::Singular;
    };
    let a = factor.solve(c);
    let den = dot(&a, c);
    if !(den > 0.0) || !den.is_finite() {
        return ColumnScore::Singular;
    }
    let v = dot(&a, yc) / den;
    if factor.shift() > 0.0 {
        ColumnScore::Escalated(v, factor.shift() / cov.gamma0())
    } else {
        ColumnScore::Value(v)
    }
}

pub fn marginal_scores(x: &DMatrix<f64>, y: &[f64], method: Method, standardize: bool) -> Result<MarginalScores> {
    match method {
        Method::Sis => sis_scores(x, y, standardize),
        Method::Glss { band, taper } => glss_scores(x, y, band, taper, standardize),
    }
}

/// Indices by decreasing `|score|`; ties keep ascending index order.
pub fn rank(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].abs().total_cmp(&scores[a].abs()).then(a.cmp(&b)));
    idx
}

/// Apply a selection rule; returns ascending indices.
pub fn select(scores: &[f64], rule: Rule) -> Vec<usize> {
    let mut out = match rule {
        Rule::Threshold { gamma } => (0..scores.len())
            .filter(|&j| scores[j].abs() >= gamma && !(gamma <= 0.0 && scores[j] == 0.0))
            .collect(),
        Rule::Top { d } => {
            let mut r = rank(scores);
            r.truncate(d);
            r
        }
    };
    out.sort_unstable();
    out
}

/// True iff every index of `true_support` is in `selected`.
pub fn coverage(selected: &[usize], true_support: &[usize]) -> bool {
    let s: BTreeSet<usize> = selected.iter().copied().collect();
    true_support.iter().all(|j| s.contains(j))
}

/// Score, rank and select in one pass.
pub fn screen(x: &DMatrix<f64>, y: &[f64], method: Method, standardize: bool, rule: Rule) -> Result<ScreeningResult> {
    let MarginalScores { values, warnings } = marginal_scores(x, y, method, standardize)?;
    let ranking = rank(&values);
    let selected = select(&values, rule);
    Ok(ScreeningResult { scores: values, ranking, selected, method, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
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
    fn exact_projection_scores_one() {
        let y = randn(30, 1);
        let x = DMatrix::from_column_slice(30, 1, &y);
        let s = sis_scores(&x, &y, false).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_column_scores_zero() {
        let y = vec![1.0, -1.0, 1.0, -1.0];
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 1.0, -1.0, -1.0]);
        let s = sis_scores(&x, &y, true).unwrap();
        assert_eq!(s.values[0], 0.0);
    }

    #[test]
    fn sis_matches_per_column_least_squares() {
        let x = randn_matrix(6, 3, 2);
        let y = randn(6, 3);
        let s = sis_scores(&x, &y, false).unwrap();
        let yc = nalgebra::DVector::from_vec(centered(&y));
        for j in 0..3 {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            let a = DMatrix::from_column_slice(6, 1, &centered(&col));
            let sol = a.svd(true, true).solve(&yc, 1e-15).unwrap();
            assert!((s.values[j] - sol[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn glss_band_zero_equals_sis() {
        let x = randn_matrix(50, 8, 4);
        let y = randn(50, 5);
        for standardize in [false, true] {
            let a = sis_scores(&x, &y, standardize).unwrap().values;
            for taper in [false, true] {
                let b = glss_scores(&x, &y, 0, taper, standardize).unwrap().values;
                for (u, v) in a.iter().zip(&b) {
                    assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
                }
            }
        }
    }

    /// Dense oracle: densify the covariance and invert it explicitly.
    pub(crate) fn dense_glss(x: &DMatrix<f64>, y: &[f64], band: usize, taper: bool) -> Vec<f64> {
        let n = x.nrows();
        let yc = nalgebra::DVector::from_vec(centered(y));
        (0..x.ncols())
            .map(|j| {
                let col: Vec<f64> = x.column(j).iter().copied().collect();
                let c = nalgebra::DVector::from_vec(centered(&col));
                let rho = c.dot(&yc) / c.dot(&c);
                let resid = &yc - &c * rho;
                let gamma: Vec<f64> = (0..=band)
                    .map(|r| (0..n - r).map(|t| resid[t] * resid[t + r]).sum::<f64>() / n as f64)
                    .collect();
                let s = DMatrix::from_fn(n, n, |a, b| {
                    let d = a.abs_diff(b);
                    if d > band {
                        0.0
                    } else if taper && d > 0 {
                        gamma[d] * (1.0 - d as f64 / band as f64).max(0.0)
                    } else {
                        gamma[d]
                    }
                });
                let inv = s.try_inverse().unwrap();
                let num = (c.transpose() * &inv * &yc)[0];
                let den = (c.transpose() * &inv * &c)[0];
                num / den
            })
            .collect()
    }

    #[test]
    fn glss_matches_dense_oracle() {
        let x = randn_matrix(20, 2, 6);
        let mut y = randn(20, 7);
        for t in 1..20 {
            y[t] += 0.6 * y[t - 1];
        }
        let got = glss_scores(&x, &y, 3, true, false).unwrap().values;
        let want = dense_glss(&x, &y, 3, true);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-8 * w.abs().max(1e-12));
        }
    }

    #[test]
    fn zero_variance_column_scores_zero_with_warning() {
        let mut x = randn_matrix(30, 3, 8);
        x.column_mut(1).fill(4.2);
        let y = randn(30, 9);
        for method in [Method::Sis, Method::Glss { band: 5, taper: true }] {
            let r = screen(&x, &y, method, true, Rule::Top { d: 3 }).unwrap();
            assert_eq!(r.scores[1], 0.0);
            assert!(r.warnings.contains(&ScreenWarning::ZeroVariance { column: 1 }));
            assert_eq!(*r.ranking.last().unwrap(), 1);
        }
    }

    #[test]
    fn glss_band_must_be_below_n() {
        let x = randn_matrix(10, 2, 1);
        let y = randn(10, 2);
        assert!(glss_scores(&x, &y, 10, true, true).is_err());
    }

    #[test]
    fn selection_rules() {
        assert_eq!(select(&[3.0, -1.0, 2.0], Rule::Top { d: 2 }), vec![0, 2]);
        assert_eq!(select(&[0.0, -1.0, 2.0, 0.0], Rule::Threshold { gamma: 0.0 }), vec![1, 2]);
        assert_eq!(select(&[1.0, -1.0, 0.5], Rule::Threshold { gamma: 1.0 }), vec![0, 1]);
        assert_eq!(rank(&[1.0, -1.0, 2.0, 1.0]), vec![2, 0, 1, 3]);
    }

    #[test]
    fn coverage_cases() {
        assert!(coverage(&[1, 2], &[]));
        assert!(coverage(&[1, 2, 3], &[2, 3]));
        assert!(!coverage(&[1, 2], &[2, 3]));
    }

    #[test]
    fn raw_scores_scale_inversely() {
        let x = randn_matrix(40, 3, 10);
        let y = randn(40, 11);
        let mut x2 = x.clone();
        x2.column_mut(2).scale_mut(4.0);
        let a = sis_scores(&x, &y, false).unwrap().values;
        let b = sis_scores(&x2, &y, false).unwrap().values;
        assert!((b[2] - a[2] / 4.0).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn permutation_equivariance(seed in 0u64..1000, glss in any::<bool>()) {
            let (n, p) = (50, 20);
            let x = randn_matrix(n, p, seed);
            let y = randn(n, seed + 1);
            let mut perm: Vec<usize> = (0..p).collect();
            let mut r = rng::stream(seed, 9);
            for i in (1..p).rev() {
                perm.swap(i, r.random_range(0..=i));
            }
            let xp = DMatrix::from_fn(n, p, |i, j| x[(i, perm[j])]);
            let method = if glss { Method::Glss { band: 5, taper: true } } else { Method::Sis };
            let a = screen(&x, &y, method, true, Rule::Top { d: 7 }).unwrap();
            let b = screen(&xp, &y, method, true, Rule::Top { d: 7 }).unwrap();
            for j in 0..p {
                prop_assert!((b.scores[j] - a.scores[perm[j]]).abs() <= 1e-12 * a.scores[perm[j]].abs().max(1.0));
            }
            let mapped: BTreeSet<usize> = b.selected.iter().map(|&j| perm[j]).collect();
            let orig: BTreeSet<usize> = a.selected.iter().copied().collect();
            prop_assert_eq!(mapped, orig);
        }

        #[test]
        fn top_d_is_nested(scores in proptest::collection::vec(-3.0f64..3.0, 1..40), d1 in 0usize..40, d2 in 0usize..40) {
            let (lo, hi) = (d1.min(d2), d1.max(d2));
            let a = select(&scores, Rule::Top { d: lo });
            let b: BTreeSet<usize> = select(&scores, Rule::Top { d: hi }).into_iter().collect();
            prop_assert!(a.iter().all(|j| b.contains(j)));
        }

        #[test]
        fn standardized_ranking_is_scale_invariant(seed in 0u64..1000, scale in 0.01f64..100.0, col in 0usize..6) {
            let x = randn_matrix(30, 6, seed);
            let y = randn(30, seed + 3);
            let mut xs = x.clone();
            xs.column_mut(col).scale_mut(scale);
            for method in [Method::Sis, Method::Glss { band: 4, taper: true }] {
                let a = screen(&x, &y, method, true, Rule::Top { d: 3 }).unwrap();
                let b = screen(&xs, &y, method, true, Rule::Top { d: 3 }).unwrap();
                prop_assert_eq!(a.ranking, b.ranking);
                prop_assert_eq!(a.selected, b.selected);
            }
        }
    }
}
