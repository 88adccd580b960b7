//! Banded and tapered Toeplitz autocovariance estimates with banded
//! Cholesky solves.
//!
//! The n x n matrix is never stored: a `BandedToeplitzCov` keeps the
//! weighted autocovariances `c_0..c_l` and factorizes in `O(n l^2)`.

use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Band length used by the GLS screen unless overridden.
pub const DEFAULT_BAND: usize = 15;

/// Ridge multipliers (of `gamma_0`) tried in order when factorizing.
pub const RIDGE_ESCALATION: [f64; 3] = [0.0, 1e-8, 1e-6];

/// Sample autocovariances `gamma_0..gamma_L` (divisor n, uncentered).
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovSeq {
    pub gamma: Vec<f64>,
    pub n: usize,
}

impl AutocovSeq {
    pub fn max_lag(&self) -> usize {
        self.gamma.len().saturating_sub(1)
    }
}

/// `gamma_r = (1/n) sum_{t < n-r} e_t e_{t+r}` for `r = 0..=max_lag`.
pub fn sample_autocov(resid: &[f64], max_lag: usize) -> Result<AutocovSeq> {
    let n = resid.len();
    if max_lag >= n {
        return Err(Error::LagTooLong { max_lag, n });
    }
    if resid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("residuals must be finite".into()));
    }
    let inv_n = 1.0 / n as f64;
    let gamma = (0..=max_lag)
        .map(|r| resid[..n - r].iter().zip(&resid[r..]).map(|(a, b)| a * b).sum::<f64>() * inv_n)
        .collect();
    Ok(AutocovSeq { gamma, n })
}

/// Bartlett weight `max(1 - r/l, 0)`, with weight one at lag zero.
pub fn bartlett_weight(r: usize, l: usize) -> f64 {
    if r == 0 {
        1.0
    } else if l == 0 {
        0.0
    } else {
        (1.0 - r as f64 / l as f64).max(0.0)
    }
}

/// Lower-triangular banded Cholesky factor; row `i` holds `L[i, i-b..=i]`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    b: usize,
    data: Vec<f64>,
    ridge: f64,
}

impl BandedCholesky {
    /// Factorize the symmetric Toeplitz matrix with first row `c`
    /// (entries beyond `c.len()` are zero) plus `shift` on the diagonal.
    pub fn factorize(c: &[f64], n: usize, shift: f64) -> Option<Self> {
        // Trailing zero lags do not widen the band.
        let b = c.iter().rposition(|v| *v != 0.0).unwrap_or(0).min(n.saturating_sub(1));
        let w = b + 1;
        let mut data = vec![0.0; n * w];
        let diag = c.first().copied().unwrap_or(0.0) + shift;
        let tiny = diag.abs() * 1e-14;
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            for j in j0..=i {
                let mut s = if i == j { diag } else { c[i - j] };
                let k0 = j0.max(j.saturating_sub(b));
                for k in k0..j {
                    s -= data[i * w + (i - k)] * data[j * w + (j - k)];
                }
                if i == j {
                    if !(s > tiny) || !s.is_finite() {
                        return None;
                    }
                    data[i * w] = s.sqrt();
                } else {
                    data[i * w + (i - j)] = s / data[j * w];
                }
            }
        }
        Some(Self { n, b, data, ridge: shift })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }

    /// Absolute diagonal shift that made the factorization succeed.
    pub fn shift(&self) -> f64 {
        self.ridge
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "rhs length");
        let (n, b, w) = (self.n, self.b, self.b + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(b)..i {
                s -= self.data[i * w + (i - k)] * x[k];
            }
            x[i] = s / self.data[i * w];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + b + 1).min(n) {
                s -= self.data[k * w + (k - i)] * x[k];
            }
            x[i] = s / self.data[i * w];
        }
    }
}

/// Symmetric Toeplitz covariance truncated (and optionally tapered) at lag `l`.
pub struct BandedToeplitzCov {
    /// Weighted autocovariances `c_r = gamma_r w(r)`, `r = 0..=l`.
    entries: Vec<f64>,
    gamma: AutocovSeq,
    l: usize,
    n: usize,
    tapered: bool,
    escalated: OnceLock<std::result::Result<Arc<BandedCholesky>, Error>>,
    by_ridge: Mutex<Vec<(u64, Arc<BandedCholesky>)>>,
}

impl Clone for BandedToeplitzCov {
    fn clone(&self) -> Self {
        Self::from_parts(self.gamma.clone(), self.entries.clone(), self.l, self.n, self.tapered)
    }
}

impl fmt::Debug for BandedToeplitzCov {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BandedToeplitzCov")
            .field("entries", &self.entries)
            .field("l", &self.l)
            .field("n", &self.n)
            .field("tapered", &self.tapered)
            .finish()
    }
}

impl BandedToeplitzCov {
    fn from_parts(gamma: AutocovSeq, entries: Vec<f64>, l: usize, n: usize, tapered: bool) -> Self {
        Self {
            entries,
            gamma,
            l,
            n,
            tapered,
            escalated: OnceLock::new(),
            by_ridge: Mutex::new(Vec::new()),
        }
    }

    pub fn band(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_tapered(&self) -> bool {
        self.tapered
    }

    pub fn gamma0(&self) -> f64 {
        self.entries.first().copied().unwrap_or(0.0)
    }

    /// Weighted autocovariances defining the first row.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn autocov(&self) -> &AutocovSeq {
        &self.gamma
    }

    /// Entry `(i, j)` of the logical matrix.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let d = i.abs_diff(j);
        self.entries.get(d).copied().unwrap_or(0.0)
    }

    /// Dense n x n copy.
    pub fn densify(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// `self * v` without densifying.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let b = self.entries.len().saturating_sub(1);
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(b);
                let hi = (i + b).min(n - 1);
                (lo..=hi).map(|j| self.get(i, j) * v[j]).sum()
            })
            .collect()
    }

    /// Factorization with `ridge * gamma_0` added to the diagonal, cached per ridge.
    pub fn factor_with_ridge(&self, ridge: f64) -> Result<Arc<BandedCholesky>> {
        let key = ridge.to_bits();
        let mut cache = self.by_ridge.lock().expect("factor cache poisoned");
        if let Some((_, f)) = cache.iter().find(|(k, _)| *k == key) {
            return Ok(Arc::clone(f));
        }
        let f = BandedCholesky::factorize(&self.entries, self.n, ridge * self.gamma0())
            .map(Arc::new)
            .ok_or(Error::SingularCovariance)?;
        cache.push((key, Arc::clone(&f)));
        Ok(f)
    }

    /// Factorization under the ridge escalation policy, computed once.
    pub fn factor(&self) -> Result<Arc<BandedCholesky>> {
        self.escalated
            .get_or_init(|| {
                if !(self.gamma0() > 0.0) {
                    return Err(Error::SingularCovariance);
                }
                for ridge in RIDGE_ESCALATION {
                    if let Ok(f) = self.factor_with_ridge(ridge) {
                        return Ok(f);
                    }
                }
                Err(Error::SingularCovariance)
            })
            .clone()
    }

    /// Ridge multiplier the escalation policy settled on.
    pub fn escalation_ridge(&self) -> Result<f64> {
        let f = self.factor()?;
        Ok(if self.gamma0() > 0.0 { f.shift() / self.gamma0() } else { 0.0 })
    }

    /// Solve with the escalation policy.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::Dimension(format!("rhs has {} entries, matrix is {}", b.len(), self.n)));
        }
        Ok(self.factor()?.solve(b))
    }
}

/// Truncate `gamma` at lag `l` (Bartlett-weighted when `taper`) as an `n x n` matrix.
pub fn build_cov(gamma: &AutocovSeq, l: usize, n: usize, taper: bool) -> Result<BandedToeplitzCov> {
    if l > gamma.max_lag() || gamma.gamma.is_empty() {
        return Err(Error::BandTooLong { band: l, available: gamma.max_lag() });
    }
    let entries = (0..=l)
        .map(|r| {
            let w = if taper { bartlett_weight(r, l) } else { 1.0 };
            gamma.gamma[r] * w
        })
        .collect();
    Ok(BandedToeplitzCov::from_parts(gamma.clone(), entries, l, n, taper))
}

/// Solve `(cov + ridge * gamma_0 * I) x = b` by banded Cholesky.
pub fn solve_banded(cov: &BandedToeplitzCov, b: &[f64], ridge: f64) -> Result<Vec<f64>> {
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(Error::Parameter(format!("ridge {ridge} must be nonnegative")));
    }
    if b.len() != cov.dim() {
        return Err(Error::Dimension(format!("rhs has {} entries, matrix is {}", b.len(), cov.dim())));
    }
    Ok(cov.factor_with_ridge(ridge)?.solve(b))
}
