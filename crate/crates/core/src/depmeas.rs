//! Functional dependence measures of known linear and VAR processes, and
//! closed-form asymptotic variances of the marginal OLS and GLS slopes
//! under AR(1) errors.
//!
//! For a causal linear process `eps_i = sum_j f_j e_{i-j}` the physical
//! dependence of `eps_i` on the innovation `i` steps back is
//! `delta_q(i) = |f_i| * ||e_0 - e_0*||_q`, and the cumulative measure is
//! the tail sum `Delta_{m,q} = sum_{i >= m} delta_q(i)`. For a stable VAR
//! the same role is played by `||B^i||_2`.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dgp::{dense_spectral_radius, Distribution, InnovationSpec};
use crate::error::{Error, Result};
use crate::rng;

/// How coefficients beyond the stored prefix behave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailModel {
    /// Coefficients beyond the prefix are zero.
    Finite,
    /// `f_j = f_K ratio^(j-K)` for `j > K` (K the last stored index).
    Geometric { ratio: f64 },
    /// `f_j = constant * j^(-exponent)` for `j > K`, `exponent > 1`.
    Polynomial { constant: f64, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProcessSpec {
    /// `f_0, f_1, ..., f_K`.
    pub coefs: Vec<f64>,
    pub tail: TailModel,
    pub innovation: InnovationSpec,
}

impl LinearProcessSpec {
    /// AR(1) with coefficient `rho`: `f_j = rho^j`.
    pub fn ar1(rho: f64, innovation: InnovationSpec) -> Self {
        Self { coefs: vec![1.0], tail: TailModel::Geometric { ratio: rho }, innovation }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefs.is_empty() {
            return Err(Error::Parameter("need at least one coefficient".into()));
        }
        match self.tail {
            TailModel::Finite => Ok(()),
            TailModel::Geometric { ratio } if ratio.abs() < 1.0 => Ok(()),
            TailModel::Geometric { ratio } => Err(Error::Parameter(format!("geometric ratio {ratio} is not summable"))),
            TailModel::Polynomial { exponent, .. } if exponent > 1.0 => Ok(()),
            TailModel::Polynomial { exponent, .. } => {
                Err(Error::Parameter(format!("polynomial exponent {exponent} must exceed 1")))
            }
        }
    }

    /// `|f_j|`.
    pub fn abs_coef(&self, j: usize) -> f64 {
        let k = self.coefs.len() - 1;
        if j <= k {
            return self.coefs[j].abs();
        }
        match self.tail {
            TailModel::Finite => 0.0,
            TailModel::Geometric { ratio } => self.coefs[k].abs() * ratio.abs().powi((j - k) as i32),
            TailModel::Polynomial { constant, exponent } => constant.abs() * (j as f64).powf(-exponent),
        }
    }

    /// `sum_{j >= m} |f_j|` with the declared tail summed analytically.
    pub fn abs_tail_sum(&self, m: usize) -> f64 {
        let k = self.coefs.len() - 1;
        let head: f64 = (m..=k).map(|j| self.coefs[j].abs()).sum();
        let start = m.max(k + 1);
        let tail = match self.tail {
            TailModel::Finite => 0.0,
            TailModel::Geometric { ratio } => self.abs_coef(start) / (1.0 - ratio.abs()),
            TailModel::Polynomial { constant, exponent } => constant.abs() * hurwitz_tail(start, exponent),
        };
        head + tail
    }

    /// Smallest `m` where the tail sum falls below `1e-12` of the total.
    pub fn default_horizon(&self) -> usize {
        let total = self.abs_tail_sum(0);
        if total == 0.0 {
            return self.coefs.len();
        }
        let target = 1e-12 * total;
        let (mut lo, mut hi) = (0usize, self.coefs.len().max(1));
        while self.abs_tail_sum(hi) > target {
            lo = hi;
            hi = hi.saturating_mul(2);
            if hi > 1 << 40 {
                return hi;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.abs_tail_sum(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// `sum_{j >= m} j^(-s)` for `m >= 1`, `s > 1`: explicit terms then an
/// Euler-Maclaurin remainder.
fn hurwitz_tail(m: usize, s: f64) -> f64 {
    let m = m.max(1);
    let cut = m + 64;
    let head: f64 = (m..cut).map(|j| (j as f64).powf(-s)).sum();
    let a = cut as f64;
    head + a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) + s * a.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0) / 720.0
}

/// Cumulative dependence profile `values[m]`, `m = 0..=m_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub values: Vec<f64>,
    /// `a` in `values[m] ~ m^-a`, from a log-log fit over the last decade of m.
    pub fitted_exponent: Option<f64>,
    /// `r` in `values[m] ~ r^m`, from a log-linear fit over the last half of m.
    pub fitted_rate: Option<f64>,
}

impl DecayProfile {
    fn from_values(values: Vec<f64>) -> Self {
        let m_max = values.len().saturating_sub(1);
        let fitted_exponent = {
            let lo = (m_max / 10).max(1);
            let pts: Vec<(f64, f64)> = (lo..=m_max)
                .filter(|&m| values[m] > 0.0)
                .map(|m| ((m as f64).ln(), values[m].ln()))
                .collect();
            slope(&pts).map(|s| -s)
        };
        let fitted_rate = {
            let lo = m_max / 2;
            let pts: Vec<(f64, f64)> = (lo..=m_max)
                .filter(|&m| values[m] > 1e-300)
                .map(|m| (m as f64, values[m].ln()))
                .collect();
            slope(&pts).map(f64::exp)
        };
        Self { values, fitted_exponent, fitted_rate }
    }

    /// `m,value` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "m,value")?;
        for (m, v) in self.values.iter().enumerate() {
            writeln!(w, "{m},{v:.17e}")?;
        }
        Ok(())
    }
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `E|Z|^q` for standard normal `Z`.
fn gaussian_abs_moment(q: f64) -> f64 {
    (q / 2.0 * 2f64.ln() + ln_gamma((q + 1.0) / 2.0) - 0.5 * std::f64::consts::PI.ln()).exp()
}

/// `||e_0 - e_0*||_q` for an iid copy `e_0*` of a scalar innovation.
///
/// Gaussian innovations use the closed form; Student-t uses `mc_reps`
/// Monte-Carlo pairs drawn from `seed`.
pub fn innovation_qnorm(spec: &InnovationSpec, q: f64, mc_reps: usize, seed: u64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Parameter(format!("q = {q} must be at least 1")));
    }
    spec.validate(1)?;
    match spec.dist {
        Distribution::Gaussian => {
            // e_0 - e_0* ~ N(0, 2 sigma^2)
            let sd = (2.0 * spec.variance).sqrt();
            Ok(sd * gaussian_abs_moment(q).powf(1.0 / q))
        }
        Distribution::StudentT { dof } => {
            if q >= dof as f64 {
                return Err(Error::MomentDoesNotExist { q, dof });
            }
            if mc_reps == 0 {
                return Err(Error::Parameter("mc_reps must be positive".into()));
            }
            let nu = dof as f64;
            let scale = (spec.variance * (nu - 2.0) / nu).sqrt();
            let chi = ChiSquared::new(nu).expect("dof > 2");
            let mut r = rng::stream(seed, 0);
            let mut acc = 0.0;
            for _ in 0..mc_reps {
                let draw = |r: &mut rng::SimRng| {
                    let z: f64 = r.sample(StandardNormal);
                    z / (chi.sample(r) / nu).sqrt()
                };
                let d = scale * (draw(&mut r) - draw(&mut r));
                acc += d.abs().powf(q);
            }
            Ok((acc / mc_reps as f64).powf(1.0 / q))
        }
    }
}

/// Cumulative functional dependence measure of a linear process.
pub fn fdm_linear(spec: &LinearProcessSpec, q: f64, m_max: usize, mc_reps: usize, seed: u64) -> Result<DecayProfile> {
    spec.validate()?;
    let norm = innovation_qnorm(&spec.innovation, q, mc_reps, seed)?;
    let values = (0..=m_max).map(|m| norm * spec.abs_tail_sum(m)).collect();
    Ok(DecayProfile::from_values(values))
}

/// Companion matrix of a VAR(k) with `p x p` blocks `B_1..B_k`.
pub fn companion(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let k = blocks.len();
    if k == 0 {
        return Err(Error::Parameter("need at least one block".into()));
    }
    let p = blocks[0].nrows();
    if blocks.iter().any(|b| b.shape() != (p, p)) {
        return Err(Error::Dimension("VAR blocks must all be p x p".into()));
    }
    let mut c = DMatrix::zeros(k * p, k * p);
    for (i, b) in blocks.iter().enumerate() {
        c.view_mut((0, i * p), (p, p)).copy_from(b);
    }
    for i in 1..k {
        c.view_mut((i * p, (i - 1) * p), (p, p)).fill_with_identity();
    }
    Ok(c)
}

/// `Phi_m = c * sum_{i >= m} ||B^i||_2` for the companion form of a stable VAR(k).
pub fn var_phi_decay(blocks: &[DMatrix<f64>], m_max: usize, innov_norm: f64) -> Result<DecayProfile> {
    let b = companion(blocks)?;
    let radius = dense_spectral_radius(&b);
    if !(radius < 1.0) {
        return Err(Error::Unstable(radius));
    }
    let dim = b.nrows();
    let mut norms = Vec::with_capacity(m_max + 1);
    let mut power = DMatrix::<f64>::identity(dim, dim);
    let mut i = 0;
    // Extend past m_max until the terms are negligible so the tail sums are complete.
    loop {
        let nrm = if power.iter().all(|v| *v == 0.0) { 0.0 } else { power.clone().singular_values().max() };
        norms.push(nrm);
        if i >= m_max && (nrm <= 1e-17 * norms[m_max] || i > m_max + 100_000) {
            break;
        }
        power = &b * &power;
        i += 1;
    }
    let mut tail = vec![0.0; norms.len() + 1];
    for i in (0..norms.len()).rev() {
        tail[i] = tail[i + 1] + norms[i];
    }
    let values = tail[..=m_max].iter().map(|v| innov_norm * v).collect();
    Ok(DecayProfile::from_values(values))
}

/// VAR(1) convenience wrapper.
pub fn var1_phi_decay(b1: &DMatrix<f64>, m_max: usize) -> Result<DecayProfile> {
    var_phi_decay(std::slice::from_ref(b1), m_max, 1.0)
}

/// Asymptotic variances `(J, V)` of `sqrt(n)(estimate - truth)` for the
/// infeasible GLS slope (`J`) and the OLS slope (`V`) when `x` is iid and
/// the error is AR(1) with innovation variance `sigma_e2`.
pub fn asy_var_case1(alpha: f64, sigma_e2: f64, sigma_x2: f64) -> Result<(f64, f64)> {
    check_ar(alpha, "alpha")?;
    check_pos(sigma_e2, sigma_x2)?;
    let j = sigma_e2 / (sigma_x2 * (1.0 + alpha * alpha));
    let v = sigma_e2 / (sigma_x2 * (1.0 - alpha * alpha));
    Ok((j, v))
}

/// As [`asy_var_case1`] with `x_t = phi x_{t-1} + eta_t`, `Var(eta) = sigma_eta2`.
///
/// `J = (1 - phi^2) s_e / ((1 + alpha^2 - 2 phi alpha) s_eta)` and
/// `V = (1 - phi^2)(1 + phi alpha) s_e / ((1 - alpha^2)(1 - phi alpha) s_eta)`,
/// the latter being `sum_h gamma_x(h) gamma_eps(h) / gamma_x(0)^2`.
pub fn asy_var_case2(alpha: f64, phi: f64, sigma_e2: f64, sigma_eta2: f64) -> Result<(f64, f64)> {
    check_ar(alpha, "alpha")?;
    check_ar(phi, "phi")?;
    check_pos(sigma_e2, sigma_eta2)?;
    let j = (1.0 - phi * phi) * sigma_e2 / ((1.0 + alpha * alpha - 2.0 * phi * alpha) * sigma_eta2);
    let v = (1.0 - phi * phi) * (1.0 + phi * alpha) * sigma_e2
        / ((1.0 - alpha * alpha) * (1.0 - phi * alpha) * sigma_eta2);
    Ok((j, v))
}

/// The OLS variance expression `(1 + phi^2) s_e / ((1 - alpha^2) s_eta)`
/// as commonly quoted for this setting. It disagrees with the exact long-run
/// variance whenever `phi != 0` and is kept for comparison only.
pub fn asy_var_case2_quoted_v(alpha: f64, phi: f64, sigma_e2: f64, sigma_eta2: f64) -> Result<f64> {
    check_ar(alpha, "alpha")?;
    check_ar(phi, "phi")?;
    check_pos(sigma_e2, sigma_eta2)?;
    Ok((1.0 + phi * phi) * sigma_e2 / ((1.0 - alpha * alpha) * sigma_eta2))
}

fn check_ar(v: f64, name: &str) -> Result<()> {
    if v.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {v} must satisfy |{name}| < 1")))
    }
}

fn check_pos(a: f64, b: f64) -> Result<()> {
    if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter("variances must be positive".into()))
    }
}
