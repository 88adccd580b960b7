//! Synthetic covariate, error and response processes.
//!
//! Covariates follow a stationary VAR(1) `x_t = A x_{t-1} + eta_t`, errors a
//! scalar AR(1) `eps_t = alpha eps_{t-1} + e_t`, and the response is
//! `y = X beta + eps`. Innovations are Gaussian or multivariate Student-t
//! drawn as a scale mixture `Z / sqrt(W / dof)` with a single chi-square `W`
//! shared by all coordinates of one draw.
//!
//! `InnovationSpec::variance` is always the *realized* variance. For a
//! Student-t with `dof` degrees of freedom the Gaussian core is rescaled by
//! `(dof - 2) / dof` so the draw's covariance equals `variance * C`, where
//! `C` is the unit-diagonal structure (identity, Toeplitz, equicorrelated)
//! or the explicit matrix.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

/// Default number of discarded start-up steps.
pub const DEFAULT_BURN_IN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Distribution {
    Gaussian,
    StudentT { dof: u32 },
}

/// Correlation structure of an innovation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CovStructure {
    Identity,
    /// Entries `rho^|i-j|`.
    ToeplitzRho { rho: f64 },
    /// Unit diagonal, `rho` off the diagonal.
    Equicorrelated { rho: f64 },
    /// Row-major symmetric positive-definite matrix.
    Explicit { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnovationSpec {
    pub dist: Distribution,
    #[serde(default = "identity_cov")]
    pub cov: CovStructure,
    #[serde(default = "unit")]
    pub variance: f64,
}

fn identity_cov() -> CovStructure {
    CovStructure::Identity
}

fn unit() -> f64 {
    1.0
}

impl InnovationSpec {
    pub fn gaussian(cov: CovStructure) -> Self {
        Self { dist: Distribution::Gaussian, cov, variance: 1.0 }
    }

    pub fn student_t(dof: u32, cov: CovStructure) -> Self {
        Self { dist: Distribution::StudentT { dof }, cov, variance: 1.0 }
    }

    pub fn with_variance(mut self, variance: f64) -> Self {
        self.variance = variance;
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if let Distribution::StudentT { dof } = self.dist {
            if dof <= 2 {
                return Err(Error::Parameter(format!(
                    "student-t needs dof > 2 for a finite covariance, got {dof}"
                )));
            }
        }
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::Parameter(format!("innovation variance {} must be positive", self.variance)));
        }
        match &self.cov {
            CovStructure::Identity => {}
            CovStructure::ToeplitzRho { rho } => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::Parameter(format!("toeplitz rho {rho} must lie in (-1, 1)")));
                }
            }
            CovStructure::Equicorrelated { rho } => {
                if !(0.0..1.0).contains(rho) {
                    return Err(Error::Parameter(format!("equicorrelation {rho} must lie in [0, 1)")));
                }
            }
            CovStructure::Explicit { rows } => {
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    return Err(Error::Dimension(format!("explicit covariance must be {p}x{p}")));
                }
            }
        }
        Ok(())
    }

    /// Dense covariance implied by the spec (for tests and small problems).
    pub fn covariance(&self, p: usize) -> DMatrix<f64> {
        let c = match &self.cov {
            CovStructure::Identity => DMatrix::identity(p, p),
            CovStructure::ToeplitzRho { rho } => {
                DMatrix::from_fn(p, p, |i, j| rho.powi((i as i32 - j as i32).abs()))
            }
            CovStructure::Equicorrelated { rho } => {
                DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { *rho })
            }
            CovStructure::Explicit { rows } => DMatrix::from_fn(p, p, |i, j| rows[i][j]),
        };
        c * self.variance
    }
}

/// VAR(1) coefficient matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VarCoefSpec {
    Diag { gamma: f64 },
    /// Entries `base^(|i-j|+1)`.
    PowerToeplitz { base: f64 },
    Explicit { rows: Vec<Vec<f64>> },
}

impl VarCoefSpec {
    pub fn dense(&self, p: usize) -> DMatrix<f64> {
        match self {
            VarCoefSpec::Diag { gamma } => DMatrix::identity(p, p) * *gamma,
            VarCoefSpec::PowerToeplitz { base } => {
                DMatrix::from_fn(p, p, |i, j| base.powi((i as i32 - j as i32).abs() + 1))
            }
            VarCoefSpec::Explicit { rows } => DMatrix::from_fn(p, p, |i, j| rows[i][j]),
        }
    }

    /// Spectral radius, or an upper bound on it that is below one whenever
    /// the bound suffices to certify stability.
    pub fn spectral_radius(&self, p: usize) -> Result<f64> {
        match self {
            VarCoefSpec::Diag { gamma } => Ok(gamma.abs()),
            VarCoefSpec::PowerToeplitz { base } => {
                let b = base.abs();
                // Symmetric Toeplitz: eigenvalues lie within the range of the symbol.
                if b < 1.0 {
                    let bound = b * (1.0 + b) / (1.0 - b);
                    if bound < 1.0 {
                        return Ok(bound);
                    }
                }
                Ok(dense_spectral_radius(&self.dense(p)))
            }
            VarCoefSpec::Explicit { rows } => {
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    return Err(Error::Dimension(format!("explicit VAR matrix must be {p}x{p}")));
                }
                Ok(dense_spectral_radius(&self.dense(p)))
            }
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let r = self.spectral_radius(p)?;
        if !(r < 1.0) {
            return Err(Error::Unstable(r));
        }
        Ok(())
    }
}

pub fn dense_spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArErrorSpec {
    pub alpha: f64,
    pub innovation: InnovationSpec,
    /// Start from a stationary draw instead of zero.
    #[serde(default)]
    pub stationary_start: bool,
}

impl ArErrorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.abs() < 1.0) {
            return Err(Error::Parameter(format!("AR coefficient {} must satisfy |alpha| < 1", self.alpha)));
        }
        self.innovation.validate(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateSpec {
    pub coef: VarCoefSpec,
    pub innovation: InnovationSpec,
}

/// Sparse coefficient vector: zero-based indices and their values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseBeta {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseBeta {
    pub fn leading(values: &[f64]) -> Self {
        Self { indices: (0..values.len()).collect(), values: values.to_vec() }
    }

    pub fn dense(&self, p: usize) -> Vec<f64> {
        let mut b = vec![0.0; p];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            b[i] = v;
        }
        b
    }

    /// Indices of the nonzero entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .indices
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| *i)
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Full recipe for one Monte-Carlo scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDesign {
    pub n: usize,
    pub p: usize,
    pub beta: SparseBeta,
    pub covariates: CovariateSpec,
    pub errors: ArErrorSpec,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Parameter("n must be at least 2".into()));
        }
        if self.beta.indices.len() != self.beta.values.len() {
            return Err(Error::Dimension("beta indices and values differ in length".into()));
        }
        if let Some(&i) = self.beta.indices.iter().find(|&&i| i >= self.p) {
            return Err(Error::Dimension(format!("beta index {i} out of range for p = {}", self.p)));
        }
        if self.beta.support().len() > self.p {
            return Err(Error::Parameter("support larger than p".into()));
        }
        self.covariates.coef.validate(self.p)?;
        self.covariates.innovation.validate(self.p)?;
        self.errors.validate()
    }

    pub fn true_support(&self) -> Vec<usize> {
        self.beta.support()
    }
}

/// One generated replication.
#[derive(Debug, Clone)]
pub struct SimData {
    /// n x p covariates.
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub eps: Vec<f64>,
}

enum Factor {
    Identity,
    Ar(f64),
    Equi(f64),
    Dense(Arc<DMatrix<f64>>),
}

/// Draws innovation vectors with the factorization computed once.
pub struct InnovationSampler {
    dist: Distribution,
    scale: f64,
    factor: Factor,
    p: usize,
    z: Vec<f64>,
}

impl InnovationSampler {
    pub fn new(spec: &InnovationSpec, p: usize) -> Result<Self> {
        spec.validate(p)?;
        let factor = match &spec.cov {
            CovStructure::Identity => Factor::Identity,
            CovStructure::ToeplitzRho { rho } => Factor::Ar(*rho),
            CovStructure::Equicorrelated { rho } => Factor::Equi(*rho),
            CovStructure::Explicit { rows } => {
                let c = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
                let chol = c
                    .cholesky()
                    .ok_or_else(|| Error::Parameter("explicit covariance is not positive definite".into()))?;
                Factor::Dense(Arc::new(chol.unpack()))
            }
        };
        Ok(Self { dist: spec.dist, scale: spec.variance.sqrt(), factor, p, z: vec![0.0; p + 1] })
    }

    /// Fill `out` (length p) with one innovation draw.
    pub fn draw(&mut self, rng: &mut SimRng, out: &mut [f64]) {
        let p = self.p;
        let extra = usize::from(matches!(self.factor, Factor::Equi(_)));
        for z in self.z.iter_mut().take(p + extra) {
            *z = rng.sample(StandardNormal);
        }
        match &self.factor {
            Factor::Identity => out.copy_from_slice(&self.z[..p]),
            Factor::Ar(rho) => {
                // Cholesky factor of rho^|i-j| is the AR(1) recursion along the index.
                let s = (1.0 - rho * rho).sqrt();
                out[0] = self.z[0];
                for j in 1..p {
                    out[j] = rho * out[j - 1] + s * self.z[j];
                }
            }
            Factor::Equi(rho) => {
                let common = rho.sqrt() * self.z[p];
                let s = (1.0 - rho).sqrt();
                for j in 0..p {
                    out[j] = common + s * self.z[j];
                }
            }
            Factor::Dense(l) => {
                for i in 0..p {
                    let mut acc = 0.0;
                    for k in 0..=i {
                        acc += l[(i, k)] * self.z[k];
                    }
                    out[i] = acc;
                }
            }
        }
        let mut scale = self.scale;
        if let Distribution::StudentT { dof } = self.dist {
            let nu = dof as f64;
            let w: f64 = ChiSquared::new(nu).expect("dof > 2 checked").sample(rng);
            scale *= ((nu - 2.0) / w).sqrt();
        }
        if scale != 1.0 {
            out.iter_mut().for_each(|v| *v *= scale);
        }
    }
}

enum Propagator {
    Diag(f64),
    PowerToeplitz(f64),
    Dense(Arc<DMatrix<f64>>),
}

impl Propagator {
    fn new(spec: &VarCoefSpec, p: usize) -> Result<Self> {
        spec.validate(p)?;
        Ok(match spec {
            VarCoefSpec::Diag { gamma } => Propagator::Diag(*gamma),
            VarCoefSpec::PowerToeplitz { base } => Propagator::PowerToeplitz(*base),
            VarCoefSpec::Explicit { .. } => Propagator::Dense(Arc::new(spec.dense(p))),
        })
    }

    /// `out = A x`.
    fn apply(&self, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let p = x.len();
        match self {
            Propagator::Diag(g) => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = g * v;
                }
            }
            Propagator::PowerToeplitz(b) => {
                // (A x)_i = b * (sum_{j<=i} b^{i-j} x_j + sum_{j>i} b^{j-i} x_j)
                let mut fwd = 0.0;
                for i in 0..p {
                    fwd = x[i] + b * fwd;
                    scratch[i] = fwd;
                }
                let mut bwd = 0.0;
                for i in (0..p).rev() {
                    out[i] = b * (scratch[i] + bwd);
                    bwd = b * (x[i] + bwd);
                }
            }
            Propagator::Dense(a) => {
                for i in 0..p {
                    out[i] = (0..p).map(|j| a[(i, j)] * x[j]).sum();
                }
            }
        }
    }
}

/// VAR(1) sampler over rows `x_1..x_n` after `burn_in` discarded steps.
pub fn gen_var1_with_rng(
    coef: &VarCoefSpec,
    innov: &InnovationSpec,
    p: usize,
    n: usize,
    burn_in: usize,
    rng: &mut SimRng,
) -> Result<DMatrix<f64>> {
    let prop = Propagator::new(coef, p)?;
    let mut sampler = InnovationSampler::new(innov, p)?;
    let mut state = vec![0.0; p];
    let mut next = vec![0.0; p];
    let mut eta = vec![0.0; p];
    let mut scratch = vec![0.0; p];
    let mut x = DMatrix::zeros(n, p);
    for t in 0..burn_in + n {
        prop.apply(&state, &mut next, &mut scratch);
        sampler.draw(rng, &mut eta);
        for j in 0..p {
            next[j] += eta[j];
        }
        std::mem::swap(&mut state, &mut next);
        if t >= burn_in {
            let row = t - burn_in;
            for j in 0..p {
                x[(row, j)] = state[j];
            }
        }
    }
    Ok(x)
}

pub fn gen_var1(
    coef: &VarCoefSpec,
    innov: &InnovationSpec,
    p: usize,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    gen_var1_with_rng(coef, innov, p, n, burn_in, &mut rng::stream(seed, 0))
}

pub fn gen_ar_error_with_rng(spec: &ArErrorSpec, n: usize, burn_in: usize, rng: &mut SimRng) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut sampler = InnovationSampler::new(&spec.innovation, 1)?;
    let mut e = [0.0];
    let mut state = 0.0;
    if spec.stationary_start {
        sampler.draw(rng, &mut e);
        state = e[0] / (1.0 - spec.alpha * spec.alpha).sqrt();
    }
    let mut out = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        sampler.draw(rng, &mut e);
        state = spec.alpha * state + e[0];
        if t >= burn_in {
            out.push(state);
        }
    }
    Ok(out)
}

pub fn gen_ar_error(spec: &ArErrorSpec, n: usize, burn_in: usize, seed: u64) -> Result<Vec<f64>> {
    gen_ar_error_with_rng(spec, n, burn_in, &mut rng::stream(seed, 0))
}

/// `y = X beta + eps`.
pub fn gen_response(x: &DMatrix<f64>, beta: &[f64], eps: &[f64]) -> Result<Vec<f64>> {
    if x.ncols() != beta.len() || x.nrows() != eps.len() {
        return Err(Error::Dimension(format!(
            "X is {}x{}, beta has {}, eps has {}",
            x.nrows(),
            x.ncols(),
            beta.len(),
            eps.len()
        )));
    }
    let mut y = eps.to_vec();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            for (yi, xi) in y.iter_mut().zip(x.column(j).iter()) {
                *yi += b * xi;
            }
        }
    }
    Ok(y)
}

/// Generate replication `rep` of a design. Covariates and errors use
/// separate sub-streams of `(design.seed, rep)`.
pub fn generate(design: &SimDesign, rep: u64) -> Result<SimData> {
    design.validate()?;
    let mut xr = rng::substream(design.seed, rep, 1);
    let mut er = rng::substream(design.seed, rep, 2);
    let x = gen_var1_with_rng(
        &design.covariates.coef,
        &design.covariates.innovation,
        design.p,
        design.n,
        design.burn_in,
        &mut xr,
    )?;
    let eps = gen_ar_error_with_rng(&design.errors, design.n, design.burn_in, &mut er)?;
    let y = gen_response(&x, &design.beta.dense(design.p), &eps)?;
    Ok(SimData { x, y, eps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetCase {
    C1,
    C2a,
    C2b,
    C3a,
    C3b,
}

impl std::str::FromStr for PresetCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c1" => Ok(PresetCase::C1),
            "c2a" => Ok(PresetCase::C2a),
            "c2b" => Ok(PresetCase::C2b),
            "c3a" => Ok(PresetCase::C3a),
            "c3b" => Ok(PresetCase::C3b),
            other => Err(Error::Parameter(format!("unknown case id '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetDist {
    Gaussian,
    T5,
}

impl std::str::FromStr for PresetDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(PresetDist::Gaussian),
            "t5" | "t_5" => Ok(PresetDist::T5),
            other => Err(Error::Parameter(format!("unknown distribution '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    /// VAR diagonal coefficient (case c1 only).
    pub gamma: Option<f64>,
    pub alpha: f64,
    pub seed: u64,
}

/// Sample size used by every simulation scenario.
pub const PRESET_N: usize = 200;

/// Variance of a `t_5` error innovation: a standard `t_5` draw.
pub const T5_ERROR_VARIANCE: f64 = 5.0 / 3.0;

/// Build the named simulation scenario.
pub fn preset_design(case: PresetCase, p: usize, dist: PresetDist, params: PresetParams) -> Result<SimDesign> {
    let (coef, cov, beta) = match case {
        PresetCase::C1 => {
            let gamma = params
                .gamma
                .ok_or_else(|| Error::Parameter("case c1 needs gamma".into()))?;
            (VarCoefSpec::Diag { gamma }, CovStructure::Identity, vec![0.5; 6])
        }
        PresetCase::C2a => (
            VarCoefSpec::Diag { gamma: 0.4 },
            CovStructure::ToeplitzRho { rho: 0.3 },
            vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
        ),
        PresetCase::C2b => (
            VarCoefSpec::PowerToeplitz { base: 0.4 },
            CovStructure::Identity,
            vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
        ),
        PresetCase::C3a => (VarCoefSpec::Diag { gamma: 0.4 }, CovStructure::ToeplitzRho { rho: 0.8 }, vec![0.5; 6]),
        PresetCase::C3b => (
            VarCoefSpec::PowerToeplitz { base: 0.4 },
            CovStructure::Equicorrelated { rho: 0.8 },
            vec![0.75; 6],
        ),
    };
    if p < beta.len() {
        return Err(Error::Parameter(format!("p = {p} is smaller than the support size {}", beta.len())));
    }
    let (x_innov, e_innov) = match dist {
        PresetDist::Gaussian => (
            InnovationSpec::gaussian(cov),
            InnovationSpec::gaussian(CovStructure::Identity),
        ),
        PresetDist::T5 => (
            InnovationSpec::student_t(5, cov),
            InnovationSpec::student_t(5, CovStructure::Identity).with_variance(T5_ERROR_VARIANCE),
        ),
    };
    let design = SimDesign {
        n: PRESET_N,
        p,
        beta: SparseBeta::leading(&beta),
        covariates: CovariateSpec { coef, innovation: x_innov },
        errors: ArErrorSpec { alpha: params.alpha, innovation: e_innov, stationary_start: false },
        burn_in: DEFAULT_BURN_IN,
        seed: params.seed,
    };
    design.validate()?;
    Ok(design)
}
