//! Command-line front end: config resolution, presets and report output.
//!
//! A run is described by a [`RunConfig`]. It is built from an optional TOML
//! file, then a named preset, then command-line overrides, in that order.
//! `--explain` prints the resolved config (defaults included) and exits.
//! Exit codes: 0 success, 1 invalid input or config, 2 runtime failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bench::{self, CurveGls, DnRule, ExperimentReport, ForecastConfig, ForecastModel};
use crate::data::{self, CsvSchema, TimeSeriesDataset};
use crate::depmeas::{self, LinearProcessSpec};
use crate::dgp::{self, PresetCase, PresetDist, PresetParams, SimDesign};
use crate::error::{Error, Result};
use crate::penreg::{self, TwoStageOptions};
use crate::screen::{self, Method, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Screen,
    Twostage,
    Forecast,
    Depmeas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Screening, selection and forecasting experiments for time-series regression.
#[derive(Debug, Parser)]
#[command(name = "tsscreen", version, about)]
pub struct Cli {
    /// Pipeline to run.
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named experiment: table1..table5, figure1, table6-format.
    #[arg(long)]
    pub preset: Option<String>,
    /// Restrict a preset to matching cells, e.g. `gaussian,alpha=.4,p=1000`.
    #[arg(long)]
    pub cell: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    pub explain: bool,
}

/// One simulation scenario of a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub case: PresetCase,
    pub dist: PresetDist,
    pub p: usize,
    #[serde(default)]
    pub gamma: Option<f64>,
    pub alpha: f64,
}

impl Cell {
    pub fn design(&self, seed: u64) -> Result<SimDesign> {
        dgp::preset_design(self.case, self.p, self.dist, PresetParams { gamma: self.gamma, alpha: self.alpha, seed })
    }

    pub fn label(&self) -> String {
        let dist = match self.dist {
            PresetDist::Gaussian => "gaussian",
            PresetDist::T5 => "t5",
        };
        let case = serde_json::to_value(self.case).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        match self.gamma {
            Some(g) => format!("{case},{dist},p={},gamma={g},alpha={}", self.p, self.alpha),
            None => format!("{case},{dist},p={},alpha={}", self.p, self.alpha),
        }
    }
}

/// First stage of a two-stage fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FirstStage {
    /// Selector on all columns.
    None,
    Sis,
    Glss { band: usize, taper: bool },
}

impl FirstStage {
    fn method(self) -> Option<Method> {
        match self {
            FirstStage::None => None,
            FirstStage::Sis => Some(Method::Sis),
            FirstStage::Glss { band, taper } => Some(Method::Glss { band, taper }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default = "yes")]
    pub has_header: bool,
    #[serde(default)]
    pub time_column: Option<usize>,
    /// Response column for `screen` and `twostage`.
    #[serde(default)]
    pub response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreenConfig {
    pub methods: Vec<Method>,
    /// Number of columns kept; `n - 1` when absent.
    pub d_n: Option<usize>,
    /// Keep `|score| >= threshold` instead of the top `d_n` (datasets only).
    pub threshold: Option<f64>,
    pub standardize: bool,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self { methods: vec![Method::Sis, Method::default()], d_n: None, threshold: None, standardize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoStageConfig {
    pub first_stages: Vec<FirstStage>,
    pub d_n: Option<usize>,
    pub options: TwoStageOptions,
}

impl Default for TwoStageConfig {
    fn default() -> Self {
        Self {
            first_stages: vec![FirstStage::Glss { band: crate::covest::DEFAULT_BAND, taper: true }, FirstStage::None],
            d_n: None,
            options: TwoStageOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub rho_grid: Vec<f64>,
    pub n: usize,
    pub gls: CurveGls,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self { rho_grid: (0..10).map(|i| 0.5 + 0.05 * i as f64).collect(), n: 200, gls: CurveGls::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DepmeasTask {
    /// Cumulative dependence measure of a linear process.
    Linear { process: LinearProcessSpec, q: f64, m_max: usize, mc_reps: usize },
    /// Decay profile of a VAR(k) from its coefficient blocks (row-major).
    Var { blocks: Vec<Vec<Vec<f64>>>, m_max: usize },
    /// Monte-Carlo check of the closed-form asymptotic variances.
    AsyVar { alphas: Vec<f64>, phis: Vec<f64>, n: usize },
}

impl Default for DepmeasTask {
    fn default() -> Self {
        DepmeasTask::AsyVar { alphas: vec![0.0, 0.6, 0.9], phis: vec![0.0, 0.4], n: 2000 }
    }
}

/// Fully resolved description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    /// Named experiment to expand; absent from resolved configs.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Explicit simulation design (overrides `cells`).
    #[serde(default)]
    pub design: Option<SimDesign>,
    #[serde(default)]
    pub cells: Vec<Cell>,
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
    #[serde(default)]
    pub screen: ScreenConfig,
    #[serde(default)]
    pub twostage: TwoStageConfig,
    #[serde(default)]
    pub curve: Option<CurveConfig>,
    #[serde(default)]
    pub forecast: Option<ForecastConfig>,
    /// Models to run; the configured model alone when empty.
    #[serde(default)]
    pub forecast_models: Vec<ForecastModel>,
    /// Target columns; the configured target alone when empty.
    #[serde(default)]
    pub forecast_targets: Vec<String>,
    #[serde(default)]
    pub depmeas: DepmeasTask,
}

fn yes() -> bool {
    true
}
fn default_seed() -> u64 {
    1
}
fn default_reps() -> usize {
    200
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

const TABLE1_CELLS: [(f64, f64); 3] = [(0.4, 0.6), (0.5, 0.8), (0.6, 0.9)];

fn grid(case: PresetCase, gammas_alphas: &[(Option<f64>, f64)]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for dist in [PresetDist::Gaussian, PresetDist::T5] {
        for p in [1000, 5000] {
            for &(gamma, alpha) in gammas_alphas {
                cells.push(Cell { case, dist, p, gamma, alpha });
            }
        }
    }
    cells
}

/// Apply a named preset to `cfg`.
pub fn apply_preset(cfg: &mut RunConfig, name: &str) -> Result<Command> {
    let alphas = |a: &[f64]| a.iter().map(|&a| (None, a)).collect::<Vec<_>>();
    let command = match name {
        "table1" => {
            let ga: Vec<_> = TABLE1_CELLS.iter().map(|&(g, a)| (Some(g), a)).collect();
            cfg.cells = grid(PresetCase::C1, &ga);
            Command::Screen
        }
        "table2" => {
            cfg.cells = grid(PresetCase::C2a, &alphas(&[0.4, 0.6, 0.8]));
            Command::Screen
        }
        "table3" => {
            cfg.cells = grid(PresetCase::C2b, &alphas(&[0.4, 0.6, 0.8]));
            Command::Screen
        }
        "table4" => {
            cfg.cells = grid(PresetCase::C3a, &alphas(&[0.4, 0.5, 0.6]));
            Command::Twostage
        }
        "table5" => {
            cfg.cells = grid(PresetCase::C3b, &alphas(&[0.4, 0.5, 0.6]));
            Command::Twostage
        }
        "figure1" => {
            cfg.curve = Some(CurveConfig::default());
            Command::Screen
        }
        "table6-format" => {
            cfg.forecast_models = ForecastModel::ALL.to_vec();
            if let Some(f) = cfg.forecast.as_mut() {
                f.d_n = DnRule::NOverLogN;
            }
            Command::Forecast
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (expected table1..table5, figure1, table6-format)"
            )))
        }
    };
    Ok(command)
}

/// Keep the cells matching every token of `spec` (a distribution name or
/// `key=value` with key `case`, `p`, `gamma` or `alpha`).
pub fn filter_cells(cells: &[Cell], spec: &str) -> Result<Vec<Cell>> {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let num = |k: &str, v: &str| v.parse::<f64>().map_err(|_| Error::Config(format!("cell value '{v}' for '{k}' is not a number")));
    let mut out: Vec<Cell> = cells.to_vec();
    for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match tok.split_once('=') {
            None => {
                let dist: PresetDist = tok.parse().map_err(|_| Error::Config(format!("unknown cell token '{tok}'")))?;
                out.retain(|c| c.dist == dist);
            }
            Some(("case", v)) => {
                let case: PresetCase = v.parse().map_err(|_| Error::Config(format!("unknown case '{v}'")))?;
                out.retain(|c| c.case == case);
            }
            Some(("dist", v)) => {
                let dist: PresetDist = v.parse().map_err(|_| Error::Config(format!("unknown distribution '{v}'")))?;
                out.retain(|c| c.dist == dist);
            }
            Some(("p", v)) => {
                let p: usize = v.parse().map_err(|_| Error::Config(format!("cell value '{v}' for 'p' is not an integer")))?;
                out.retain(|c| c.p == p);
            }
            Some(("alpha", v)) => {
                let a = num("alpha", v)?;
                out.retain(|c| close(c.alpha, a));
            }
            Some(("gamma", v)) => {
                let g = num("gamma", v)?;
                out.retain(|c| c.gamma.is_some_and(|cg| close(cg, g)));
            }
            Some((k, _)) => return Err(Error::Config(format!("unknown cell key '{k}'"))),
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("no cell matches '{spec}'")));
    }
    Ok(out)
}

/// Build the run configuration from the command line.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = cfg.command {
        if c != cli.command {
            return Err(Error::Config(format!("config is for '{c:?}' but '{:?}' was requested", cli.command)));
        }
    }
    // A preset is expanded once; the resolved config lists its cells explicitly.
    let preset = cli.preset.clone().or_else(|| cfg.preset.take());
    if let Some(name) = preset {
        let want = apply_preset(&mut cfg, &name)?;
        if want != cli.command {
            return Err(Error::Config(format!("preset '{name}' runs '{want:?}', not '{:?}'", cli.command)));
        }
    }
    if let Some(spec) = &cli.cell {
        if cfg.cells.is_empty() {
            return Err(Error::Config("--cell needs a preset or configured cells".into()));
        }
        cfg.cells = filter_cells(&cfg.cells, spec)?;
    }
    cfg.command = Some(cli.command);
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.reps {
        cfg.reps = r;
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cfg.reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    if cfg.jobs == Some(0) {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    Ok(cfg)
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Artifact {
    Reports(Vec<ExperimentReport>),
    Dataset(#[serde(skip)] TimeSeriesDataset),
    Table { header: Vec<String>, rows: Vec<Vec<String>> },
}

/// Output of [`run`]: artifacts plus warnings destined for stderr.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub artifact: Artifact,
    pub warnings: Vec<String>,
}

fn simulation_designs(cfg: &RunConfig) -> Result<Vec<(String, SimDesign)>> {
    if let Some(d) = &cfg.design {
        let mut d = d.clone();
        d.seed = cfg.seed;
        return Ok(vec![("design".into(), d)]);
    }
    if cfg.cells.is_empty() {
        return Err(Error::Config("no design: give [design], [[cells]] or a preset".into()));
    }
    cfg.cells.iter().map(|c| Ok((c.label(), c.design(cfg.seed)?))).collect()
}

fn load_dataset(dc: &DatasetConfig) -> Result<TimeSeriesDataset> {
    data::ingest_csv(&dc.path, &CsvSchema { has_header: dc.has_header, time_column: dc.time_column })
}

fn response_split(dc: &DatasetConfig, ds: &TimeSeriesDataset) -> Result<(nalgebra::DMatrix<f64>, Vec<f64>, Vec<String>)> {
    let name = dc.response.as_deref().ok_or_else(|| Error::Config("dataset.response is required".into()))?;
    let r = ds.column_index(name).ok_or_else(|| Error::Config(format!("response column '{name}' not found")))?;
    let (x, y) = ds.split_response(r)?;
    let names = ds.names.iter().enumerate().filter(|(j, _)| *j != r).map(|(_, s)| s.clone()).collect();
    Ok((x, y, names))
}

fn default_dn(d_n: Option<usize>, n: usize, p: usize) -> usize {
    d_n.unwrap_or(n.saturating_sub(1)).min(p)
}

/// Execute a resolved configuration.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let command = cfg.command.ok_or_else(|| Error::Config("no command".into()))?;
    let mut warnings = Vec::new();
    let artifact = match command {
        Command::Simulate => {
            let (_, design) = simulation_designs(cfg)?.into_iter().next().expect("at least one design");
            let sim = dgp::generate(&design, 0)?;
            let mut cols = vec![sim.y.clone()];
            cols.extend((0..design.p).map(|j| sim.x.column(j).iter().copied().collect::<Vec<f64>>()));
            let mut names = vec!["y".to_string()];
            names.extend((0..design.p).map(|j| format!("x{j}")));
            let stamps = (1..=design.n).map(|t| t.to_string()).collect();
            Artifact::Dataset(TimeSeriesDataset::new(cols, Some(names))?.with_time("t", stamps)?)
        }
        Command::Screen => screen_command(cfg, &mut warnings)?,
        Command::Twostage => twostage_command(cfg, &mut warnings)?,
        Command::Forecast => forecast_command(cfg)?,
        Command::Depmeas => depmeas_command(cfg)?,
    };
    if let Artifact::Reports(rs) = &artifact {
        for r in rs {
            warnings.extend(r.warnings.iter().map(|w| format!("{} {}: {w}", r.design_id, r.method)));
        }
    }
    Ok(RunOutput { artifact, warnings })
}

fn screen_command(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Artifact> {
    let sc = &cfg.screen;
    if sc.methods.is_empty() {
        return Err(Error::Config("screen.methods is empty".into()));
    }
    if let Some(dc) = &cfg.dataset {
        let ds = load_dataset(dc)?;
        let (x, y, names) = response_split(dc, &ds)?;
        let rule = match sc.threshold {
            Some(gamma) => Rule::Threshold { gamma },
            None => Rule::Top { d: default_dn(sc.d_n, x.nrows(), x.ncols()) },
        };
        let header = ["method", "column", "name", "score", "rank", "selected"].map(String::from).to_vec();
        let mut rows = Vec::new();
        for &m in &sc.methods {
            let r = screen::screen(&x, &y, m, sc.standardize, rule)?;
            warnings.extend(r.warnings.iter().map(|w| format!("{m}: {w}")));
            let mut rank = vec![0; x.ncols()];
            for (pos, &j) in r.ranking.iter().enumerate() {
                rank[j] = pos + 1;
            }
            for j in 0..x.ncols() {
                rows.push(vec![
                    m.to_string(),
                    j.to_string(),
                    names[j].clone(),
                    data::fmt_f64(r.scores[j]),
                    rank[j].to_string(),
                    r.selected.binary_search(&j).is_ok().to_string(),
                ]);
            }
        }
        return Ok(Artifact::Table { header, rows });
    }
    if let Some(curve) = &cfg.curve {
        return Ok(Artifact::Reports(vec![bench::gls_vs_ols_curve(&curve.rho_grid, curve.n, cfg.reps, cfg.seed, curve.gls)?]));
    }
    let mut reports = Vec::new();
    for (label, design) in simulation_designs(cfg)? {
        for &m in &sc.methods {
            let mut r = bench::run_screen_experiment(&design, m, default_dn(sc.d_n, design.n, design.p), cfg.reps)?;
            r.design_id = label.clone();
            r.rows.iter_mut().for_each(|row| row.design = label.clone());
            reports.push(r);
        }
    }
    Ok(Artifact::Reports(reports))
}

fn twostage_command(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Artifact> {
    let tc = &cfg.twostage;
    if tc.first_stages.is_empty() {
        return Err(Error::Config("twostage.first_stages is empty".into()));
    }
    if let Some(dc) = &cfg.dataset {
        let ds = load_dataset(dc)?;
        let (x, y, names) = response_split(dc, &ds)?;
        let header = ["first_stage", "column", "name", "coef"].map(String::from).to_vec();
        let mut rows = Vec::new();
        for &fs in &tc.first_stages {
            let label = bench::method_label(fs.method(), tc.options.adaptive);
            let fit = match fs.method() {
                Some(m) => penreg::two_stage(&x, &y, m, default_dn(tc.d_n, x.nrows(), x.ncols()), tc.options)?,
                None => penreg::adaptive_pipeline(&x, &y, tc.options)?,
            };
            warnings.extend(fit.screen_warnings.iter().map(|w| format!("{label}: {w}")));
            if fit.empty_model {
                warnings.push(format!("{label}: initial estimate is empty; no columns selected"));
            }
            rows.push(vec![label.clone(), String::new(), "(intercept)".into(), data::fmt_f64(fit.intercept)]);
            for &(j, _) in &fit.selected_support {
                rows.push(vec![label.clone(), j.to_string(), names[j].clone(), data::fmt_f64(fit.coefs[j])]);
            }
        }
        return Ok(Artifact::Table { header, rows });
    }
    let mut reports = Vec::new();
    for (label, design) in simulation_designs(cfg)? {
        for &fs in &tc.first_stages {
            let d_n = default_dn(tc.d_n, design.n, design.p);
            let mut r = bench::run_two_stage_experiment(&design, fs.method(), d_n, cfg.reps, tc.options)?;
            r.design_id = label.clone();
            r.rows.iter_mut().for_each(|row| row.design = label.clone());
            reports.push(r);
        }
    }
    Ok(Artifact::Reports(reports))
}

fn forecast_command(cfg: &RunConfig) -> Result<Artifact> {
    let dc = cfg.dataset.as_ref().ok_or_else(|| Error::Config("forecast needs a [dataset]".into()))?;
    let base = cfg.forecast.as_ref().ok_or_else(|| Error::Config("forecast needs a [forecast] section".into()))?;
    let ds = load_dataset(dc)?;
    let models = if cfg.forecast_models.is_empty() { vec![base.model] } else { cfg.forecast_models.clone() };
    let targets = if cfg.forecast_targets.is_empty() { vec![base.target.clone()] } else { cfg.forecast_targets.clone() };
    let mut reports = Vec::new();
    for target in &targets {
        for &model in &models {
            let fc = ForecastConfig { target: target.clone(), model, ..base.clone() };
            reports.push(bench::rolling_forecast(&ds, &fc)?.report);
        }
    }
    Ok(Artifact::Reports(reports))
}

fn depmeas_command(cfg: &RunConfig) -> Result<Artifact> {
    match &cfg.depmeas {
        DepmeasTask::Linear { process, q, m_max, mc_reps } => {
            let prof = depmeas::fdm_linear(process, *q, *m_max, *mc_reps, cfg.seed)?;
            Ok(profile_table(&prof))
        }
        DepmeasTask::Var { blocks, m_max } => {
            let mats = blocks
                .iter()
                .map(|b| {
                    let p = b.len();
                    if b.iter().any(|r| r.len() != p) {
                        return Err(Error::Dimension("VAR blocks must be square".into()));
                    }
                    Ok(nalgebra::DMatrix::from_fn(p, p, |i, j| b[i][j]))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(profile_table(&depmeas::var_phi_decay(&mats, *m_max, 1.0)?))
        }
        DepmeasTask::AsyVar { alphas, phis, n } => {
            Ok(Artifact::Reports(vec![bench::asy_var_experiment(alphas, phis, *n, cfg.reps, cfg.seed)?]))
        }
    }
}

fn profile_table(p: &depmeas::DecayProfile) -> Artifact {
    Artifact::Table {
        header: vec!["m".into(), "value".into()],
        rows: p.values.iter().enumerate().map(|(m, v)| vec![m.to_string(), data::fmt_f64(*v)]).collect(),
    }
}

/// Write the artifact in the configured format. JSON output embeds the
/// resolved configuration.
pub fn write_artifact<W: Write>(cfg: &RunConfig, artifact: &Artifact, mut w: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    match (artifact, cfg.format) {
        (Artifact::Dataset(ds), _) => ds.write_csv(w),
        (Artifact::Reports(rs), Format::Json) => {
            serde_json::to_writer_pretty(&mut w, &serde_json::json!({ "config": cfg, "reports": rs }))
                .map_err(|e| Error::Io(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        }
        (Artifact::Reports(rs), Format::Csv) => {
            if let [single] = rs.as_slice() {
                return single.write_csv(w);
            }
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(["design", "method", "value", "mc_se"]).map_err(io)?;
            for r in rs {
                for row in &r.rows {
                    let se = row.mc_se.map(data::fmt_f64).unwrap_or_default();
                    wr.write_record([row.design.clone(), row.method.clone(), data::fmt_f64(row.value), se]).map_err(io)?;
                }
            }
            wr.flush()?;
            Ok(())
        }
        (Artifact::Table { header, rows }, Format::Csv) => {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(header).map_err(io)?;
            for r in rows {
                wr.write_record(r).map_err(io)?;
            }
            wr.flush()?;
            Ok(())
        }
        (Artifact::Table { header, rows }, Format::Json) => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| header.iter().cloned().zip(r.iter().map(|v| serde_json::Value::String(v.clone()))).collect())
                .collect();
            serde_json::to_writer_pretty(&mut w, &serde_json::json!({ "config": cfg, "rows": objs }))
                .map_err(|e| Error::Io(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        }
    }
}

/// Parse arguments, run, write artifacts; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    if cli.explain {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| Error::Io(e.to_string()))?;
    let out = pool.install(|| run(&cfg))?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    match &cfg.out {
        Some(path) => {
            let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            write_artifact(&cfg, &out.artifact, std::io::BufWriter::new(f))?;
            if cfg.format == Format::Csv && !matches!(out.artifact, Artifact::Dataset(_)) {
                let mut side = path.as_os_str().to_owned();
                side.push(".config.toml");
                std::fs::write(PathBuf::from(side), cfg.to_toml()?)?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            write_artifact(&cfg, &out.artifact, stdout.lock())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("sed = 3"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[screen]\nd_m = 3"), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_toml("[twostage.options.path]\ngrid = 50"),
            Err(Error::Config(_))
        ));
        let ok = RunConfig::from_toml("[twostage.options.path]\ngrid_size = 50").unwrap();
        assert_eq!(ok.twostage.options.path.grid_size, 50);
    }

    #[test]
    fn explain_round_trips_every_preset() {
        for name in ["table1", "table2", "table3", "table4", "table5", "figure1", "table6-format"] {
            let mut cfg = RunConfig::default();
            let cmd = apply_preset(&mut cfg, name).unwrap();
            cfg.command = Some(cmd);
            let text = cfg.to_toml().unwrap();
            assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg, "{name}:\n{text}");
        }
    }

    #[test]
    fn cell_filter() {
        let mut cfg = RunConfig::default();
        apply_preset(&mut cfg, "table4").unwrap();
        assert_eq!(cfg.cells.len(), 12);
        let one = filter_cells(&cfg.cells, "gaussian,alpha=.4,p=1000").unwrap();
        assert_eq!(one, vec![Cell { case: PresetCase::C3a, dist: PresetDist::Gaussian, p: 1000, gamma: None, alpha: 0.4 }]);
        assert!(filter_cells(&cfg.cells, "alpha=.7").is_err());
        assert!(filter_cells(&cfg.cells, "beta=1").is_err());
        apply_preset(&mut cfg, "table1").unwrap();
        assert_eq!(filter_cells(&cfg.cells, "t5,gamma=.6").unwrap().len(), 2);
    }

    #[test]
    fn preset_command_mismatch_is_rejected() {
        let cli = Cli::try_parse_from(["tsscreen", "screen", "--preset", "table4"]).unwrap();
        assert!(matches!(resolve(&cli), Err(Error::Config(_))));
    }
}
