use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::Experiment;
use crate::error::{Error, Result};

/// Prefix of environment variables that override config parameters.
pub const ENV_PREFIX: &str = "HDXGEO_";

/// Environment names handled by the command line rather than the parameter
/// table.
pub const RESERVED_ENV: [&str; 4] = ["SEED", "OUT", "WORKERS", "CONFIG"];

pub const DEFAULT_SEED: u64 = 1;

pub trait Params: Serialize + DeserializeOwned + Default {
    fn validate(&self) -> Result<()>;
}

/// Top-level settings that are not experiment parameters.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TailsParams {
    pub d_grid: Vec<usize>,
    pub t_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub inversion_tol: f64,
}

impl Default for TailsParams {
    fn default() -> Self {
        TailsParams {
            d_grid: vec![20, 50, 100, 200, 500],
            t_grid: (1..=18).map(|k| k as f64 * 0.05).collect(),
            p_grid: vec![1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9],
            inversion_tol: 1e-10,
        }
    }
}

impl Params for TailsParams {
    fn validate(&self) -> Result<()> {
        nonempty("d_grid", &self.d_grid)?;
        nonempty("t_grid", &self.t_grid)?;
        nonempty("p_grid", &self.p_grid)?;
        for &d in &self.d_grid {
            at_least("d_grid", d, 2)?;
        }
        for &t in &self.t_grid {
            open_unit("t_grid", t)?;
        }
        for &p in &self.p_grid {
            open_unit("p_grid", p)?;
        }
        positive("inversion_tol", self.inversion_tol)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumParams {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub seeds: usize,
    /// Half-width of the window around `tau` that `lambda_2` must land in.
    pub window: f64,
    pub min_fraction: f64,
    pub tol: f64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams { n: 3000, d: 60, p: 0.1, seeds: 20, window: 0.1, min_fraction: 0.9, tol: 1e-8 }
    }
}

impl Params for SpectrumParams {
    fn validate(&self) -> Result<()> {
        at_least("n", self.n, 3)?;
        at_least("d", self.d, 2)?;
        half_open_unit("p", self.p)?;
        at_least("seeds", self.seeds, 1)?;
        positive("window", self.window)?;
        fraction("min_fraction", self.min_fraction)?;
        positive("tol", self.tol)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct HdxParams {
    pub n: usize,
    /// `p = n^{-1 + eps}`.
    pub eps: f64,
    /// `d = round(eta_param * log_{4/3} n)` unless `d` is set.
    pub eta_param: f64,
    /// Explicit dimension; 0 derives it from `eta_param`.
    pub d: usize,
    pub trials: usize,
    pub link_slack: f64,
    pub trickle_tol: f64,
    pub tol: f64,
    /// Minimum expected link size `p n`.
    pub min_pn: f64,
    /// Minimum expected link degree `q p n`.
    pub min_qpn: f64,
    /// Links sampled straight from a cap (0 skips this phase).
    pub cap_links: usize,
    pub cap_link_d: usize,
    pub cap_link_tau: f64,
    pub cap_link_m: usize,
}

impl Default for HdxParams {
    fn default() -> Self {
        HdxParams {
            n: 1000,
            eps: 0.8,
            eta_param: 1.67,
            d: 0,
            trials: 1,
            link_slack: 0.1,
            trickle_tol: 1e-9,
            tol: 1e-10,
            min_pn: 50.0,
            min_qpn: 5.0,
            cap_links: 0,
            cap_link_d: 200,
            cap_link_tau: 0.5,
            cap_link_m: 1500,
        }
    }
}

impl HdxParams {
    pub fn dimension(&self) -> usize {
        if self.d > 0 {
            self.d
        } else {
            (self.eta_param * (self.n as f64).ln() / (4.0f64 / 3.0).ln()).round() as usize
        }
    }

    pub fn edge_probability(&self) -> f64 {
        (self.n as f64).powf(-1.0 + self.eps)
    }
}

impl Params for HdxParams {
    fn validate(&self) -> Result<()> {
        at_least("n", self.n, 4)?;
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::config("eps", format!("{} is not in (0, 1]", self.eps)));
        }
        if self.d == 0 {
            positive("eta_param", self.eta_param)?;
        }
        at_least("d", self.dimension(), 4)?;
        at_least("trials", self.trials, 1)?;
        positive("link_slack", self.link_slack)?;
        positive("trickle_tol", self.trickle_tol)?;
        positive("tol", self.tol)?;
        if self.cap_links > 0 {
            at_least("cap_link_d", self.cap_link_d, 4)?;
            open_unit("cap_link_tau", self.cap_link_tau)?;
            at_least("cap_link_m", self.cap_link_m, 2)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TightnessParams {
    pub lambda_target: f64,
    pub n: usize,
    pub d: usize,
    pub attempts: usize,
    /// Allowed shortfall of the skeleton `lambda_2` below `tau`.
    pub skeleton_slack: f64,
    /// Allowed excess of link `|lambda|_2` over `lambda_target`.
    pub link_slack: f64,
    pub tv_max: f64,
    pub trickle_tol: f64,
    pub tol: f64,
}

pub const MIN_LAMBDA_TARGET: f64 = 0.05;

impl Default for TightnessParams {
    fn default() -> Self {
        TightnessParams {
            lambda_target: 1.0 / 3.0,
            n: 2000,
            d: 10,
            attempts: 5,
            skeleton_slack: 0.1,
            link_slack: 0.1,
            tv_max: 0.05,
            trickle_tol: 1e-9,
            tol: 1e-10,
        }
    }
}

impl Params for TightnessParams {
    fn validate(&self) -> Result<()> {
        if !(self.lambda_target >= MIN_LAMBDA_TARGET && self.lambda_target < 0.5) {
            return Err(Error::config(
                "lambda_target",
                format!("{} is not in [{MIN_LAMBDA_TARGET}, 0.5)", self.lambda_target),
            ));
        }
        at_least("n", self.n, 4)?;
        at_least("d", self.d, 3)?;
        at_least("attempts", self.attempts, 1)?;
        positive("skeleton_slack", self.skeleton_slack)?;
        positive("link_slack", self.link_slack)?;
        positive("tv_max", self.tv_max)?;
        positive("trickle_tol", self.trickle_tol)?;
        positive("tol", self.tol)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MixingParams {
    pub d: usize,
    pub tau: f64,
    pub k_max: usize,
    pub trials: usize,
    pub bins: usize,
    /// Decay ratios must stay below `ratio_slack * tau`.
    pub ratio_slack: f64,
    pub bm_d: usize,
    pub bm_times: Vec<f64>,
    pub bm_trials: usize,
    /// Euler-Maruyama step is `bm_dt_scale / (bm_d - 1)`.
    pub bm_dt_scale: f64,
    pub bm_grid: Vec<f64>,
}

impl Default for MixingParams {
    fn default() -> Self {
        MixingParams {
            d: 100,
            tau: 0.5,
            k_max: 6,
            trials: 100_000,
            bins: 40,
            ratio_slack: 1.25,
            bm_d: 50,
            bm_times: vec![0.005, 0.01, 0.02],
            bm_trials: 10_000,
            bm_dt_scale: 0.002,
            bm_grid: vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5],
        }
    }
}

impl Params for MixingParams {
    fn validate(&self) -> Result<()> {
        at_least("d", self.d, 3)?;
        open_unit("tau", self.tau)?;
        at_least("k_max", self.k_max, 2)?;
        at_least("trials", self.trials, 1)?;
        at_least("bins", self.bins, crate::capwalk::MIN_BINS)?;
        positive("ratio_slack", self.ratio_slack)?;
        at_least("bm_d", self.bm_d, 2)?;
        nonempty("bm_times", &self.bm_times)?;
        for &t in &self.bm_times {
            positive("bm_times", t)?;
        }
        at_least("bm_trials", self.bm_trials, 1)?;
        if !(self.bm_dt_scale > 0.0 && self.bm_dt_scale <= crate::capwalk::BM_STABILITY) {
            return Err(Error::config(
                "bm_dt_scale",
                format!("{} is not in (0, {}]", self.bm_dt_scale, crate::capwalk::BM_STABILITY),
            ));
        }
        for &x in &self.bm_grid {
            positive("bm_grid", x)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WalkParams {
    pub ell_max: usize,
    pub labels: usize,
    pub budget: u64,
    pub d: usize,
    pub p: f64,
    pub forests: usize,
    pub forest_max_vertices: usize,
    pub forest_trials: u64,
    pub triangle_trials: u64,
    /// Forest estimates must be within `sigma` standard errors of `p^|E|`.
    pub sigma: f64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            ell_max: 6,
            labels: 5,
            budget: crate::walks::DEFAULT_ENUMERATION_BUDGET as u64,
            d: 80,
            p: 0.05,
            forests: 20,
            forest_max_vertices: 5,
            forest_trials: 200_000,
            triangle_trials: 1_000_000,
            sigma: 3.0,
        }
    }
}

impl Params for WalkParams {
    fn validate(&self) -> Result<()> {
        at_least("ell_max", self.ell_max, 2)?;
        at_least("labels", self.labels, 2)?;
        at_least("d", self.d, 2)?;
        open_unit("p", self.p)?;
        at_least("forest_max_vertices", self.forest_max_vertices, 2)?;
        if self.forest_max_vertices > crate::walks::mc::MAX_PATTERN_VERTICES {
            return Err(Error::config(
                "forest_max_vertices",
                format!("at most {} vertices", crate::walks::mc::MAX_PATTERN_VERTICES),
            ));
        }
        if self.forests > 0 {
            at_least("forest_trials", self.forest_trials, 1)?;
        }
        at_least("triangle_trials", self.triangle_trials, 1)?;
        positive("sigma", self.sigma)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ShellParams {
    pub d: usize,
    pub m: usize,
    pub tau: f64,
    pub gamma: f64,
    pub resamples: usize,
    /// Fraction of resamples each high-probability check must pass on.
    pub min_pass_fraction: f64,
    pub spectral_slack: f64,
    pub row_slack: f64,
    pub outlier_slack: f64,
    pub ratio_slack: f64,
    pub claims_slack: f64,
    pub row_stochastic_tol: f64,
    pub nd_points: usize,
    pub claim_triples: usize,
    /// Also compute the all-pairs row distances of `Qbar^2` (cubic cost).
    pub with_square: bool,
    pub tol: f64,
    pub degree_d: usize,
    pub degree_tau: f64,
    pub degree_m: usize,
    pub degree_alpha: f64,
    pub degree_resamples: usize,
}

impl Default for ShellParams {
    fn default() -> Self {
        ShellParams {
            d: 400,
            m: 1500,
            tau: 0.5,
            gamma: 1.0,
            resamples: 100,
            min_pass_fraction: 0.95,
            spectral_slack: 3.0,
            row_slack: 3.0,
            outlier_slack: 3.0,
            ratio_slack: 5.0,
            claims_slack: 10.0,
            row_stochastic_tol: 1e-12,
            nd_points: 8,
            claim_triples: 200,
            with_square: false,
            tol: 1e-10,
            degree_d: 20,
            degree_tau: 0.1,
            degree_m: 1500,
            degree_alpha: 0.3,
            degree_resamples: 100,
        }
    }
}

impl Params for ShellParams {
    fn validate(&self) -> Result<()> {
        at_least("d", self.d, 4)?;
        at_least("m", self.m, 2)?;
        open_unit("tau", self.tau)?;
        positive("gamma", self.gamma)?;
        at_least("resamples", self.resamples, 1)?;
        fraction("min_pass_fraction", self.min_pass_fraction)?;
        for (f, v) in [
            ("spectral_slack", self.spectral_slack),
            ("row_slack", self.row_slack),
            ("outlier_slack", self.outlier_slack),
            ("ratio_slack", self.ratio_slack),
            ("claims_slack", self.claims_slack),
            ("row_stochastic_tol", self.row_stochastic_tol),
            ("tol", self.tol),
        ] {
            positive(f, v)?;
        }
        if self.degree_resamples > 0 {
            at_least("degree_d", self.degree_d, 3)?;
            open_unit("degree_tau", self.degree_tau)?;
            at_least("degree_m", self.degree_m, 2)?;
            open_unit("degree_alpha", self.degree_alpha)?;
        }
        Ok(())
    }
}

/// Parameters of one experiment, tagged by kind.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(untagged)]
pub enum ExperimentParams {
    Tails(TailsParams),
    SphereSpectrum(SpectrumParams),
    HdxVerify(HdxParams),
    Tightness(TightnessParams),
    Mixing(MixingParams),
    WalkCombinatorics(WalkParams),
    ShellAnalysis(ShellParams),
}

impl ExperimentParams {
    pub fn defaults(e: Experiment) -> Self {
        match e {
            Experiment::Tails => ExperimentParams::Tails(Default::default()),
            Experiment::SphereSpectrum => ExperimentParams::SphereSpectrum(Default::default()),
            Experiment::HdxVerify => ExperimentParams::HdxVerify(Default::default()),
            Experiment::Tightness => ExperimentParams::Tightness(Default::default()),
            Experiment::Mixing => ExperimentParams::Mixing(Default::default()),
            Experiment::WalkCombinatorics => ExperimentParams::WalkCombinatorics(Default::default()),
            Experiment::ShellAnalysis => ExperimentParams::ShellAnalysis(Default::default()),
        }
    }

    fn from_table(e: Experiment, t: Table) -> Result<Self> {
        Ok(match e {
            Experiment::Tails => ExperimentParams::Tails(typed(t)?),
            Experiment::SphereSpectrum => ExperimentParams::SphereSpectrum(typed(t)?),
            Experiment::HdxVerify => ExperimentParams::HdxVerify(typed(t)?),
            Experiment::Tightness => ExperimentParams::Tightness(typed(t)?),
            Experiment::Mixing => ExperimentParams::Mixing(typed(t)?),
            Experiment::WalkCombinatorics => ExperimentParams::WalkCombinatorics(typed(t)?),
            Experiment::ShellAnalysis => ExperimentParams::ShellAnalysis(typed(t)?),
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            ExperimentParams::Tails(p) => p.validate(),
            ExperimentParams::SphereSpectrum(p) => p.validate(),
            ExperimentParams::HdxVerify(p) => p.validate(),
            ExperimentParams::Tightness(p) => p.validate(),
            ExperimentParams::Mixing(p) => p.validate(),
            ExperimentParams::WalkCombinatorics(p) => p.validate(),
            ExperimentParams::ShellAnalysis(p) => p.validate(),
        }
    }

    /// Parameter names accepted by the experiment.
    pub fn keys(e: Experiment) -> Vec<String> {
        let v = Value::try_from(Self::defaults(e)).expect("defaults serialize");
        v.as_table().map(|t| t.keys().cloned().collect()).unwrap_or_default()
    }
}

/// A fully resolved, validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub params: ExperimentParams,
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        RunConfig {
            experiment,
            seed: DEFAULT_SEED,
            out: PathBuf::from("out").join(experiment.name()),
            workers: None,
            params: ExperimentParams::defaults(experiment),
        }
    }

    /// Builds a config from (in increasing precedence) defaults, the config
    /// file, `HDXGEO_<PARAM>` environment variables, and command-line
    /// overrides. Every parameter is validated before returning.
    pub fn resolve<I>(experiment: Experiment, file: Option<&str>, env: I, cli: &Overrides) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: Table = match file {
            Some(text) => text.parse()?,
            None => Table::new(),
        };
        let mut cfg = RunConfig::defaults(experiment);

        if let Some(v) = table.remove("experiment") {
            let name = v.as_str().ok_or_else(|| Error::config("experiment", "must be a string"))?;
            if name != experiment.name() {
                return Err(Error::config(
                    "experiment",
                    format!("config is for `{name}` but `{}` was requested", experiment.name()),
                ));
            }
        }
        if let Some(v) = table.remove("seed") {
            cfg.seed = match v {
                Value::Integer(i) if i >= 0 => i as u64,
                // TOML integers are signed; larger seeds are written as strings
                Value::String(s) => s.parse().map_err(|_| Error::config("seed", "must be a 64-bit unsigned integer"))?,
                _ => return Err(Error::config("seed", "must be a nonnegative integer")),
            };
        }
        if let Some(v) = table.remove("out") {
            cfg.out = PathBuf::from(v.as_str().ok_or_else(|| Error::config("out", "must be a string"))?);
        }
        if let Some(v) = table.remove("workers") {
            cfg.workers = match v {
                Value::Integer(i) if i >= 1 => Some(i as usize),
                _ => return Err(Error::config("workers", "must be a positive integer")),
            };
        }

        let mut env: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        env.sort();
        for (key, raw) in env {
            let name = &key[ENV_PREFIX.len()..];
            if RESERVED_ENV.contains(&name) {
                continue;
            }
            table.insert(name.to_ascii_lowercase(), env_value(&raw));
        }

        cfg.params = ExperimentParams::from_table(experiment, table)?;
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if let Some(o) = &cli.out {
            cfg.out = o.clone();
        }
        if let Some(w) = cli.workers {
            cfg.workers = Some(w);
        }
        if cfg.workers == Some(0) {
            return Err(Error::config("workers", "must be positive"));
        }
        cfg.params.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    /// The config as a TOML file that [`RunConfig::resolve`] reads back to
    /// the same value (absent environment and command-line overrides).
    pub fn to_toml(&self) -> String {
        let mut t = Table::new();
        t.insert("experiment".into(), Value::String(self.experiment.name().into()));
        let seed = match i64::try_from(self.seed) {
            Ok(i) => Value::Integer(i),
            Err(_) => Value::String(self.seed.to_string()),
        };
        t.insert("seed".into(), seed);
        t.insert("out".into(), Value::String(self.out.display().to_string()));
        if let Some(w) = self.workers {
            t.insert("workers".into(), Value::Integer(w as i64));
        }
        let params = Table::try_from(&self.params).expect("params serialize");
        t.extend(params);
        toml::to_string(&t).expect("table serializes")
    }
}

fn env_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Overlays `user` on the defaults of `T`, rejecting unknown keys and type
/// mismatches by name.
fn typed<T: Params>(user: Table) -> Result<T> {
    let mut base = Table::try_from(T::default()).expect("defaults serialize");
    for (key, value) in user {
        let default = base.get(&key).ok_or_else(|| Error::config(&key, "unknown parameter"))?;
        let value = coerce(&key, default, value)?;
        base.insert(key, value);
    }
    Value::Table(base).try_into::<T>().map_err(|e| Error::config("<parameters>", e.to_string()))
}

fn coerce(key: &str, default: &Value, value: Value) -> Result<Value> {
    match (default, value) {
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(i as f64)),
        (Value::Integer(_), Value::Integer(i)) if i < 0 => Err(Error::config(key, "must be nonnegative")),
        (Value::Array(d), Value::Array(v)) => {
            let elem = d.first().cloned().unwrap_or(Value::Float(0.0));
            v.into_iter().map(|x| coerce(key, &elem, x)).collect::<Result<Vec<_>>>().map(Value::Array)
        }
        (d, v) if d.type_str() == v.type_str() => Ok(v),
        (d, v) => Err(Error::config(key, format!("expected {}, found {}", d.type_str(), v.type_str()))),
    }
}

fn nonempty<T>(field: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::config(field, "must not be empty"));
    }
    Ok(())
}

fn at_least<T: PartialOrd + std::fmt::Display>(field: &str, v: T, min: T) -> Result<()> {
    if v < min {
        return Err(Error::config(field, format!("{v} is below the minimum {min}")));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(field, format!("{v} is not a positive number")));
    }
    Ok(())
}

fn open_unit(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::config(field, format!("{v} is not in (0, 1)")));
    }
    Ok(())
}

fn half_open_unit(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::config(field, format!("{v} is not in (0, 1]")));
    }
    Ok(())
}

fn fraction(field: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::config(field, format!("{v} is not in [0, 1]")));
    }
    Ok(())
}
