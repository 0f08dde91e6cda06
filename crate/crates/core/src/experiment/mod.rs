//! Reproducible experiment runs: typed configs, seeded phases, CSV tables
//! and a JSON manifest per run.
//!
//! Every run writes into its output directory:
//! - `manifest.json`: config echo, derived quantities, per-check results and
//!   the overall status (schema [`MANIFEST_SCHEMA`]);
//! - `timings.json`: wall-clock seconds per phase and the worker count
//!   (kept apart from the manifest so the manifest is byte-reproducible);
//! - the experiment's CSV tables (see [`Experiment::csv_columns`]).

mod config;
mod hdx;
mod mixing;
mod shells;
mod spectrum;
mod tails;
mod walks;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{
    ExperimentParams, HdxParams, MixingParams, Overrides, Params, RunConfig, ShellParams, SpectrumParams,
    TailsParams, TightnessParams, WalkParams, DEFAULT_SEED, ENV_PREFIX, MIN_LAMBDA_TARGET, RESERVED_ENV,
};
pub use hdx::{cap_link_spectrum, CapLinkRow, LinkRow};

use crate::error::{Error, Result};

pub const MANIFEST_SCHEMA: &str = "hdxgeo-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Tails,
    SphereSpectrum,
    HdxVerify,
    Tightness,
    Mixing,
    WalkCombinatorics,
    ShellAnalysis,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Tails,
        Experiment::SphereSpectrum,
        Experiment::HdxVerify,
        Experiment::Tightness,
        Experiment::Mixing,
        Experiment::WalkCombinatorics,
        Experiment::ShellAnalysis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Tails => "tails",
            Experiment::SphereSpectrum => "sphere-spectrum",
            Experiment::HdxVerify => "hdx-verify",
            Experiment::Tightness => "tightness",
            Experiment::Mixing => "mixing",
            Experiment::WalkCombinatorics => "walk-combinatorics",
            Experiment::ShellAnalysis => "shell-analysis",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    /// CSV files written by the experiment and their columns.
    pub fn csv_columns(self) -> &'static [(&'static str, &'static [&'static str])] {
        match self {
            Experiment::Tails => &[
                ("tails.csv", &["d", "t", "tail", "lower", "upper", "lower_active", "in_sandwich"]),
                ("inversion.csv", &["d", "p", "tau", "tail_at_tau", "abs_error", "pass"]),
            ],
            Experiment::SphereSpectrum => &[(
                "spectrum.csv",
                &[
                    "index",
                    "seed",
                    "vertices",
                    "isolated",
                    "edges",
                    "connected",
                    "lambda2",
                    "lambda_abs",
                    "lambda_min",
                    "rayleigh_lower",
                    "in_window",
                ],
            )],
            Experiment::HdxVerify => &[
                (
                    "links.csv",
                    &["trial", "vertex", "neighbors", "link_vertices", "link_edges", "connected", "lambda2", "lambda_abs"],
                ),
                (
                    "skeleton.csv",
                    &[
                        "trial",
                        "vertices",
                        "edges",
                        "triangles",
                        "connected",
                        "lambda2",
                        "lambda_abs",
                        "link_lambda_max",
                        "link_lambda_min",
                        "empty_links",
                        "trickle_bound",
                        "trickle_slack",
                    ],
                ),
                ("cap_links.csv", &["index", "m", "link_vertices", "link_edges", "connected", "lambda_abs"]),
            ],
            Experiment::Tightness => &[
                ("links.csv", &["trial", "vertex", "neighbors", "link_vertices", "link_edges", "connected", "lambda2", "lambda_abs"]),
                (
                    "skeleton.csv",
                    &["attempt", "vertices", "edges", "triangles", "connected", "lambda2", "rayleigh_lower", "stationary_tv"],
                ),
            ],
            Experiment::Mixing => &[
                ("decay.csv", &["k", "tv_estimate", "noise_floor", "usable", "ratio"]),
                ("bm_means.csv", &["t", "dt", "trials", "mean", "expected_mean", "sigma", "pass"]),
                ("bm_tails.csv", &["t", "x", "empirical", "bound", "mc_error", "pass"]),
            ],
            Experiment::WalkCombinatorics => &[
                ("classes.csv", &["ell", "a", "b", "c", "true_count", "count_bound", "within_bound"]),
                ("shapes.csv", &["ell", "walks", "shapes", "violations"]),
                (
                    "patterns.csv",
                    &["pattern_id", "edges", "hits", "trials", "estimate", "ci_low", "ci_high", "reference_low", "reference_high", "pass"],
                ),
            ],
            Experiment::ShellAnalysis => &[
                (
                    "shells.csv",
                    &[
                        "resample",
                        "n_typical",
                        "n_outlier",
                        "above_eta",
                        "lambda_max_deflated",
                        "max_row_l1",
                        "outlier_mass_max",
                        "max_square_l1",
                        "row_stochastic_error",
                    ],
                ),
                ("outlier_ratio.csv", &["x", "ratio", "rel_error", "threshold", "pass"]),
                ("claims.csv", &["kappa_i", "kappa_j", "kappa_l", "threshold_ratio", "complement_ratio", "bound", "pass"]),
                ("degrees.csv", &["resample", "max_ratio", "zero_degree", "bound", "predicted_failure", "pass"]),
            ],
        }
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// measured <= threshold
    Le,
    /// measured >= threshold
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "nullable")]
    pub measured: f64,
    pub relation: Relation,
    #[serde(with = "nullable")]
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub experiment: Experiment,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    #[serde(with = "nullable::map")]
    pub derived: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub outputs: Vec<String>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 2,
            Status::Error => 1,
        }
    }
}

/// JSON has no NaN or infinity; non-finite numbers are written as `null`
/// and read back as NaN.
mod nullable {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        v.is_finite().then_some(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }

    pub mod map {
        use std::collections::BTreeMap;

        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
            let m: BTreeMap<&String, Option<f64>> = m.iter().map(|(k, v)| (k, v.is_finite().then_some(*v))).collect();
            m.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
            let m = BTreeMap::<String, Option<f64>>::deserialize(d)?;
            Ok(m.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

/// Collects results while an experiment runs.
#[derive(Debug)]
pub struct RunContext {
    out: PathBuf,
    seed: u64,
    checks: Vec<Check>,
    derived: BTreeMap<String, f64>,
    outputs: Vec<String>,
    timings: Vec<PhaseTiming>,
}

impl RunContext {
    fn new(out: PathBuf, seed: u64) -> Self {
        RunContext { out, seed, checks: Vec::new(), derived: BTreeMap::new(), outputs: Vec::new(), timings: Vec::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn derive(&mut self, name: &str, value: f64) {
        self.derived.insert(name.to_string(), value);
    }

    /// Records a check; a NaN measurement fails.
    pub fn check(&mut self, name: &str, measured: f64, relation: Relation, threshold: f64) -> bool {
        self.check_with_note(name, measured, relation, threshold, None)
    }

    pub fn check_with_note(
        &mut self,
        name: &str,
        measured: f64,
        relation: Relation,
        threshold: f64,
        note: Option<String>,
    ) -> bool {
        let pass = match relation {
            Relation::Le => measured <= threshold,
            Relation::Ge => measured >= threshold,
        };
        self.checks.push(Check { name: name.to_string(), measured, relation, threshold, pass, note });
        pass
    }

    pub fn write_csv<S: Serialize>(&mut self, name: &str, rows: &[S]) -> Result<()> {
        let path = self.out.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        write_json_file(&self.out.join(name), value)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Runs `f` and records its wall-clock time under `phase`.
    pub fn phase<T>(&mut self, phase: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let r = f(self);
        self.timings.push(PhaseTiming { phase: phase.to_string(), seconds: start.elapsed().as_secs_f64() });
        r
    }
}

fn write_json_file<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub out: PathBuf,
}

/// Runs one experiment and writes its artifacts. The manifest is written
/// even when the experiment fails with an error; the error is then returned.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let mut ctx = RunContext::new(config.out.clone(), config.seed);
    let start = Instant::now();
    let result = match &config.params {
        ExperimentParams::Tails(p) => tails::run(p, &mut ctx),
        ExperimentParams::SphereSpectrum(p) => spectrum::run(p, &mut ctx),
        ExperimentParams::HdxVerify(p) => hdx::run(p, &mut ctx),
        ExperimentParams::Tightness(p) => hdx::run_tightness(p, &mut ctx),
        ExperimentParams::Mixing(p) => mixing::run(p, &mut ctx),
        ExperimentParams::WalkCombinatorics(p) => walks::run(p, &mut ctx),
        ExperimentParams::ShellAnalysis(p) => shells::run(p, &mut ctx),
    };
    let total = start.elapsed().as_secs_f64();
    let (status, error) = match &result {
        Ok(()) if ctx.checks.iter().all(|c| c.pass) => (Status::Pass, None),
        Ok(()) => (Status::Fail, None),
        Err(e) => (Status::Error, Some(e.to_string())),
    };
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.to_string(),
        experiment: config.experiment,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config: serde_json::to_value(&config.params)?,
        derived: ctx.derived.clone(),
        checks: ctx.checks.clone(),
        outputs: ctx.outputs.clone(),
        status,
        error,
    };
    write_json_file(&config.out.join(MANIFEST_FILE), &manifest)?;
    let timings = serde_json::json!({
        "workers": rayon::current_num_threads(),
        "total_seconds": total,
        "phases": ctx.timings,
    });
    write_json_file(&config.out.join(TIMINGS_FILE), &timings)?;
    result.map(|()| RunOutcome { manifest, out: config.out.clone() })
}

/// Fraction of `flags` that are true (0 for an empty slice).
fn fraction_true(flags: impl IntoIterator<Item = bool>) -> f64 {
    let (mut yes, mut all) = (0usize, 0usize);
    for f in flags {
        all += 1;
        yes += usize::from(f);
    }
    if all == 0 {
        0.0
    } else {
        yes as f64 / all as f64
    }
}

#[cfg(test)]
mod tests;
