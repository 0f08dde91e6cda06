//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Runs the experiment runner at the stated sizes; every criterion also has
//! a wall-clock budget that counts toward its verdict.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use hdxgeo_core::complex::WeightedGraph;
use hdxgeo_core::experiment::{self, cap_link_spectrum, Experiment, Overrides, RunConfig, RunManifest};
use hdxgeo_core::rng::{split_seed, stream};
use hdxgeo_core::spectral::{normalized_adjacency, second_abs_eigenvalue_with, Method};
use rand::Rng;

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

fn config(e: Experiment, text: &str, out: &Path) -> RunConfig {
    let cli = Overrides { seed: Some(SEED), out: Some(out.to_path_buf()), workers: None };
    RunConfig::resolve(e, Some(text), Vec::new(), &cli).unwrap_or_else(|err| panic!("{e} config: {err}"))
}

fn run(e: Experiment, text: &str, out: &Path) -> Result<RunManifest, String> {
    experiment::run(&config(e, text, out)).map(|o| o.manifest).map_err(|err| err.to_string())
}

/// Verdict from the named manifest checks, listing their measured values.
fn from_checks(m: &RunManifest, names: &[&str]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        match m.check(name) {
            Some(c) => {
                pass &= c.pass;
                parts.push(format!("{name}={:.4e} (limit {:.4e})", c.measured, c.threshold));
            }
            None => {
                pass = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    Verdict::new(pass, parts.join(", "))
}

fn scratch() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

fn tails_sandwich() -> Verdict {
    let dir = scratch();
    match run(Experiment::Tails, "", dir.path()) {
        Ok(m) => from_checks(&m, &["tail_sandwich_violations"]),
        Err(e) => Verdict::new(false, e),
    }
}

fn tails_inversion() -> Verdict {
    let dir = scratch();
    let text = "inversion_tol = 1e-10";
    match run(Experiment::Tails, text, dir.path()) {
        Ok(m) => from_checks(&m, &["inversion_max_error"]),
        Err(e) => Verdict::new(false, e),
    }
}

fn random_weighted_graph(index: u64) -> WeightedGraph {
    let mut rng = stream(SEED, "oracle-graph", index);
    let n = rng.random_range(8..=256usize);
    let density = rng.random_range(0.05..0.6);
    let mut edges = Vec::new();
    // a spanning path keeps the graph connected
    for i in 1..n {
        edges.push(((i - 1) as u32, i as u32, rng.random_range(0.1..2.0)));
    }
    for i in 0..n {
        for j in i + 2..n {
            if rng.random::<f64>() < density {
                edges.push((i as u32, j as u32, rng.random_range(0.1..2.0)));
            }
        }
    }
    WeightedGraph::from_edges(n, &edges)
}

fn eigensolver_oracle() -> Verdict {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let g = random_weighted_graph(i);
        let op = match normalized_adjacency(&g) {
            Ok(op) => op,
            Err(e) => return Verdict::new(false, format!("graph {i}: {e}")),
        };
        let dense = second_abs_eigenvalue_with(&op, 1e-10, Method::Dense);
        let iter = second_abs_eigenvalue_with(&op, 1e-10, Method::Iterative);
        match (dense, iter) {
            (Ok(a), Ok(b)) => worst = worst.max((a.second_abs_eigenvalue - b.second_abs_eigenvalue).abs()),
            (Err(e), _) | (_, Err(e)) => return Verdict::new(false, format!("graph {i}: {e}")),
        }
    }
    Verdict::new(worst <= 1e-8, format!("max |dense - iterative| = {worst:.3e} over 50 graphs (limit 1e-8)"))
}

fn trickle_down() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [300, 600, 1000] {
        let dir = scratch();
        let text = format!("n = {n}\ntrials = 2\nmin_pn = 20\nmin_qpn = 1");
        match run(Experiment::HdxVerify, &text, dir.path()) {
            Ok(m) => {
                let slack = m.check("trickle_down_min_slack");
                let connected = m.derived.get("connected_skeletons").copied().unwrap_or(0.0);
                let ok = slack.is_some_and(|c| c.pass) && connected > 0.0;
                pass &= ok;
                let s = slack.map_or(f64::NAN, |c| c.measured);
                parts.push(format!("n={n}: min slack {s:.4e} over {connected} connected"));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("n={n}: {e}"));
            }
        }
    }
    Verdict::new(pass, parts.join("; "))
}

fn cap_link_window() -> Verdict {
    let (tau, d, m) = (0.5, 200, 1500);
    let target = tau / (1.0 + tau);
    let (lo, hi) = (target - 0.1, target + 0.1);
    let mut inside = 0;
    let mut empty = 0;
    let mut seen = Vec::new();
    for i in 0..20 {
        match cap_link_spectrum(i, m, tau, d, split_seed(SEED, "cap-link", i as u64), 1e-10) {
            Ok(row) => {
                if row.lambda_abs.is_nan() {
                    empty += 1;
                } else {
                    seen.push(row.lambda_abs);
                }
                if row.lambda_abs >= lo && row.lambda_abs <= hi {
                    inside += 1;
                }
            }
            Err(e) => return Verdict::new(false, format!("link {i}: {e}")),
        }
    }
    let range = seen.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Verdict::new(
        inside == 20,
        format!("{inside}/20 in [{lo:.4}, {hi:.4}], {empty} links without edges, observed range {range:?}"),
    )
}

fn global_spectrum() -> Verdict {
    let dir = scratch();
    let text = "n = 3000\nd = 60\np = 0.1\nseeds = 20\nwindow = 0.1\nmin_fraction = 0.9";
    match run(Experiment::SphereSpectrum, text, dir.path()) {
        Ok(m) => {
            let mut v = from_checks(&m, &["lambda2_in_window_fraction"]);
            let tau = m.derived.get("tau").copied().unwrap_or(f64::NAN);
            let dev = m.derived.get("max_abs_lambda2_minus_tau").copied().unwrap_or(f64::NAN);
            v.detail.push_str(&format!(", tau={tau:.4}, max |lambda2 - tau|={dev:.4}"));
            v
        }
        Err(e) => Verdict::new(false, e),
    }
}

const MIXING: &str = "d = 100\ntau = 0.5\ntrials = 100000\nratio_slack = 1.25\nbm_d = 50\nbm_times = [0.005, 0.01, 0.02]\nbm_trials = 10000";

fn cap_walk_decay() -> Verdict {
    let dir = scratch();
    match run(Experiment::Mixing, MIXING, dir.path()) {
        Ok(m) => from_checks(&m, &["decay_ratio_max"]),
        Err(e) => Verdict::new(false, e),
    }
}

fn brownian_motion() -> Verdict {
    let dir = scratch();
    match run(Experiment::Mixing, MIXING, dir.path()) {
        Ok(m) => from_checks(&m, &["bm_mean_outside_3sigma", "bm_tail_violations"]),
        Err(e) => Verdict::new(false, e),
    }
}

fn walk_enumeration() -> Verdict {
    let dir = scratch();
    let text = "ell_max = 6\nlabels = 5\nforests = 0";
    match run(Experiment::WalkCombinatorics, text, dir.path()) {
        Ok(m) => from_checks(&m, &["shape_violations", "class_bound_violations"]),
        Err(e) => Verdict::new(false, e),
    }
}

fn subgraph_probabilities() -> Verdict {
    let dir = scratch();
    let text = "ell_max = 2\nlabels = 2\nd = 80\np = 0.05\nforests = 20\ntriangle_trials = 1000000";
    match run(Experiment::WalkCombinatorics, text, dir.path()) {
        Ok(m) => from_checks(&m, &["forest_outside_sigma", "triangle_in_window"]),
        Err(e) => Verdict::new(false, e),
    }
}

fn shell_suite() -> Verdict {
    let dir = scratch();
    let text = "d = 400\nm = 1500\ntau = 0.5\ngamma = 1\nresamples = 100\nmin_pass_fraction = 0.95\ndegree_resamples = 0";
    match run(Experiment::ShellAnalysis, text, dir.path()) {
        Ok(m) => from_checks(
            &m,
            &[
                "row_stochastic_error",
                "spectral_pass_fraction",
                "row_l1_pass_fraction",
                "outlier_mass_pass_fraction",
                "outlier_ratio_max",
                "ratio_claims_max_deviation",
            ],
        ),
        Err(e) => Verdict::new(false, e),
    }
}

fn tightness() -> Verdict {
    let dir = scratch();
    let text = "lambda_target = 0.3333333333333333\nskeleton_slack = 0.1\nlink_slack = 0.1";
    match run(Experiment::Tightness, text, dir.path()) {
        Ok(m) => from_checks(&m, &["skeleton_lambda2", "link_lambda_max"]),
        Err(e) => Verdict::new(false, e),
    }
}

/// Every output file except the wall-clock timings, by name.
fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .expect("output dir")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.file_name().is_some_and(|n| n != experiment::TIMINGS_FILE))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).expect("read output")))
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let cases = [
        (Experiment::Tails, "d_grid = [20, 200]"),
        (Experiment::SphereSpectrum, "n = 400\nd = 20\np = 0.2\nseeds = 3\nmin_fraction = 0"),
        (Experiment::HdxVerify, "n = 300\nmin_pn = 20\nmin_qpn = 1"),
        (Experiment::Mixing, "d = 30\ntrials = 5000\nbm_trials = 500"),
        (Experiment::WalkCombinatorics, "ell_max = 4\nlabels = 4\nforests = 3\nforest_trials = 5000\ntriangle_trials = 5000"),
        (Experiment::ShellAnalysis, "d = 100\nm = 300\nresamples = 3\nclaim_triples = 20\ndegree_m = 300\ndegree_resamples = 2"),
    ];
    let mut compared = 0;
    for (e, text) in cases {
        let mut runs = Vec::new();
        for workers in [1, 2] {
            let dir = scratch();
            let cfg = config(e, text, dir.path());
            let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("pool");
            if let Err(err) = pool.install(|| experiment::run(&cfg)) {
                return Verdict::new(false, format!("{e}: {err}"));
            }
            runs.push(outputs(dir.path()));
        }
        if runs[0] != runs[1] {
            let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
            return Verdict::new(false, format!("{e}: outputs differ between runs ({names:?})"));
        }
        compared += runs[0].len();
    }
    Verdict::new(true, format!("{compared} files byte-identical across reruns with 1 and 2 workers"))
}

type Criterion = (&'static str, u64, fn() -> Verdict);

fn main() {
    // cargo passes libtest flags such as --nocapture; listing must not run the suite
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [Criterion; 13] = [
        ("tail sandwich bounds", 10, tails_sandwich),
        ("tail inversion round trip", 5, tails_inversion),
        ("iterative eigensolver matches dense", 60, eigensolver_oracle),
        ("trickle-down inequality", 600, trickle_down),
        ("cap link eigenvalue window", 600, cap_link_window),
        ("global spectrum window", 1200, global_spectrum),
        ("cap walk decay ratio", 300, cap_walk_decay),
        ("Brownian motion concentration", 300, brownian_motion),
        ("walk combinatorics exhaustive", 120, walk_enumeration),
        ("subgraph probabilities", 300, subgraph_probabilities),
        ("shell matrix suite", 900, shell_suite),
        ("tightness construction", 900, tightness),
        ("byte-identical reruns", 60, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let pass = v.pass && in_time;
        failed += usize::from(!pass);
        let tag = if pass { "PASS" } else { "FAIL" };
        let time = if in_time { String::new() } else { format!(" [over {budget} s budget]") };
        println!("{tag} {:>2} {name}: {} ({:.1} s){time}", i + 1, v.detail, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
