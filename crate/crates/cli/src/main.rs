//! `hdxgeo <experiment> [--config FILE] [--seed N] [--out DIR] [--workers K]`
//!
//! Exit status: 0 when every check passes, 2 when a check fails, 1 on a
//! config or execution error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgMatches, Args, Command, FromArgMatches};
use hdxgeo_core::experiment::{
    self, Experiment, ExperimentParams, Overrides, RunConfig, RunManifest, Status, ENV_PREFIX, MANIFEST_FILE,
    TIMINGS_FILE,
};

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML file with parameters; keys not listed below are rejected.
    #[arg(long, env = "HDXGEO_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for every random phase.
    #[arg(long, env = "HDXGEO_SEED", value_name = "N")]
    seed: Option<u64>,
    /// Output directory (default out/<experiment>).
    #[arg(long, env = "HDXGEO_OUT", value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, env = "HDXGEO_WORKERS", value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Print the resolved config as TOML and exit without running.
    #[arg(long)]
    print_config: bool,
}

fn about(e: Experiment) -> &'static str {
    match e {
        Experiment::Tails => "Spherical cap tails against their analytic sandwich bounds, and tail inversion",
        Experiment::SphereSpectrum => "Second eigenvalue of random geometric graphs on the sphere",
        Experiment::HdxVerify => "Sample a random geometric 2-complex and check link and skeleton expansion",
        Experiment::Tightness => "Complex whose links meet a target expansion; skeleton eigenvalue lower bound",
        Experiment::Mixing => "Cap walk total-variation decay and Brownian motion concentration",
        Experiment::WalkCombinatorics => "Closed-walk shape enumeration and subgraph probabilities",
        Experiment::ShellAnalysis => "Shell-indexed transition matrices of cap links",
    }
}

fn long_help(e: Experiment) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Parameters (config key, environment variable, default):");
    let defaults = RunConfig::defaults(e).to_toml();
    let keys = ExperimentParams::keys(e);
    for line in defaults.lines() {
        let Some((key, _)) = line.split_once(" = ") else { continue };
        if keys.iter().any(|k| k == key) {
            let _ = writeln!(s, "  {line:<48} {ENV_PREFIX}{}", key.to_ascii_uppercase());
        }
    }
    let _ = writeln!(s, "\nOutputs in the output directory:");
    let _ = writeln!(s, "  {MANIFEST_FILE}: config, derived quantities, checks, status");
    let _ = writeln!(s, "  {TIMINGS_FILE}: seconds per phase and worker count");
    for (file, columns) in e.csv_columns() {
        let _ = writeln!(s, "  {file}: {}", columns.join(","));
    }
    let _ = write!(s, "\nExit status: 0 all checks pass, 2 a check failed, 1 error.");
    s
}

fn cli() -> Command {
    let mut cmd = Command::new("hdxgeo")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Random geometric complexes on the sphere: sampling and expansion experiments")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for e in Experiment::ALL {
        let sub = Command::new(e.name()).about(about(e)).after_long_help(long_help(e));
        cmd = cmd.subcommand(RunArgs::augment_args(sub));
    }
    cmd
}

fn resolve(e: Experiment, args: &RunArgs) -> Result<RunConfig, String> {
    let text = match &args.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|err| format!("{}: {err}", path.display()))?),
        None => None,
    };
    let overrides = Overrides { seed: args.seed, out: args.out.clone(), workers: args.workers.map(|w| w as usize) };
    RunConfig::resolve(e, text.as_deref(), std::env::vars(), &overrides).map_err(|err| err.to_string())
}

fn report(m: &RunManifest) {
    for c in &m.checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        let rel = match c.relation {
            experiment::Relation::Le => "<=",
            experiment::Relation::Ge => ">=",
        };
        println!("{tag} {}: {} {rel} {}", c.name, c.measured, c.threshold);
    }
}

fn run(matches: &ArgMatches) -> Result<Status, String> {
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let e = Experiment::from_name(name).expect("subcommands come from Experiment::ALL");
    let args = RunArgs::from_arg_matches(sub).map_err(|err| err.to_string())?;
    let config = resolve(e, &args)?;
    if args.print_config {
        print!("{}", config.to_toml());
        return Ok(Status::Pass);
    }
    if let Some(w) = config.workers {
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().map_err(|err| err.to_string())?;
    }
    let outcome = experiment::run(&config).map_err(|err| format!("{e} failed: {err}"))?;
    report(&outcome.manifest);
    println!("{}: {:?}, results in {}", e, outcome.manifest.status, outcome.out.display());
    Ok(outcome.manifest.status)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would read as a failed check
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&matches) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(2),
        Ok(Status::Error) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
