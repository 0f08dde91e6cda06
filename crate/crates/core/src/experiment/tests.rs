use super::*;

fn no_env() -> Vec<(String, String)> {
    Vec::new()
}

fn resolve(e: Experiment, file: Option<&str>, env: &[(&str, &str)], cli: &Overrides) -> Result<RunConfig> {
    let env = env.iter().map(|(k, v)| (k.to_string(), v.to_string()));
    RunConfig::resolve(e, file, env, cli)
}

#[test]
fn defaults_validate_for_every_experiment() {
    for e in Experiment::ALL {
        let cfg = RunConfig::resolve(e, None, no_env(), &Overrides::default()).unwrap();
        assert_eq!(cfg, RunConfig::defaults(e));
        assert!(!ExperimentParams::keys(e).is_empty());
    }
}

#[test]
fn names_round_trip() {
    for e in Experiment::ALL {
        assert_eq!(Experiment::from_name(e.name()), Some(e));
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, format!("\"{}\"", e.name()));
    }
    assert_eq!(Experiment::from_name("nope"), None);
}

#[test]
fn unknown_key_is_rejected_by_name() {
    let err = resolve(Experiment::Mixing, Some("k_maxx = 3"), &[], &Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("k_maxx"), "{err}");
    let err = resolve(Experiment::Mixing, None, &[("HDXGEO_BOGUS", "1")], &Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("bogus"), "{err}");
}

#[test]
fn type_mismatch_names_the_field() {
    let err = resolve(Experiment::Mixing, Some("tau = \"half\""), &[], &Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("tau"), "{err}");
    let err = resolve(Experiment::Mixing, Some("k_max = -1"), &[], &Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("k_max"), "{err}");
}

#[test]
fn integers_coerce_to_floats() {
    let cfg = resolve(Experiment::Tails, Some("t_grid = [0.5, 1]\ninversion_tol = 1"), &[], &Overrides::default());
    // 1 is outside the open unit interval, so the coerced value reaches validation
    let err = cfg.unwrap_err();
    assert!(err.to_string().contains("t_grid"), "{err}");
    let cfg = resolve(Experiment::Mixing, Some("ratio_slack = 2"), &[], &Overrides::default()).unwrap();
    match cfg.params {
        ExperimentParams::Mixing(p) => assert_eq!(p.ratio_slack, 2.0),
        _ => unreachable!(),
    }
}

#[test]
fn precedence_is_cli_env_file_defaults() {
    let file = "seed = 5\nout = \"from-file\"\nd = 30\ntau = 0.3\nk_max = 4";
    let env = [("HDXGEO_TAU", "0.4"), ("HDXGEO_SEED", "99"), ("OTHER_TAU", "0.9")];
    let cli = Overrides { seed: Some(7), out: None, workers: Some(2) };
    let cfg = resolve(Experiment::Mixing, Some(file), &env, &cli).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.out, PathBuf::from("from-file"));
    assert_eq!(cfg.workers, Some(2));
    match cfg.params {
        ExperimentParams::Mixing(p) => {
            assert_eq!(p.d, 30);
            assert_eq!(p.tau, 0.4);
            assert_eq!(p.k_max, 4);
            assert_eq!(p.trials, MixingParams::default().trials);
        }
        _ => unreachable!(),
    }
}

#[test]
fn env_arrays_and_strings_parse() {
    let cfg = resolve(Experiment::Tails, None, &[("HDXGEO_D_GRID", "[10, 20]")], &Overrides::default()).unwrap();
    match cfg.params {
        ExperimentParams::Tails(p) => assert_eq!(p.d_grid, vec![10, 20]),
        _ => unreachable!(),
    }
    let err = resolve(Experiment::Tails, None, &[("HDXGEO_D_GRID", "ten")], &Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("d_grid"), "{err}");
}

#[test]
fn mismatched_experiment_in_file_is_rejected() {
    let err = resolve(Experiment::Tails, Some("experiment = \"mixing\""), &[], &Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("experiment"), "{err}");
    assert!(resolve(Experiment::Tails, Some("experiment = \"tails\""), &[], &Overrides::default()).is_ok());
}

#[test]
fn invalid_values_are_rejected() {
    let bad = [
        (Experiment::SphereSpectrum, "p = 1.5"),
        (Experiment::SphereSpectrum, "seeds = 0"),
        (Experiment::Tightness, "lambda_target = 0.01"),
        (Experiment::ShellAnalysis, "tau = 0"),
        (Experiment::ShellAnalysis, "min_pass_fraction = 2"),
        (Experiment::Tails, "d_grid = []"),
        (Experiment::Tails, "seed = -3"),
        (Experiment::Tails, "workers = 0"),
    ];
    for (e, text) in bad {
        assert!(resolve(e, Some(text), &[], &Overrides::default()).is_err(), "{e}: {text}");
    }
    assert!(resolve(Experiment::Tails, Some("not toml ="), &[], &Overrides::default()).is_err());
}

#[test]
fn fraction_true_counts() {
    assert_eq!(fraction_true([]), 0.0);
    assert_eq!(fraction_true([true, false, true, true]), 0.75);
}

fn small(e: Experiment) -> &'static str {
    match e {
        Experiment::Tails => "d_grid = [10, 40]\nt_grid = [0.1, 0.5]\np_grid = [0.01, 0.3]",
        Experiment::SphereSpectrum => "n = 300\nd = 20\np = 0.2\nseeds = 3\nwindow = 0.3\nmin_fraction = 0.0",
        Experiment::HdxVerify => "n = 200\neps = 0.5\neta_param = 1.5\nmin_pn = 5\nmin_qpn = 1\nlink_slack = 1.0",
        Experiment::Tightness => "n = 300\nd = 6\nlambda_target = 0.3\nskeleton_slack = 1.0\nlink_slack = 1.0\ntv_max = 1.0",
        Experiment::Mixing => {
            "d = 20\nk_max = 3\ntrials = 2000\nbins = 10\nratio_slack = 100\nbm_d = 10\nbm_times = [0.01]\nbm_trials = 200"
        }
        Experiment::WalkCombinatorics => {
            "ell_max = 4\nlabels = 3\nbudget = 100000\nd = 20\np = 0.2\nforests = 2\nforest_trials = 2000\ntriangle_trials = 2000"
        }
        Experiment::ShellAnalysis => {
            "d = 60\nm = 80\ntau = 0.3\nresamples = 2\nmin_pass_fraction = 0\nnd_points = 3\nclaim_triples = 5\ndegree_m = 60\ndegree_resamples = 2"
        }
    }
}

fn small_run(e: Experiment, dir: &Path) -> RunOutcome {
    let cli = Overrides { seed: Some(3), out: Some(dir.to_path_buf()), workers: None };
    let cfg = resolve(e, Some(small(e)), &[], &cli).unwrap();
    run(&cfg).unwrap_or_else(|err| panic!("{e}: {err}"))
}

#[test]
fn small_runs_write_declared_outputs_and_reproduce() {
    for e in Experiment::ALL {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = small_run(e, a.path());
        small_run(e, b.path());
        assert!(!ra.manifest.checks.is_empty(), "{e}");
        for (file, columns) in e.csv_columns() {
            if !ra.manifest.outputs.iter().any(|o| o == file) {
                continue;
            }
            let text = fs::read_to_string(a.path().join(file)).unwrap();
            let header = text.lines().next().unwrap_or("");
            assert_eq!(header, columns.join(","), "{e} {file}");
            assert_eq!(text, fs::read_to_string(b.path().join(file)).unwrap(), "{e} {file}");
        }
        let ma = fs::read(a.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(ma, fs::read(b.path().join(MANIFEST_FILE)).unwrap(), "{e}");
        let parsed: RunManifest = serde_json::from_slice(&ma).unwrap();
        assert_eq!(parsed.schema, MANIFEST_SCHEMA);
        assert_eq!(parsed.experiment, e);
        assert!(a.path().join(TIMINGS_FILE).exists());
    }
}

#[test]
fn failing_check_sets_fail_status() {
    let dir = tempfile::tempdir().unwrap();
    let text = "d = 20\nk_max = 3\ntrials = 2000\nbins = 10\nratio_slack = 0.0001\nbm_d = 10\nbm_times = [0.01]\nbm_trials = 200";
    let cli = Overrides { seed: Some(1), out: Some(dir.path().to_path_buf()), workers: None };
    let cfg = resolve(Experiment::Mixing, Some(text), &[], &cli).unwrap();
    let out = run(&cfg).unwrap();
    assert_eq!(out.manifest.status, Status::Fail);
    assert_eq!(out.manifest.exit_code(), 2);
    assert!(!out.manifest.check("decay_ratio_max").unwrap().pass);
}

#[test]
fn runtime_error_still_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // a link target this small needs far more vertices than are sampled
    let text = "n = 50\nmin_pn = 1000";
    let cli = Overrides { seed: Some(1), out: Some(dir.path().to_path_buf()), workers: None };
    let cfg = resolve(Experiment::HdxVerify, Some(text), &[], &cli).unwrap();
    assert!(run(&cfg).is_err());
    let m: RunManifest = serde_json::from_slice(&fs::read(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(m.status, Status::Error);
    assert_eq!(m.exit_code(), 1);
    assert!(m.error.is_some());
}

#[test]
fn toml_echo_round_trips() {
    for e in Experiment::ALL {
        for seed in [0, 42, u64::MAX] {
            let mut cfg = RunConfig::defaults(e);
            cfg.seed = seed;
            cfg.workers = Some(3);
            let text = cfg.to_toml();
            let back = RunConfig::resolve(e, Some(&text), no_env(), &Overrides::default()).unwrap();
            assert_eq!(back, cfg, "{e}\n{text}");
        }
    }
}
