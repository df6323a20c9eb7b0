use super::*;

fn small(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        out: dir.to_path_buf(),
        ..Default::default()
    };
    cfg.network.relays = 30;
    cfg.network.clients = Some(40);
    cfg.network.destinations = 6;
    cfg.workload.epochs = 6;
    cfg.learn.forest.n_trees = 10;
    cfg.learn.sweep_points = 4;
    cfg.clasi.n_train = 300;
    cfg.clasi.n_test = 100;
    cfg.clasi.repeats = 2;
    cfg.clasi.forest.n_trees = 10;
    cfg.metrics.days = 2;
    cfg
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn generate_refuses_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    cmd_generate(&cfg, false).unwrap();
    let first = read(dir.path().join(RELAYS_FILE));
    assert!(matches!(cmd_generate(&cfg, false), Err(Error::Config(_))));
    cmd_generate(&cfg, true).unwrap();
    assert_eq!(read(dir.path().join(RELAYS_FILE)), first);
    let net = load_network(&cfg).unwrap();
    assert_eq!(net.relays.len(), 30);
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cmd_generate(&cfg, false).unwrap();
    let rec = dir.path().join(RECORDS_FILE);
    let s = cmd_simulate(&cfg, &Algorithm::Vanilla, None, &rec, false).unwrap();
    assert!(s.streams > 0 && s.median_s > 0.0 && s.p90_s >= s.median_s);

    let missing = cmd_simulate(&cfg, &Algorithm::predictor(), None, &rec, true);
    assert!(matches!(&missing, Err(Error::Config(m)) if m.contains("model required")));

    let t = cmd_train(&cfg, &rec, TauPolicy::Median, false).unwrap();
    let recs = load_records(&rec).unwrap();
    assert_eq!(t.tau, median_ttlb(&recs).unwrap());
    assert_eq!(
        ForestModel::load(&dir.path().join(MODEL_FILE)).unwrap().tau,
        Some(t.tau)
    );
    assert_eq!(read(dir.path().join(SWEEP_FILE)).lines().count(), 5);

    let fixed = cmd_train(&cfg, &rec, TauPolicy::Fixed(0.5), true).unwrap();
    assert_eq!(fixed.model.tau, Some(0.5));

    let none = cmd_train(&cfg, &rec, TauPolicy::Fixed(0.0), true);
    assert!(matches!(&none, Err(e) if exit_code(e) == 3));

    cmd_train(&cfg, &rec, TauPolicy::Median, true).unwrap();
    cfg.learn.model = Some(dir.path().join(MODEL_FILE));
    let rows = cmd_compare(
        &cfg,
        &[Algorithm::Vanilla, Algorithm::predictor()],
        None,
        false,
    )
    .unwrap();
    assert_eq!(rows.len(), 2);
    let text = read(dir.path().join(COMPARE_FILE));
    assert_eq!(text.lines().next(), Some(COMPARE_HEADER));
    assert_eq!(text.lines().count(), 3);

    let r = cmd_clasi(&cfg, &Algorithm::Vanilla, None, false).unwrap();
    assert_eq!(r.accuracy - r.baseline, r.epsilon_s);
    let json: serde_json::Value =
        serde_json::from_str(&read(dir.path().join(LEAKAGE_FILE))).unwrap();
    for k in [
        "epsilon_s",
        "baseline",
        "accuracy",
        "ci95",
        "repeats",
        "config_hash",
    ] {
        assert!(json.get(k).is_some(), "{k}");
    }
    assert_eq!(json["ci95"].as_array().unwrap().len(), 2);

    let m = cmd_metrics(&cfg, &Algorithm::Vanilla, None, false).unwrap();
    assert_eq!(m.rows[0].0, "streams");
    assert!(read(dir.path().join(METRICS_FILE)).starts_with("metric,value\n"));
}

#[test]
fn single_repeat_reports_no_interval() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.clasi.repeats = 1;
    cmd_generate(&cfg, false).unwrap();
    cmd_clasi(&cfg, &Algorithm::Vanilla, None, false).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&read(dir.path().join(LEAKAGE_FILE))).unwrap();
    assert!(json["ci95"].is_null());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg_path = dir.path().join("bad.toml");
    std::fs::write(&cfg_path, "[network]\nclient_ratio = 0\n").unwrap();
    let bad = cfg_path.to_str().unwrap();
    assert_eq!(
        run_from_args(["torsellab", "generate", "--config", bad, "--out", out]),
        2
    );
    assert_eq!(run_from_args(["torsellab", "simulate", "--out", out]), 2);
    assert_eq!(run_from_args(["torsellab", "frobnicate"]), 2);
    assert_eq!(
        run_from_args([
            "torsellab",
            "compare",
            "--algos",
            "vanilla,warp",
            "--out",
            out
        ]),
        2
    );
}
