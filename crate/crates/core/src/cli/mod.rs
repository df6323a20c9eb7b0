//! Experiment commands behind the `torsellab` binary.
//!
//! Every command reads an [`ExperimentConfig`], works inside its output
//! directory and refuses to overwrite existing outputs unless forced. Exit
//! codes: 0 on success, 2 for usage or input errors, 3 for degenerate data.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::anonmetrics::{
    circuit_length_km, clasi_game, gini, path_is_vulnerable, save_metrics, save_paths,
    selection_counts, time_to_first_compromise, uniformity_degree, vulnerable_rate, ClasiPath,
    CountBasis, LeakageReport, PathSimulator, TimelineEvent, TtfcReport,
};
use crate::learn::{
    evaluate, label_samples, median_ttlb, quantile_grid, save_sweep, sweep_tau, train_labeled,
    EvalReport, ForestCircuitClassifier, ForestModel, LabeledSet, SweepPoint,
};
use crate::netmodel::{generate_network, NetworkModel, ENDPOINTS_FILE, RELAYS_FILE, TOPOLOGY_FILE};
use crate::pathsel::{Algorithm, Circuit, CircuitClassifier, Selector};
use crate::seed::{self, stream};
use crate::simcore::{
    load_records, relay_utilization, run_epochs, save_records, SimOutput, StreamRecord,
};
use crate::stats::{median, quantile};
use crate::{Error, Result};

pub use config::{
    env_name, user_model, ClasiSection, CompareSection, ExperimentConfig, LearnSection,
    MetricsSection, TauPolicy, ENV_PREFIX,
};

pub const RECORDS_FILE: &str = "records.csv";
pub const MODEL_FILE: &str = "model.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const COMPARE_FILE: &str = "compare.csv";
pub const COMPARE_BW_FILE: &str = "compare_bw.csv";
pub const LEAKAGE_FILE: &str = "leakage.json";
pub const REPEATS_FILE: &str = "clasi_repeats.csv";
pub const PATHS_FILE: &str = "paths.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TTFC_FILE: &str = "ttfc.csv";

pub const COMPARE_HEADER: &str = "algo,median_s,p90_s,median_bw,frac_relays_used,median_len_km";

#[derive(Debug, Parser)]
#[command(name = "torsellab", version, about = "Tor path-selection laboratory")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Default, Args)]
pub struct GlobalOpts {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// World seed; simulations use it too unless `sim_seed` is set.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding `out` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic network into the output directory.
    Generate,
    /// Simulate streams under one algorithm and write stream records.
    Simulate {
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Records file (default: <out>/records.csv).
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Train the circuit classifier from stream records.
    Train {
        #[arg(long)]
        records: Option<PathBuf>,
        /// `median` or a threshold in seconds.
        #[arg(long)]
        tau: Option<TauPolicy>,
    },
    /// Run several algorithms on one world and seed and tabulate them.
    Compare {
        /// Comma-separated algorithm labels, e.g. `vanilla,predictor,sb-15`.
        #[arg(long, value_delimiter = ',')]
        algos: Option<Vec<String>>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Play the CLASI sender-location game against one algorithm.
    Clasi {
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Selection inequality, vulnerability and time to first compromise.
    Metrics {
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

/// Loads the config named in `opts` and applies the command-line overrides.
pub fn resolve_config(opts: &GlobalOpts) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(opts.config.as_deref())?;
    if let Some(s) = opts.seed {
        cfg.network.seed = s;
    }
    if let Some(o) = &opts.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_degenerate() {
        3
    } else {
        2
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(&cli.global)?;
    let force = cli.global.force;
    match &cli.command {
        Command::Generate => {
            let net = cmd_generate(&cfg, force)?;
            println!(
                "wrote {} relays, {} clients, {} destinations to {}",
                net.relays.len(),
                net.clients.len(),
                net.destinations.len(),
                cfg.out.display()
            );
        }
        Command::Simulate {
            algo,
            model,
            records,
        } => {
            let algo = pick_algorithm(&cfg, algo.as_deref())?;
            let out = records
                .clone()
                .unwrap_or_else(|| cfg.out.join(RECORDS_FILE));
            let s = cmd_simulate(&cfg, &algo, model.as_deref(), &out, force)?;
            println!(
                "{}: {} streams, median {:.3} s, p90 {:.3} s",
                algo.label(),
                s.streams,
                s.median_s,
                s.p90_s
            );
        }
        Command::Train { records, tau } => {
            let input = records
                .clone()
                .unwrap_or_else(|| cfg.out.join(RECORDS_FILE));
            let s = cmd_train(&cfg, &input, tau.unwrap_or(cfg.learn.tau), force)?;
            println!(
                "tau {:.4} s, held-out accuracy {:.3} (majority {:.3}), fpr {:.3}, fnr {:.3}",
                s.tau,
                s.holdout.accuracy,
                s.holdout.majority_baseline(),
                s.holdout.fpr,
                s.holdout.fnr
            );
        }
        Command::Compare { algos, model } => {
            let labels = algos.clone().unwrap_or_else(|| cfg.compare.algos.clone());
            let algos = labels
                .iter()
                .map(|l| l.parse())
                .collect::<Result<Vec<Algorithm>>>()?;
            let rows = cmd_compare(&cfg, &algos, model.as_deref(), force)?;
            println!("{COMPARE_HEADER}");
            for r in rows {
                println!("{}", r.csv_line());
            }
        }
        Command::Clasi { algo, model } => {
            let algo = pick_algorithm(&cfg, algo.as_deref())?;
            let r = cmd_clasi(&cfg, &algo, model.as_deref(), force)?;
            print!(
                "{}: epsilon_s {:.4} (accuracy {:.4}, baseline {:.4})",
                algo.label(),
                r.epsilon_s,
                r.accuracy,
                r.baseline
            );
            match r.ci95 {
                Some((lo, hi)) => println!(", 95% CI [{lo:.4}, {hi:.4}]"),
                None => println!(", CI unavailable with a single repeat"),
            }
        }
        Command::Metrics { algo, model } => {
            let algo = pick_algorithm(&cfg, algo.as_deref())?;
            for (k, v) in cmd_metrics(&cfg, &algo, model.as_deref(), force)?.rows {
                println!("{k},{v}");
            }
        }
    }
    Ok(())
}

fn pick_algorithm(cfg: &ExperimentConfig, flag: Option<&str>) -> Result<Algorithm> {
    match flag {
        Some(s) => s.parse(),
        None => Ok(cfg.algorithm.clone()),
    }
}

fn guard_outputs(paths: &[&Path], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(Error::Config(format!(
            "{} exists; pass --force to overwrite",
            p.display()
        ))),
        None => Ok(()),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn cmd_generate(cfg: &ExperimentConfig, force: bool) -> Result<NetworkModel> {
    let files: Vec<PathBuf> = [RELAYS_FILE, ENDPOINTS_FILE, TOPOLOGY_FILE]
        .iter()
        .map(|f| cfg.out.join(f))
        .collect();
    guard_outputs(
        &files.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        force,
    )?;
    let net = generate_network(&cfg.network)?;
    net.save_dir(&cfg.out)?;
    Ok(net)
}

pub fn load_network(cfg: &ExperimentConfig) -> Result<NetworkModel> {
    NetworkModel::load_dir(&cfg.out)
}

fn model_path(cfg: &ExperimentConfig, flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.learn.model.clone())
}

/// Loads the configured model when any of `algos` needs one.
pub fn load_model_for(
    cfg: &ExperimentConfig,
    algos: &[Algorithm],
    flag: Option<&Path>,
) -> Result<Option<ForestModel>> {
    let Some(needing) = algos.iter().find(|a| a.needs_model()) else {
        return Ok(None);
    };
    match model_path(cfg, flag) {
        Some(p) => Ok(Some(ForestModel::load(&p)?)),
        None => Err(Error::Config(format!(
            "model required: {} needs --model or learn.model",
            needing.label()
        ))),
    }
}

type SharedClassifier<'a> = Arc<dyn CircuitClassifier + Send + Sync + 'a>;

fn classifier<'a>(
    net: &'a NetworkModel,
    model: Option<&'a ForestModel>,
) -> Result<Option<SharedClassifier<'a>>> {
    model
        .map(|m| Ok(Arc::new(ForestCircuitClassifier::new(net, m)?) as SharedClassifier<'a>))
        .transpose()
}

fn selector<'a>(
    cfg: &ExperimentConfig,
    net: &'a NetworkModel,
    algo: &Algorithm,
    clf: Option<SharedClassifier<'a>>,
) -> Result<Selector<'a>> {
    let mut sel = Selector::new(net, algo.clone(), clf)?;
    sel.car_probes = cfg.sim.car_probes;
    Ok(sel)
}

/// Runs the configured workload under `algo` on `net`.
pub fn simulate_on(
    cfg: &ExperimentConfig,
    net: &NetworkModel,
    algo: &Algorithm,
    model: Option<&ForestModel>,
) -> Result<SimOutput> {
    let sel = selector(cfg, net, algo, classifier(net, model)?)?;
    run_epochs(
        &sel,
        &cfg.workload,
        &cfg.sim,
        cfg.sim_seed(),
        cfg.world_seed(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimSummary {
    pub streams: usize,
    pub median_s: f64,
    pub p90_s: f64,
}

fn ttlbs(records: &[StreamRecord]) -> Vec<f64> {
    records.iter().map(|r| r.ttlb_s).collect()
}

pub fn cmd_simulate(
    cfg: &ExperimentConfig,
    algo: &Algorithm,
    model: Option<&Path>,
    records_out: &Path,
    force: bool,
) -> Result<SimSummary> {
    let model = load_model_for(cfg, std::slice::from_ref(algo), model)?;
    guard_outputs(&[records_out], force)?;
    let net = load_network(cfg)?;
    let out = simulate_on(cfg, &net, algo, model.as_ref())?;
    if let Some(dir) = records_out.parent() {
        ensure_dir(dir)?;
    }
    save_records(records_out, &out.records)?;
    let t = ttlbs(&out.records);
    Ok(SimSummary {
        streams: t.len(),
        median_s: median(&t).ok_or_else(|| Error::Degenerate("no streams".into()))?,
        p90_s: quantile(&t, 0.9).expect("nonempty"),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    pub tau: f64,
    /// Forest trained on the non-held-out records, scored on the held-out ones.
    pub holdout: EvalReport,
    pub sweep: Vec<SweepPoint>,
    pub model: ForestModel,
}

/// Deterministic train/held-out split of a labelled set.
pub fn holdout_split(set: &LabeledSet, holdout: f64, seed: u64) -> (LabeledSet, LabeledSet) {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..set.samples.len()).collect();
    idx.shuffle(&mut seed::rng(seed, &[stream::SHUFFLE]));
    let n_test = ((set.samples.len() as f64 * holdout).round() as usize).max(1);
    let pick = |ix: &[usize]| LabeledSet {
        tau: set.tau,
        samples: ix.iter().map(|&i| set.samples[i].clone()).collect(),
    };
    (pick(&idx[n_test..]), pick(&idx[..n_test]))
}

/// Labels records at the policy threshold, trains the model on all of them
/// and writes it with a sweep curve measured on a held-out split.
pub fn train_from_records(
    cfg: &ExperimentConfig,
    net: &NetworkModel,
    records: &[StreamRecord],
    tau: TauPolicy,
) -> Result<TrainSummary> {
    let tau = match tau {
        TauPolicy::Median => median_ttlb(records)?,
        TauPolicy::Fixed(t) => t,
    };
    let seed = cfg.sim_seed();
    let all = label_samples(net, records, tau)?;
    let (train, test) = holdout_split(&all, cfg.learn.holdout, seed);
    let params = &cfg.learn.forest;
    let model = train_labeled(&all, params, seed)?;
    let holdout = evaluate(&train_labeled(&train, params, seed)?, &test)?;
    let train_ttlb: Vec<f64> = train.samples.iter().map(|s| s.ttlb_s).collect();
    let grid = quantile_grid(&train_ttlb, cfg.learn.sweep_points)?;
    let sweep = sweep_tau(&train, &test, &grid, params, seed)?;
    Ok(TrainSummary {
        tau,
        holdout,
        sweep,
        model,
    })
}

pub fn cmd_train(
    cfg: &ExperimentConfig,
    records_path: &Path,
    tau: TauPolicy,
    force: bool,
) -> Result<TrainSummary> {
    let model_out = cfg.out.join(MODEL_FILE);
    let sweep_out = cfg.out.join(SWEEP_FILE);
    guard_outputs(&[&model_out, &sweep_out], force)?;
    let net = load_network(cfg)?;
    let records = load_records(records_path)?;
    if records.is_empty() {
        return Err(Error::Degenerate(format!(
            "{} holds no records",
            records_path.display()
        )));
    }
    let s = train_from_records(cfg, &net, &records, tau)?;
    s.model.save(&model_out)?;
    save_sweep(&sweep_out, &s.sweep)?;
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub algo: String,
    pub median_s: f64,
    pub p90_s: f64,
    pub median_bw: f64,
    pub frac_relays_used: f64,
    pub median_len_km: f64,
    /// Circuit consensus bandwidth (the circuit's slowest relay) at the
    /// deciles 0.1 to 0.9.
    pub bw_deciles: Vec<f64>,
}

impl CompareRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.algo,
            self.median_s,
            self.p90_s,
            self.median_bw,
            self.frac_relays_used,
            self.median_len_km
        )
    }
}

/// Consensus bandwidth of a circuit: that of its slowest relay.
pub fn circuit_bandwidth(net: &NetworkModel, c: &Circuit) -> Result<u64> {
    let mut bw = u64::MAX;
    for id in c.relays() {
        bw = bw.min(net.relay(id)?.bandwidth);
    }
    Ok(bw)
}

pub fn compare_row(
    net: &NetworkModel,
    algo: &Algorithm,
    records: &[StreamRecord],
) -> Result<CompareRow> {
    let t = ttlbs(records);
    let mut bw = Vec::with_capacity(records.len());
    let mut len = Vec::with_capacity(records.len());
    let mut cache: std::collections::HashMap<Circuit, (f64, f64)> = Default::default();
    for r in records {
        let (b, l) = match cache.get(&r.circuit) {
            Some(v) => *v,
            None => {
                let v = (
                    circuit_bandwidth(net, &r.circuit)? as f64,
                    circuit_length_km(net, &r.circuit)?,
                );
                cache.insert(r.circuit, v);
                v
            }
        };
        bw.push(b);
        len.push(l);
    }
    let none = || Error::Degenerate(format!("{} produced no streams", algo.label()));
    Ok(CompareRow {
        algo: algo.label(),
        median_s: median(&t).ok_or_else(none)?,
        p90_s: quantile(&t, 0.9).ok_or_else(none)?,
        median_bw: median(&bw).ok_or_else(none)?,
        frac_relays_used: relay_utilization(net, records)?.frac_used,
        median_len_km: median(&len).ok_or_else(none)?,
        bw_deciles: (1..=9)
            .map(|k| quantile(&bw, k as f64 / 10.0).ok_or_else(none))
            .collect::<Result<_>>()?,
    })
}

/// Every algorithm runs on the same world with the same seeds.
pub fn compare_on(
    cfg: &ExperimentConfig,
    net: &NetworkModel,
    algos: &[Algorithm],
    model: Option<&ForestModel>,
) -> Result<Vec<CompareRow>> {
    algos
        .iter()
        .map(|a| compare_row(net, a, &simulate_on(cfg, net, a, model)?.records))
        .collect()
}

pub fn cmd_compare(
    cfg: &ExperimentConfig,
    algos: &[Algorithm],
    model: Option<&Path>,
    force: bool,
) -> Result<Vec<CompareRow>> {
    if algos.is_empty() {
        return Err(Error::Config("compare needs at least one algorithm".into()));
    }
    let model = load_model_for(cfg, algos, model)?;
    let out = cfg.out.join(COMPARE_FILE);
    let bw_out = cfg.out.join(COMPARE_BW_FILE);
    guard_outputs(&[&out, &bw_out], force)?;
    let net = load_network(cfg)?;
    let rows = compare_on(cfg, &net, algos, model.as_ref())?;
    let mut text = format!("{COMPARE_HEADER}\n");
    let mut bw_text = String::from("algo,quantile,bandwidth\n");
    for r in &rows {
        text.push_str(&r.csv_line());
        text.push('\n');
        for (k, b) in r.bw_deciles.iter().enumerate() {
            bw_text.push_str(&format!("{},{},{}\n", r.algo, (k + 1) as f64 / 10.0, b));
        }
    }
    std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
    std::fs::write(&bw_out, bw_text).map_err(|e| Error::io(&bw_out, e))?;
    Ok(rows)
}

#[derive(Serialize)]
struct LeakageJson<'r> {
    epsilon_s: f64,
    baseline: f64,
    accuracy: f64,
    ci95: Option<[f64; 2]>,
    repeats: usize,
    config_hash: &'r str,
}

pub fn leakage_json(report: &LeakageReport, config_hash: &str) -> Result<String> {
    let j = LeakageJson {
        epsilon_s: report.epsilon_s,
        baseline: report.baseline,
        accuracy: report.accuracy,
        ci95: report.ci95.map(|(a, b)| [a, b]),
        repeats: report.repeats,
        config_hash,
    };
    let mut s = serde_json::to_string_pretty(&j)?;
    s.push('\n');
    Ok(s)
}

/// Plays the configured CLASI game against `algo` on `net`.
pub fn clasi_on(
    cfg: &ExperimentConfig,
    net: &NetworkModel,
    algo: &Algorithm,
    model: Option<&ForestModel>,
) -> Result<(LeakageReport, Vec<ClasiPath>)> {
    let sel = selector(cfg, net, algo, classifier(net, model)?)?;
    let mut ps = PathSimulator::new(
        &sel,
        cfg.clasi.user_model(),
        cfg.clasi.guard_policy,
        cfg.sim_seed(),
    )?;
    ps.params = cfg.sim.clone();
    let report = clasi_game(&ps, &cfg.clasi.params(), cfg.sim_seed())?;
    let sample = ps.generate_paths(cfg.clasi.n_test)?;
    Ok((report, sample))
}

pub fn cmd_clasi(
    cfg: &ExperimentConfig,
    algo: &Algorithm,
    model: Option<&Path>,
    force: bool,
) -> Result<LeakageReport> {
    let model = load_model_for(cfg, std::slice::from_ref(algo), model)?;
    let files = [LEAKAGE_FILE, REPEATS_FILE, PATHS_FILE].map(|f| cfg.out.join(f));
    guard_outputs(
        &files.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        force,
    )?;
    let net = load_network(cfg)?;
    let (report, sample) = clasi_on(cfg, &net, algo, model.as_ref())?;
    let json = leakage_json(&report, &cfg.config_hash())?;
    std::fs::write(&files[0], json).map_err(|e| Error::io(&files[0], e))?;
    let mut reps = String::from("repeat,accuracy,epsilon_s\n");
    for (i, a) in report.per_repeat.iter().enumerate() {
        reps.push_str(&format!("{i},{a},{}\n", a - report.baseline));
    }
    std::fs::write(&files[1], reps).map_err(|e| Error::io(&files[1], e))?;
    save_paths(&files[2], &sample)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsSummary {
    pub rows: Vec<(String, f64)>,
    pub ttfc: TtfcReport,
}

/// Runs the configured timeline under `algo` with sticky guards and measures
/// it.
pub fn metrics_on(
    cfg: &ExperimentConfig,
    net: &NetworkModel,
    algo: &Algorithm,
    model: Option<&ForestModel>,
) -> Result<MetricsSummary> {
    let m = &cfg.metrics;
    let sel = selector(cfg, net, algo, classifier(net, model)?)?;
    let mut ps = PathSimulator::new(
        &sel,
        user_model(m.dests_per_client),
        crate::anonmetrics::GuardPolicy::Sticky,
        cfg.sim_seed(),
    )?;
    ps.params = cfg.sim.clone();
    let timeline = ps.timeline(m.days * m.epochs_per_day, m.streams_per_epoch)?;
    let paths: Vec<ClasiPath> = timeline.iter().map(|(_, p)| *p).collect();
    let circuits: Vec<Circuit> = paths.iter().map(|p| p.circuit).collect();
    let basis = if m.pairs {
        CountBasis::GuardExitPairs
    } else {
        CountBasis::Relays
    };
    let counts = selection_counts(net, &circuits, basis)?;
    let vuln = vulnerable_rate(net, &paths, &m.watch)?;
    let events = timeline
        .iter()
        .map(|(epoch, p)| {
            Ok(TimelineEvent {
                epoch: *epoch,
                client: p.client,
                vulnerable: path_is_vulnerable(net, p, &m.watch)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ttfc = time_to_first_compromise(&events, m.epochs_per_day);
    let mut lens = Vec::with_capacity(circuits.len());
    for c in &circuits {
        lens.push(circuit_length_km(net, c)?);
    }
    let rows = vec![
        ("streams".into(), paths.len() as f64),
        ("gini".into(), gini(&counts)?),
        ("uniformity".into(), uniformity_degree(&counts)?),
        ("vulnerable_median".into(), vuln.median),
        ("vulnerable_overall".into(), vuln.overall),
        (
            "ttfc_median_days".into(),
            ttfc.median_days.unwrap_or(f64::INFINITY),
        ),
        ("ttfc_censored".into(), ttfc.censored),
        ("median_len_km".into(), median(&lens).expect("nonempty")),
    ];
    Ok(MetricsSummary { rows, ttfc })
}

pub fn cmd_metrics(
    cfg: &ExperimentConfig,
    algo: &Algorithm,
    model: Option<&Path>,
    force: bool,
) -> Result<MetricsSummary> {
    let model = load_model_for(cfg, std::slice::from_ref(algo), model)?;
    let out = cfg.out.join(METRICS_FILE);
    let ttfc_out = cfg.out.join(TTFC_FILE);
    guard_outputs(&[&out, &ttfc_out], force)?;
    let net = load_network(cfg)?;
    let s = metrics_on(cfg, &net, algo, model.as_ref())?;
    save_metrics(&out, &s.rows)?;
    let mut t = String::from("day,fraction_compromised\n");
    for (d, f) in &s.ttfc.cdf {
        t.push_str(&format!("{d},{f}\n"));
    }
    std::fs::write(&ttfc_out, t).map_err(|e| Error::io(&ttfc_out, e))?;
    Ok(s)
}

#[cfg(test)]
mod tests;
