use std::process::Command;

use torsellab::netmodel::generate_network;
use torsellab::pathsel::{Algorithm, Selector};
use torsellab::simcore::{run_epochs, SimParams, Workload};
use torsellab::stats::median;
use torsellab::NetworkConfig;

/// Average ranks, ties sharing the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn vanilla_selection_tracks_consensus_weight() {
    let net = generate_network(&NetworkConfig::new(100, 250, 20, 42)).unwrap();
    let sel = Selector::new(&net, Algorithm::Vanilla, None).unwrap();
    let out = run_epochs(&sel, &Workload::default(), &SimParams::default(), 42, 42).unwrap();
    let mut freq = vec![0.0; net.relays.len()];
    for r in &out.records {
        for id in r.circuit.relays() {
            freq[net.relay_slot(id).unwrap()] += 1.0;
        }
    }
    let bw: Vec<f64> = net.relays.iter().map(|r| r.bandwidth as f64).collect();
    let rho = pearson(&ranks(&freq), &ranks(&bw));
    assert!(rho > 0.8, "spearman rho {rho}");
}

#[test]
fn vanilla_median_is_stable_across_seeds() {
    let net = generate_network(&NetworkConfig::new(100, 500, 20, 42)).unwrap();
    let sel = Selector::new(&net, Algorithm::Vanilla, None).unwrap();
    let medians: Vec<f64> = [42, 43, 44]
        .iter()
        .map(|&s| {
            let out = run_epochs(&sel, &Workload::default(), &SimParams::default(), s, 42).unwrap();
            median(&out.records.iter().map(|r| r.ttlb_s).collect::<Vec<_>>()).unwrap()
        })
        .collect();
    for m in &medians[1..] {
        assert!((m / medians[0] - 1.0).abs() <= 0.2, "{medians:?}");
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_torsellab");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(
        &cfg,
        "[network]\nrelays = 20\nclients = 20\ndestinations = 4\n[workload]\nepochs = 4\n\
         [learn]\nsweep_points = 3\n[learn.forest]\nn_trees = 5\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let run = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .args(["--config", cfg, "--out", out])
            .output()
            .unwrap()
    };
    assert_eq!(run(&["generate"]).status.code(), Some(0));
    assert_eq!(run(&["generate"]).status.code(), Some(2));
    assert_eq!(run(&["generate", "--force"]).status.code(), Some(0));
    let sim = run(&["simulate"]);
    assert_eq!(sim.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&sim.stdout).contains("median"));
    let pred = run(&["simulate", "--algo", "predictor", "--force"]);
    assert_eq!(pred.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&pred.stderr).contains("model required"));
    assert_eq!(run(&["train", "--tau", "0"]).status.code(), Some(3));
    assert_eq!(run(&["train"]).status.code(), Some(0));
    let ratio = Command::new(bin)
        .args(["generate", "--out", out, "--force"])
        .env("TORSELLAB_NETWORK_CLIENT_RATIO", "0")
        .output()
        .unwrap();
    assert_eq!(ratio.status.code(), Some(2));
}
