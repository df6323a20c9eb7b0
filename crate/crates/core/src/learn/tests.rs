use super::*;
use crate::netmodel::{generate_network, NetworkConfig};
use crate::pathsel::{Algorithm, Selector};
use crate::simcore::{run_epochs, SimParams, Workload};

#[test]
fn country_encoding() {
    assert_eq!(encode_country("US").unwrap(), 8583);
    assert_eq!(encode_country("AA").unwrap(), 6565);
    assert!(encode_country("A1").is_err());
    assert!(encode_country("usa").is_err());
}

fn world() -> NetworkModel {
    generate_network(&NetworkConfig::new(40, 100, 10, 11)).unwrap()
}

#[test]
fn features_are_read_from_the_relay_table() {
    let net = world();
    let c = Circuit::new(net.relays[0].id, net.relays[1].id, net.relays[2].id);
    let fv = extract_features(&net, &c, None).unwrap();
    assert_eq!(fv.len(), CIRCUIT_FEATURES);
    for (k, r) in net.relays[..3].iter().enumerate() {
        assert_eq!(fv[3 * k], r.asn as f64);
        assert_eq!(
            fv[3 * k + 1],
            encode_country(r.country.as_str()).unwrap() as f64
        );
        assert_eq!(fv[3 * k + 2], r.bandwidth as f64);
    }
    let d = &net.destinations[0];
    let fv11 = extract_features(&net, &c, Some(d)).unwrap();
    assert_eq!(fv11.len(), PATH_FEATURES);
    assert_eq!(
        &fv11[9..],
        &[
            d.asn as f64,
            encode_country(d.country.as_str()).unwrap() as f64
        ]
    );
    let swapped = Circuit::new(c.guard, c.exit, c.middle);
    assert_ne!(extract_features(&net, &swapped, None).unwrap(), fv);
    assert!(extract_features(&net, &Circuit::new(999, 1, 2), None).is_err());
}

fn records(net: &NetworkModel, seed: u64) -> Vec<StreamRecord> {
    let sel = Selector::new(net, Algorithm::Vanilla, None).unwrap();
    let w = Workload {
        epochs: 10,
        ..Default::default()
    };
    run_epochs(&sel, &w, &SimParams::default(), seed, 1)
        .unwrap()
        .records
}

#[test]
fn labelling_partition_and_extremes() {
    let net = world();
    let recs = records(&net, 3);
    let tau = median_ttlb(&recs).unwrap();
    let set = label_samples(&net, &recs, tau).unwrap();
    let frac = set.positives() as f64 / set.samples.len() as f64;
    assert!((0.45..=0.55).contains(&frac), "{frac}");
    assert_eq!(label_samples(&net, &recs, 0.0).unwrap().positives(), 0);
    assert_eq!(
        label_samples(&net, &recs, f64::INFINITY)
            .unwrap()
            .positives(),
        recs.len()
    );
    let exact = LabeledSet {
        tau: 1.0,
        samples: vec![LabeledSample {
            features: vec![],
            ttlb_s: 1.0,
            label: true,
        }],
    }
    .relabel(1.0);
    assert!(!exact.samples[0].label);
}

#[test]
fn report_definitions() {
    let truth = [true, false, true, false, true];
    let perfect = EvalReport::from_pairs(truth.iter().map(|&t| (t, t))).unwrap();
    assert_eq!(
        (perfect.accuracy, perfect.fpr, perfect.fnr),
        (1.0, 0.0, 0.0)
    );
    let yes = EvalReport::from_pairs(truth.iter().map(|&t| (true, t))).unwrap();
    assert_eq!((yes.fpr, yes.fnr), (1.0, 0.0));
    assert_eq!(yes.total(), 5);
    assert!((yes.majority_baseline() - 0.6).abs() < 1e-12);
}

#[test]
fn sweep_rows_and_monotone_positive_share() {
    let net = world();
    let train = label_samples(&net, &records(&net, 4), 0.0).unwrap();
    let test = label_samples(&net, &records(&net, 5), 0.0).unwrap();
    let ttlb: Vec<f64> = train.samples.iter().map(|s| s.ttlb_s).collect();
    let grid = quantile_grid(&ttlb, 5).unwrap();
    let params = ForestParams {
        n_trees: 10,
        ..Default::default()
    };
    let sweep = sweep_tau(&train, &test, &grid, &params, 1).unwrap();
    assert_eq!(sweep.len(), 5);
    let mut last = 0;
    for tau in &grid {
        let pos = test.relabel(*tau).positives();
        assert!(pos >= last);
        last = pos;
    }
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sweep.csv");
    save_sweep(&p, &sweep).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().next(), Some(SWEEP_HEADER));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn samples_csv_schema() {
    let net = world();
    let set = label_samples(&net, &records(&net, 6)[..4], 1.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("samples.csv");
    save_samples(&p, &set).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("g_asn,g_cc,g_bw,m_asn,m_cc,m_bw,e_asn,e_cc,e_bw,ttlb_s,label")
    );
    assert_eq!(text.lines().count(), 5);
}
