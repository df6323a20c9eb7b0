use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::netmodel::{AsTopology, CountryCode, EndpointKind, Relay};
use crate::pathsel::{Algorithm, Selector};

fn flat_world(n_relays: u32, n_clients: u32) -> NetworkModel {
    let relays = (0..n_relays)
        .map(|id| Relay {
            id,
            nickname: format!("r{id}"),
            bandwidth: 1000,
            asn: 20_000,
            country: CountryCode::new("DE").unwrap(),
            lat: 10.0,
            lon: 10.0,
            is_guard: true,
            is_exit: true,
        })
        .collect();
    let ep = |id, kind| Endpoint {
        id,
        kind,
        asn: 30_000,
        country: CountryCode::new("DE").unwrap(),
        lat: 10.0,
        lon: 10.0,
    };
    let clients = (0..n_clients)
        .map(|i| ep(100 + i, EndpointKind::Client))
        .collect();
    let dests = vec![ep(900, EndpointKind::Destination)];
    let mut edges = BTreeMap::new();
    edges.insert(20_000, vec![3356]);
    edges.insert(30_000, vec![3356]);
    let topo = AsTopology {
        tier1: vec![3356],
        edges,
        seed: 0,
    };
    NetworkModel::new(relays, clients, dests, topo).unwrap()
}

fn exact() -> SimParams {
    SimParams {
        capacity: CapacityModel::exact(),
        ..Default::default()
    }
}

fn circuit() -> Circuit {
    Circuit::new(0, 1, 2)
}

fn here() -> Coords {
    Coords::new(10.0, 10.0)
}

#[test]
fn zero_distance_idle_empty_transfer_is_processing_only() {
    let net = flat_world(3, 1);
    let cap = CapacityModel::exact().capacities(&net);
    let load = LoadState::idle(3);
    let t = ttlb_oracle(&net, &cap, here(), &circuit(), here(), 0, &load, &exact()).unwrap();
    assert!((t - 4.0 * net.proc_delay_ms / 1000.0).abs() < 1e-12);
}

#[test]
fn transfer_term_is_linear_in_file_size() {
    let net = flat_world(3, 1);
    let cap = CapacityModel::exact().capacities(&net);
    let load = LoadState::idle(3);
    let p = exact();
    let base = ttlb_oracle(&net, &cap, here(), &circuit(), here(), 0, &load, &p).unwrap();
    let one = ttlb_oracle(&net, &cap, here(), &circuit(), here(), 320, &load, &p).unwrap() - base;
    let two = ttlb_oracle(&net, &cap, here(), &circuit(), here(), 640, &load, &p).unwrap() - base;
    assert!((one - 0.32).abs() < 1e-12);
    assert!((two - 2.0 * one).abs() < 1e-12);
}

#[test]
fn half_utilization_adds_one_queue_unit() {
    let net = flat_world(3, 1);
    let cap = CapacityModel::exact().capacities(&net);
    let idle = LoadState::idle(3);
    let mut busy = LoadState::idle(3);
    busy.utilization[1] = 0.5;
    let p = exact();
    let a = ttlb_oracle(&net, &cap, here(), &circuit(), here(), 320, &idle, &p).unwrap();
    let b = ttlb_oracle(&net, &cap, here(), &circuit(), here(), 320, &busy, &p).unwrap();
    assert!((b - a - 0.050).abs() < 1e-12);
}

#[test]
fn noiseless_probe_is_closed_form() {
    let net = flat_world(3, 1);
    let mut load = LoadState::idle(3);
    let p = SimParams {
        probe_sigma: 0.0,
        ..exact()
    };
    let mut rng = seed::rng(1, &[]);
    let idle = probe_rtt(&net, here(), &circuit(), &load, &p, &mut rng).unwrap();
    assert!((idle - 3.0 * net.proc_delay_ms / 1000.0).abs() < 1e-12);
    load.utilization[2] = 0.9;
    let busy = probe_rtt(&net, here(), &circuit(), &load, &p, &mut rng).unwrap();
    assert!((busy - idle - 9.0 * p.q0_s).abs() < 1e-9);
}

#[test]
fn noisy_probe_mean_matches_noiseless() {
    let net = generate_world();
    let mut load = LoadState::idle(net.relays.len());
    load.utilization.iter_mut().for_each(|u| *u = 0.6);
    let c = {
        let g = net.relays.iter().find(|r| r.is_guard).unwrap().id;
        let e = net
            .relays
            .iter()
            .find(|r| r.is_exit && r.id != g)
            .unwrap()
            .id;
        let m = net
            .relays
            .iter()
            .find(|r| r.id != g && r.id != e)
            .unwrap()
            .id;
        Circuit::new(g, m, e)
    };
    let client = net.clients[0].coords();
    let quiet = SimParams {
        probe_sigma: 0.0,
        ..Default::default()
    };
    let noisy = SimParams {
        probe_sigma: 0.1,
        ..Default::default()
    };
    let mut rng = seed::rng(2, &[]);
    let exact = probe_rtt(&net, client, &c, &load, &quiet, &mut rng).unwrap();
    let mean = (0..1000)
        .map(|_| probe_rtt(&net, client, &c, &load, &noisy, &mut rng).unwrap())
        .sum::<f64>()
        / 1000.0;
    assert!((mean - exact).abs() <= 0.05 * exact, "{mean} vs {exact}");
}

fn generate_world() -> NetworkModel {
    crate::netmodel::generate_network(&crate::NetworkConfig::new(40, 60, 8, 3)).unwrap()
}

#[test]
fn load_accounting() {
    let net = flat_world(5, 1);
    let cap = CapacityModel::exact().capacities(&net);
    let p = exact();
    let none = fixed_point_load(&net, &cap, &[], &p).unwrap();
    assert!(none.utilization.iter().all(|&u| u == 0.0));
    let one = fixed_point_load(&net, &cap, &[(circuit(), 320)], &p).unwrap();
    assert_eq!(one.utilization.iter().filter(|&&u| u > 0.0).count(), 3);
    let heavy: Vec<(Circuit, u32)> = vec![(circuit(), 320); 10 * 1000 * 10 / 320 + 1];
    let over = fixed_point_load(&net, &cap, &heavy, &p).unwrap();
    assert!(over.utilization.iter().all(|&u| u <= 0.95));
    assert_eq!(over.utilization[0], 0.95);
}

#[test]
fn one_client_one_epoch_emits_its_streams() {
    let net = flat_world(3, 1);
    let sel = Selector::new(&net, Algorithm::Vanilla, None).unwrap();
    let w = Workload {
        epochs: 1,
        streams_per_epoch: 4,
        ..Default::default()
    };
    let out = run_epochs(&sel, &w, &exact(), 1, 1).unwrap();
    assert_eq!(out.records.len(), 4);
    assert!(out.records.iter().all(|r| r.ttlb_s > 0.0));
}

#[test]
fn runs_are_deterministic_and_conserve_streams() {
    let net = generate_world();
    let w = Workload {
        epochs: 6,
        ..Default::default()
    };
    for algo in [
        Algorithm::Vanilla,
        Algorithm::Car,
        Algorithm::Sb { s: 15.0 },
    ] {
        let sel = Selector::new(&net, algo, None).unwrap();
        let a = run_epochs(&sel, &w, &SimParams::default(), 5, 5).unwrap();
        let b = run_epochs(&sel, &w, &SimParams::default(), 5, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), net.clients.len() * 2 * 6);
    }
}

#[test]
fn utilization_accounting() {
    let net = flat_world(6, 1);
    let rec = |c| StreamRecord {
        epoch: 0,
        client: 100,
        circuit: c,
        destination: 900,
        file_kib: 1,
        ttlb_s: 1.0,
    };
    let same = vec![rec(circuit()); 4];
    let u = relay_utilization(&net, &same).unwrap();
    assert!((u.frac_used - 0.5).abs() < 1e-12);
    let mixed = vec![
        rec(circuit()),
        rec(Circuit::new(3, 4, 5)),
        rec(Circuit::new(0, 4, 2)),
    ];
    let u = relay_utilization(&net, &mixed).unwrap();
    let total: f64 = u.shares.iter().map(|(_, s)| s).sum();
    assert!((total - 3.0).abs() < 1e-12);
    assert!(relay_utilization(&net, &[]).is_err());
}

#[test]
fn records_round_trip() {
    let net = generate_world();
    let sel = Selector::new(&net, Algorithm::Vanilla, None).unwrap();
    let w = Workload {
        epochs: 2,
        ..Default::default()
    };
    let out = run_epochs(&sel, &w, &SimParams::default(), 9, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("records.csv");
    save_records(&p, &out.records).unwrap();
    assert_eq!(load_records(&p).unwrap(), out.records);
}

proptest! {
    #[test]
    fn ttlb_monotone_in_file_and_utilization(
        u in proptest::collection::vec(0.0f64..0.94, 3),
        bump in 0.0f64..0.5,
        which in 0usize..3,
        kib in 0u32..5000,
        extra in 1u32..5000,
    ) {
        let net = flat_world(3, 1);
        let cap = CapacityModel::exact().capacities(&net);
        let p = exact();
        let mut load = LoadState::idle(3);
        load.active = vec![2, 2, 2];
        load.utilization = u.clone();
        let t0 = ttlb_oracle(&net, &cap, here(), &circuit(), here(), kib, &load, &p).unwrap();
        let t1 = ttlb_oracle(&net, &cap, here(), &circuit(), here(), kib + extra, &load, &p).unwrap();
        prop_assert!(t1 > t0);
        load.utilization[which] = (u[which] + bump).min(0.95);
        let t2 = ttlb_oracle(&net, &cap, here(), &circuit(), here(), kib, &load, &p).unwrap();
        prop_assert!(t2 >= t0);
    }
}
