//! Anonymity measurement: the CLASI sender-location game, selection
//! inequality, AS-level vulnerability and geographic circuit length.
//!
//! In the CLASI game an adversary that knows the path-selection algorithm
//! trains on paths drawn from a [`PathSimulator`], then sees fresh paths with
//! the sender removed and guesses the sender's AS. Leakage `epsilon_s` is its
//! accuracy above the `1 / |S_L|` guessing baseline.

mod geodesic;
mod metrics;

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::learn::{extract_features, train_forest, ForestParams, Task};
use crate::netmodel::{NetworkModel, RelayId};
use crate::pathsel::{Circuit, ClientPlan, Selector};
use crate::seed::{self, stream, Rng};
use crate::simcore::{probe_rtt, LoadState, SimParams};
use crate::{Error, Result};

pub use geodesic::{circuit_length_km, vincenty, vincenty_km, Distance, WGS84_A, WGS84_F};
pub use metrics::{
    day_of, gini, path_is_vulnerable, save_metrics, selection_counts, time_to_first_compromise,
    uniformity_degree, vulnerable_rate, CountBasis, TimelineEvent, TtfcReport, VulnerabilityReport,
    METRICS_HEADER,
};

/// One observed stream: sender, circuit and destination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClasiPath {
    pub client: u32,
    pub client_asn: u32,
    pub circuit: Circuit,
    pub destination: u32,
    pub dest_asn: u32,
}

/// How many destinations each client visits. Clients fix their set once and
/// pick uniformly from it for every stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserModel {
    Destinations(usize),
    #[default]
    All,
}

impl UserModel {
    fn count(self, available: usize) -> Result<usize> {
        match self {
            UserModel::All => Ok(available),
            UserModel::Destinations(k) if k >= 1 && k <= available => Ok(k),
            UserModel::Destinations(k) => Err(Error::Config(format!(
                "user model wants {k} destinations but {available} exist"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardPolicy {
    /// Every path draws its own guard from the client's guard set.
    #[default]
    PerPath,
    /// Every path of a client uses the client's sticky guard.
    Sticky,
}

/// Generates paths for a fixed sender space, relay space and destination space
/// under one selection algorithm.
pub struct PathSimulator<'s, 'a> {
    selector: &'s Selector<'a>,
    pub user_model: UserModel,
    pub guard_policy: GuardPolicy,
    pub seed: u64,
    /// Only consulted for CAR probes, which see an idle network.
    pub params: SimParams,
    plans: Vec<ClientPlan>,
    dest_sets: Vec<Vec<usize>>,
    idle: LoadState,
}

impl<'s, 'a> PathSimulator<'s, 'a> {
    pub fn new(
        selector: &'s Selector<'a>,
        user_model: UserModel,
        guard_policy: GuardPolicy,
        seed: u64,
    ) -> Result<Self> {
        let net = selector.net();
        if net.clients.is_empty() || net.destinations.is_empty() {
            return Err(Error::Config(
                "path simulation needs clients and destinations".into(),
            ));
        }
        let k = user_model.count(net.destinations.len())?;
        let mut plans = Vec::with_capacity(net.clients.len());
        let mut dest_sets = Vec::with_capacity(net.clients.len());
        for c in &net.clients {
            let mut urng = seed::rng(seed, &[stream::USER_MODEL, c.id as u64]);
            let mut set = index::sample(&mut urng, net.destinations.len(), k).into_vec();
            set.sort_unstable();
            let asns: Vec<u32> = set.iter().map(|&i| net.destinations[i].asn).collect();
            let mut grng = seed::rng(seed, &[stream::GUARDS, c.id as u64]);
            plans.push(selector.plan(c, &asns, &mut grng)?);
            dest_sets.push(set);
        }
        Ok(PathSimulator {
            selector,
            user_model,
            guard_policy,
            seed,
            params: SimParams::default(),
            plans,
            dest_sets,
            idle: LoadState::idle(net.relays.len()),
        })
    }

    pub fn net(&self) -> &'a NetworkModel {
        self.selector.net()
    }

    /// Distinct client ASes, the labels the adversary chooses from.
    pub fn sender_ases(&self) -> Vec<u32> {
        let s: BTreeSet<u32> = self.net().clients.iter().map(|c| c.asn).collect();
        s.into_iter().collect()
    }

    /// Indices into `net.destinations` the client picks from.
    pub fn destination_set(&self, client_index: usize) -> &[usize] {
        &self.dest_sets[client_index]
    }

    fn circuit(&self, ci: usize, rng: &mut Rng) -> Result<Circuit> {
        let net = self.net();
        let plan = &self.plans[ci];
        let guard: RelayId = match self.guard_policy {
            GuardPolicy::Sticky => plan.guard,
            GuardPolicy::PerPath => self.selector.draw_guard(plan, rng)?,
        };
        let coords = net.clients[ci].coords();
        let mut probe = |c: &Circuit, r: &mut Rng| {
            probe_rtt(net, coords, c, &self.idle, &self.params, r).unwrap_or(f64::INFINITY)
        };
        Ok(self.selector.propose(plan, guard, rng, &mut probe)?.circuit)
    }

    fn path(&self, ci: usize, circuit: Circuit, rng: &mut Rng) -> ClasiPath {
        let net = self.net();
        let set = &self.dest_sets[ci];
        let d = &net.destinations[set[rng.gen_range(0..set.len())]];
        let c = &net.clients[ci];
        ClasiPath {
            client: c.id,
            client_asn: c.asn,
            circuit,
            destination: d.id,
            dest_asn: d.asn,
        }
    }

    /// `n` paths, path `i` drawn from its own stream derived from the
    /// simulator seed, `labels` and `i`.
    pub fn paths_with(&self, labels: &[u64], n: usize) -> Result<Vec<ClasiPath>> {
        if n == 0 {
            return Err(Error::Config("need at least one path".into()));
        }
        let clients = self.net().clients.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut l = labels.to_vec();
                l.push(i as u64);
                let mut rng = seed::rng(self.seed, &l);
                let ci = rng.gen_range(0..clients);
                let circuit = self.circuit(ci, &mut rng)?;
                Ok(self.path(ci, circuit, &mut rng))
            })
            .collect()
    }

    pub fn generate_paths(&self, n: usize) -> Result<Vec<ClasiPath>> {
        self.paths_with(&[stream::PATHS], n)
    }

    /// Every client builds one circuit per epoch and sends `streams_per_epoch`
    /// streams over it. Output is sorted by epoch, then client.
    pub fn timeline(
        &self,
        epochs: usize,
        streams_per_epoch: usize,
    ) -> Result<Vec<(usize, ClasiPath)>> {
        let clients = self.net().clients.len();
        let per_epoch: Vec<Vec<(usize, ClasiPath)>> = (0..epochs)
            .into_par_iter()
            .map(|epoch| {
                let mut out = Vec::with_capacity(clients * streams_per_epoch);
                for ci in 0..clients {
                    let mut rng =
                        seed::rng(self.seed, &[stream::TIMELINE, epoch as u64, ci as u64]);
                    let circuit = self.circuit(ci, &mut rng)?;
                    for _ in 0..streams_per_epoch {
                        out.push((epoch, self.path(ci, circuit, &mut rng)));
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(per_epoch.into_iter().flatten().collect())
    }
}

/// Path features seen by the adversary: the circuit and the destination.
pub fn path_features(net: &NetworkModel, p: &ClasiPath) -> Result<Vec<f64>> {
    extract_features(net, &p.circuit, Some(net.destination(p.destination)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClasiParams {
    pub n_train: usize,
    pub n_test: usize,
    pub repeats: usize,
    /// Permute the training labels, destroying any real signal.
    pub shuffle_labels: bool,
    pub forest: ForestParams,
}

impl Default for ClasiParams {
    fn default() -> Self {
        ClasiParams {
            n_train: 50_000,
            n_test: 3_000,
            repeats: 10,
            shuffle_labels: false,
            forest: ForestParams::default(),
        }
    }
}

impl ClasiParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_train < 100 || self.n_test == 0 || self.repeats == 0 {
            return Err(Error::Config(
                "CLASI needs n_train >= 100, n_test >= 1 and repeats >= 1".into(),
            ));
        }
        self.forest.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub epsilon_s: f64,
    pub baseline: f64,
    pub accuracy: f64,
    /// Student-t 95% interval for `epsilon_s`; absent with a single repeat.
    pub ci95: Option<(f64, f64)>,
    pub repeats: usize,
    /// Adversary accuracy of each repeat.
    pub per_repeat: Vec<f64>,
}

fn features_of(net: &NetworkModel, paths: &[ClasiPath]) -> Result<Vec<Vec<f64>>> {
    paths.iter().map(|p| path_features(net, p)).collect()
}

/// Plays `params.repeats` independent rounds of the sender-location game.
pub fn clasi_game(
    ps: &PathSimulator<'_, '_>,
    params: &ClasiParams,
    seed: u64,
) -> Result<LeakageReport> {
    params.validate()?;
    let senders = ps.sender_ases();
    if senders.len() < 2 {
        return Err(Error::Degenerate(format!(
            "sender space spans {} AS; the game needs at least two",
            senders.len()
        )));
    }
    let net = ps.net();
    let baseline = 1.0 / senders.len() as f64;
    let mut per_repeat = Vec::with_capacity(params.repeats);
    for r in 0..params.repeats as u64 {
        let train = ps.paths_with(&[stream::CLASI_TRAIN, seed, r], params.n_train)?;
        let test = ps.paths_with(&[stream::CLASI_TEST, seed, r], params.n_test)?;
        let mut y: Vec<u64> = train.iter().map(|p| p.client_asn as u64).collect();
        if params.shuffle_labels {
            y.shuffle(&mut seed::rng(seed, &[stream::SHUFFLE, r]));
        }
        let forest_seed = seed::derive(seed, &[stream::FOREST, r]);
        let model = train_forest(
            &features_of(net, &train)?,
            &y,
            Task::Multiclass,
            &params.forest,
            forest_seed,
        )?;
        let x = features_of(net, &test)?;
        let hits = x
            .par_iter()
            .zip(&test)
            .map(|(fv, p)| Ok((model.predict_label(fv)? == p.client_asn as u64) as usize))
            .collect::<Result<Vec<usize>>>()?
            .into_iter()
            .sum::<usize>();
        per_repeat.push(hits as f64 / test.len() as f64);
    }
    let accuracy = crate::stats::mean(&per_repeat).expect("at least one repeat");
    let epsilon_s = accuracy - baseline;
    let ci95 = if per_repeat.len() > 1 {
        let n = per_repeat.len() as f64;
        let t = StudentsT::new(0.0, 1.0, n - 1.0)
            .map_err(|e| Error::Config(e.to_string()))?
            .inverse_cdf(0.975);
        let half = t * crate::stats::sample_std(&per_repeat).expect("two repeats") / n.sqrt();
        Some((epsilon_s - half, epsilon_s + half))
    } else {
        None
    };
    Ok(LeakageReport {
        epsilon_s,
        baseline,
        accuracy,
        ci95,
        repeats: params.repeats,
        per_repeat,
    })
}

pub const PATHS_HEADER: &str = "client,client_asn,guard,middle,exit,dest,dest_asn";

pub fn save_paths(path: &Path, paths: &[ClasiPath]) -> Result<()> {
    let mut out = format!("{PATHS_HEADER}\n");
    for p in paths {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.client,
            p.client_asn,
            p.circuit.guard,
            p.circuit.middle,
            p.circuit.exit,
            p.destination,
            p.dest_asn
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
