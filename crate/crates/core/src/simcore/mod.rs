//! Epoch-based stream simulator with load-dependent congestion.
//!
//! Within an epoch every client first settles on a circuit, then all streams
//! are assigned at once, relay loads are computed from that assignment and
//! each stream's TTLB is evaluated against those loads.

mod records;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::netmodel::{geo_rtt_ms, Coords, Endpoint, NetworkModel, RelayId};
use crate::pathsel::{car_should_switch, CarState, Circuit, ClientPlan, Selector};
use crate::seed::{self, Rng};
use crate::{Error, Result};

pub use records::{load_records, save_records, RECORDS_HEADER};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Workload {
    pub file_kib: u32,
    pub streams_per_epoch: usize,
    pub epochs: usize,
}

impl Default for Workload {
    fn default() -> Self {
        Workload {
            file_kib: 320,
            streams_per_epoch: 2,
            epochs: 30,
        }
    }
}

/// Maps consensus bandwidth to the capacity a relay actually delivers:
/// `scale * reference * (bw / reference)^exponent * exp(sigma * z)`, with `z`
/// a per-relay standard normal fixed by the world seed. `exponent = 1`,
/// `sigma = 0`, `scale = 1` makes capacity equal consensus bandwidth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacityModel {
    pub scale: f64,
    pub reference: f64,
    pub exponent: f64,
    pub sigma: f64,
}

impl Default for CapacityModel {
    fn default() -> Self {
        CapacityModel {
            scale: 1.5,
            reference: 5000.0,
            exponent: 0.8,
            sigma: 1.0,
        }
    }
}

impl CapacityModel {
    pub fn exact() -> Self {
        CapacityModel {
            scale: 1.0,
            reference: 1.0,
            exponent: 1.0,
            sigma: 0.0,
        }
    }

    /// Capacity in KiB/s of every relay, in relay-table order.
    pub fn capacities(&self, net: &NetworkModel) -> Vec<f64> {
        net.relays
            .iter()
            .map(|r| {
                let z: f64 = if self.sigma == 0.0 {
                    0.0
                } else {
                    seed::rng(net.topology.seed, &[seed::stream::CAPACITY, r.id as u64])
                        .sample(StandardNormal)
                };
                let bw = r.bandwidth as f64;
                self.scale
                    * self.reference
                    * (bw / self.reference).powf(self.exponent)
                    * (self.sigma * z).exp()
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.scale > 0.0
            && self.reference > 0.0
            && self.exponent.is_finite()
            && self.sigma >= 0.0
            && self.sigma.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid capacity model {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    /// Queueing delay scale per relay, seconds.
    pub q0_s: f64,
    pub u_max: f64,
    /// A stream's nominal rate is its file size spread over this window.
    pub nominal_window_s: f64,
    pub probe_sigma: f64,
    /// Epochs a circuit is kept before a fresh one is built.
    pub circuit_lifetime: usize,
    pub car_probes: usize,
    pub capacity: CapacityModel,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            q0_s: 0.05,
            u_max: 0.95,
            nominal_window_s: 10.0,
            probe_sigma: 0.1,
            circuit_lifetime: 10,
            car_probes: crate::pathsel::DEFAULT_CAR_PROBES,
            capacity: CapacityModel::default(),
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q0_s >= 0.0 && self.u_max > 0.0 && self.u_max < 1.0) {
            return Err(Error::Config("need q0_s >= 0 and u_max in (0, 1)".into()));
        }
        if !(self.nominal_window_s > 0.0 && self.probe_sigma >= 0.0) {
            return Err(Error::Config(
                "need nominal_window_s > 0 and probe_sigma >= 0".into(),
            ));
        }
        if self.circuit_lifetime == 0 || self.car_probes == 0 {
            return Err(Error::Config(
                "circuit_lifetime and car_probes must be positive".into(),
            ));
        }
        self.capacity.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub epoch: usize,
    pub client: u32,
    pub circuit: Circuit,
    pub destination: u32,
    pub file_kib: u32,
    pub ttlb_s: f64,
}

/// Per-relay load of one epoch, indexed like [`NetworkModel::relays`].
#[derive(Clone, Debug, PartialEq)]
pub struct LoadState {
    pub active: Vec<u32>,
    pub utilization: Vec<f64>,
}

impl LoadState {
    pub fn idle(n: usize) -> Self {
        LoadState {
            active: vec![0; n],
            utilization: vec![0.0; n],
        }
    }
}

/// Counts streams per relay, then sets `u = min(u_max, demand / capacity)`
/// with demand the summed nominal rates of the streams crossing the relay.
pub fn fixed_point_load(
    net: &NetworkModel,
    capacity: &[f64],
    streams: &[(Circuit, u32)],
    params: &SimParams,
) -> Result<LoadState> {
    let n = net.relays.len();
    let mut active = vec![0u32; n];
    let mut demand = vec![0.0f64; n];
    for (c, file_kib) in streams {
        for id in c.relays() {
            let slot = net.relay_slot(id)?;
            active[slot] += 1;
            demand[slot] += *file_kib as f64 / params.nominal_window_s;
        }
    }
    let utilization = demand
        .iter()
        .zip(capacity)
        .map(|(d, c)| (d / c).min(params.u_max))
        .collect();
    Ok(LoadState {
        active,
        utilization,
    })
}

fn leg_s(a: Coords, b: Coords, net: &NetworkModel) -> f64 {
    (geo_rtt_ms(a, b, net.fiber_factor) + net.proc_delay_ms) / 1000.0
}

fn queue_s(u: f64, params: &SimParams) -> f64 {
    let u = u.min(params.u_max);
    params.q0_s * u / (1.0 - u)
}

/// Round-trip propagation plus processing over client, guard, middle, exit
/// and, when given, the destination.
pub fn circuit_rtt_s(
    net: &NetworkModel,
    client: Coords,
    circuit: &Circuit,
    dest: Option<Coords>,
) -> Result<f64> {
    let mut pts = vec![client];
    for id in circuit.relays() {
        pts.push(net.relay(id)?.coords());
    }
    pts.extend(dest);
    Ok(pts.windows(2).map(|w| leg_s(w[0], w[1], net)).sum())
}

fn queue_total_s(
    net: &NetworkModel,
    circuit: &Circuit,
    load: &LoadState,
    params: &SimParams,
) -> Result<f64> {
    let mut q = 0.0;
    for id in circuit.relays() {
        q += queue_s(load.utilization[net.relay_slot(id)?], params);
    }
    Ok(q)
}

/// Time to last byte of one stream, seconds.
#[allow(clippy::too_many_arguments)]
pub fn ttlb_oracle(
    net: &NetworkModel,
    capacity: &[f64],
    client: Coords,
    circuit: &Circuit,
    dest: Coords,
    file_kib: u32,
    load: &LoadState,
    params: &SimParams,
) -> Result<f64> {
    let rtt = circuit_rtt_s(net, client, circuit, Some(dest))?;
    let mut eff_bw = f64::INFINITY;
    for id in circuit.relays() {
        let slot = net.relay_slot(id)?;
        let share = capacity[slot] / load.active[slot].max(1) as f64;
        eff_bw = eff_bw.min(share);
    }
    let transfer = file_kib as f64 / eff_bw;
    Ok(rtt + transfer + queue_total_s(net, circuit, load, params)?)
}

/// One RTT probe of a circuit (client to exit and back): the propagation term
/// plus the queueing term scaled by mean-one lognormal noise.
pub fn probe_rtt(
    net: &NetworkModel,
    client: Coords,
    circuit: &Circuit,
    load: &LoadState,
    params: &SimParams,
    rng: &mut Rng,
) -> Result<f64> {
    let base = circuit_rtt_s(net, client, circuit, None)?;
    let q = queue_total_s(net, circuit, load, params)?;
    let s = params.probe_sigma;
    let noise = if s > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        (s * z - s * s / 2.0).exp()
    } else {
        1.0
    };
    Ok(base + q * noise)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimOutput {
    pub records: Vec<StreamRecord>,
    /// Classifier evaluations per circuit build (predictor variants only).
    pub tries: Vec<usize>,
    pub circuits_built: usize,
    pub car_switches: usize,
}

struct ClientState {
    plan: ClientPlan,
    circuit: Option<Circuit>,
    age: usize,
    car: Option<CarState>,
    rebuild: bool,
}

/// Runs `workload.epochs` epochs of every client streaming over circuits
/// chosen by `selector`. Sticky guards are drawn from `guard_seed` so that runs
/// with different `seed`s over one world share guard assignments.
pub fn run_epochs(
    selector: &Selector<'_>,
    workload: &Workload,
    params: &SimParams,
    seed: u64,
    guard_seed: u64,
) -> Result<SimOutput> {
    params.validate()?;
    let net = selector.net();
    if net.destinations.is_empty() {
        return Err(Error::Config(
            "simulation needs at least one destination".into(),
        ));
    }
    let capacity = params.capacity.capacities(net);
    let dest_asns: Vec<u32> = net.destinations.iter().map(|d| d.asn).collect();
    let mut clients = Vec::with_capacity(net.clients.len());
    for c in &net.clients {
        let mut grng = seed::rng(guard_seed, &[seed::stream::GUARDS, c.id as u64]);
        clients.push(ClientState {
            plan: selector.plan(c, &dest_asns, &mut grng)?,
            circuit: None,
            age: 0,
            car: None,
            rebuild: false,
        });
    }

    let mut out = SimOutput::default();
    let mut prev_load = LoadState::idle(net.relays.len());
    for epoch in 0..workload.epochs {
        let mut streams: Vec<(usize, Circuit, &Endpoint)> = Vec::new();
        for (ci, (client, st)) in net.clients.iter().zip(clients.iter_mut()).enumerate() {
            let mut rng = seed::rng(seed, &[seed::stream::EPOCHS, epoch as u64, ci as u64]);
            if st.circuit.is_none() || st.age >= params.circuit_lifetime || st.rebuild {
                let coords = client.coords();
                let mut probe = |c: &Circuit, r: &mut Rng| {
                    probe_rtt(net, coords, c, &prev_load, params, r).unwrap_or(f64::INFINITY)
                };
                let p = selector.propose(&st.plan, st.plan.guard, &mut rng, &mut probe)?;
                if selector.algorithm.needs_model() {
                    out.tries.push(p.tries);
                }
                out.circuits_built += 1;
                st.circuit = Some(p.circuit);
                st.car = p.car;
                st.age = 0;
                st.rebuild = false;
            }
            st.age += 1;
            let circuit = st.circuit.expect("circuit assigned above");
            for _ in 0..workload.streams_per_epoch {
                let d = &net.destinations[rng.gen_range(0..net.destinations.len())];
                streams.push((ci, circuit, d));
            }
        }

        let assign: Vec<(Circuit, u32)> = streams
            .iter()
            .map(|(_, c, _)| (*c, workload.file_kib))
            .collect();
        let load = fixed_point_load(net, &capacity, &assign, params)?;
        for (si, (ci, circuit, dest)) in streams.iter().enumerate() {
            let client = &net.clients[*ci];
            let ttlb = ttlb_oracle(
                net,
                &capacity,
                client.coords(),
                circuit,
                dest.coords(),
                workload.file_kib,
                &load,
                params,
            )?;
            out.records.push(StreamRecord {
                epoch,
                client: client.id,
                circuit: *circuit,
                destination: dest.id,
                file_kib: workload.file_kib,
                ttlb_s: ttlb,
            });
            let st = &mut clients[*ci];
            if let Some(car) = st.car.as_mut() {
                let mut rng = seed::rng(
                    seed,
                    &[
                        seed::stream::EPOCHS,
                        epoch as u64,
                        *ci as u64,
                        1 + si as u64,
                    ],
                );
                car.observe(probe_rtt(
                    net,
                    client.coords(),
                    circuit,
                    &load,
                    params,
                    &mut rng,
                )?);
                if !st.rebuild && car_should_switch(car) {
                    st.rebuild = true;
                    out.car_switches += 1;
                }
            }
        }
        prev_load = load;
    }
    Ok(out)
}

/// Per-relay share of stream circuits and the fraction of relays ever used.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilizationReport {
    /// `(relay, fraction of streams whose circuit contains it)` for every relay.
    pub shares: Vec<(RelayId, f64)>,
    pub frac_used: f64,
    pub frac_avoided: f64,
}

pub fn relay_utilization(
    net: &NetworkModel,
    records: &[StreamRecord],
) -> Result<UtilizationReport> {
    if records.is_empty() {
        return Err(Error::Degenerate("no stream records".into()));
    }
    let mut counts = vec![0usize; net.relays.len()];
    for r in records {
        for id in r.circuit.relays() {
            counts[net.relay_slot(id)?] += 1;
        }
    }
    let n = records.len() as f64;
    let used = counts.iter().filter(|&&k| k > 0).count() as f64 / net.relays.len() as f64;
    Ok(UtilizationReport {
        shares: net
            .relays
            .iter()
            .zip(&counts)
            .map(|(r, &k)| (r.id, k as f64 / n))
            .collect(),
        frac_used: used,
        frac_avoided: 1.0 - used,
    })
}

#[cfg(test)]
mod tests;
