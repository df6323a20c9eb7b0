//! Circuit-selection algorithms behind one interface.
//!
//! A [`Selector`] binds an [`Algorithm`] to a consensus view of the network.
//! Per-client state lives in a [`ClientPlan`] (sticky guard, filtered exit set)
//! that the caller owns, so selectors can be shared read-only.

mod car;
mod denasa;
mod sb;
mod weights;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::netmodel::{Endpoint, NetworkModel, RelayId};
use crate::seed::Rng;
use crate::{Error, Result};

pub use car::{
    car_congestion, car_pick, car_should_switch, CarState, CAR_CANDIDATES, CAR_HISTORY,
    CAR_SWITCH_THRESHOLD_S,
};
pub use denasa::{denasa_e_select, denasa_g_select, e_select_survivors, suspect_fraction};
pub use sb::{rank_by_bandwidth, sb_index, sb_select, sb_select_excluding};
pub use weights::{Position, WeightTable};

pub const DEFAULT_MAX_TRIES: usize = 50;
pub const DEFAULT_CAR_PROBES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Circuit {
    pub guard: RelayId,
    pub middle: RelayId,
    pub exit: RelayId,
}

impl Circuit {
    pub fn new(guard: RelayId, middle: RelayId, exit: RelayId) -> Self {
        Circuit {
            guard,
            middle,
            exit,
        }
    }

    pub fn relays(&self) -> [RelayId; 3] {
        [self.guard, self.middle, self.exit]
    }

    pub fn validate(&self, net: &NetworkModel) -> Result<()> {
        if self.guard == self.middle || self.guard == self.exit || self.middle == self.exit {
            return Err(Error::Selection(format!("circuit {self} repeats a relay")));
        }
        if !net.relay(self.guard)?.is_guard {
            return Err(Error::Selection(format!(
                "relay {} is not a guard",
                self.guard
            )));
        }
        net.relay(self.middle)?;
        if !net.relay(self.exit)?.is_exit {
            return Err(Error::Selection(format!(
                "relay {} is not an exit",
                self.exit
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.guard, self.middle, self.exit)
    }
}

/// The circuit-performance predicate `M_tau`: a score in [0, 1], where a score
/// of at least 0.5 predicts a circuit faster than the threshold.
pub trait CircuitClassifier {
    fn score(&self, circuit: &Circuit) -> Result<f64>;

    fn accepts(&self, circuit: &Circuit) -> Result<bool> {
        Ok(self.score(circuit)? >= 0.5)
    }
}

impl<T: CircuitClassifier + ?Sized> CircuitClassifier for &T {
    fn score(&self, circuit: &Circuit) -> Result<f64> {
        (**self).score(circuit)
    }
}

impl<T: CircuitClassifier + ?Sized> CircuitClassifier for Arc<T> {
    fn score(&self, circuit: &Circuit) -> Result<f64> {
        (**self).score(circuit)
    }
}

/// Classifier with a fixed answer, handy for pass-through and bound checks.
pub struct ConstantClassifier(pub f64);

impl CircuitClassifier for ConstantClassifier {
    fn score(&self, _: &Circuit) -> Result<f64> {
        Ok(self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case", deny_unknown_fields)]
pub enum Algorithm {
    Vanilla,
    Predictor {
        #[serde(default = "default_max_tries")]
        max_tries: usize,
    },
    Car,
    Sb {
        s: f64,
    },
    Denasa {
        #[serde(default = "one")]
        tau_d: f64,
        #[serde(default)]
        avoid_count: usize,
    },
    PredictorCar {
        #[serde(default = "default_max_tries")]
        max_tries: usize,
    },
}

fn default_max_tries() -> usize {
    DEFAULT_MAX_TRIES
}

fn one() -> f64 {
    1.0
}

impl Algorithm {
    pub fn predictor() -> Self {
        Algorithm::Predictor {
            max_tries: DEFAULT_MAX_TRIES,
        }
    }

    pub fn predictor_car() -> Self {
        Algorithm::PredictorCar {
            max_tries: DEFAULT_MAX_TRIES,
        }
    }

    pub fn e_select(tau_d: f64) -> Self {
        Algorithm::Denasa {
            tau_d,
            avoid_count: 0,
        }
    }

    pub fn g_select(avoid_count: usize) -> Self {
        Algorithm::Denasa {
            tau_d: 1.0,
            avoid_count,
        }
    }

    /// Name used in config files.
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Vanilla => "vanilla",
            Algorithm::Predictor { .. } => "predictor",
            Algorithm::Car => "car",
            Algorithm::Sb { .. } => "sb",
            Algorithm::Denasa { .. } => "denasa",
            Algorithm::PredictorCar { .. } => "predictor_car",
        }
    }

    /// Short label for reports, carrying the distinguishing parameter.
    pub fn label(&self) -> String {
        match self {
            Algorithm::Sb { s } => format!("sb-{s}"),
            Algorithm::Denasa { tau_d, avoid_count } => match (*tau_d < 1.0, *avoid_count > 0) {
                (true, false) => format!("e-select-{tau_d}"),
                (false, true) => format!("g-select-{avoid_count}"),
                _ => format!("denasa-{tau_d}-{avoid_count}"),
            },
            other => other.name().to_owned(),
        }
    }

    pub fn needs_model(&self) -> bool {
        matches!(
            self,
            Algorithm::Predictor { .. } | Algorithm::PredictorCar { .. }
        )
    }

    pub fn uses_car(&self) -> bool {
        matches!(self, Algorithm::Car | Algorithm::PredictorCar { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Algorithm::Predictor { max_tries } | Algorithm::PredictorCar { max_tries }
                if *max_tries == 0 =>
            {
                Err(Error::Config("max_tries must be positive".into()))
            }
            Algorithm::Sb { s } if *s == 0.0 || !s.is_finite() => Err(Error::Config(format!(
                "SB parameter s must be finite and nonzero, got {s}"
            ))),
            Algorithm::Denasa { tau_d, avoid_count } => {
                if !(*tau_d > 0.0 && *tau_d <= 1.0) {
                    return Err(Error::Config(format!(
                        "tau_d must lie in (0, 1], got {tau_d}"
                    )));
                }
                if *avoid_count > crate::netmodel::TIER1.len() {
                    return Err(Error::Config(format!(
                        "avoid_count must lie in [0, 8], got {avoid_count}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    /// Parses the names and labels produced by [`Algorithm::label`]:
    /// `vanilla`, `predictor`, `car`, `predictor_car`, `sb-15`,
    /// `e-select-0.1`, `g-select-8`, `denasa-0.2-4`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown algorithm {s:?}"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let a = match s {
            "vanilla" => Algorithm::Vanilla,
            "predictor" => Algorithm::predictor(),
            "car" => Algorithm::Car,
            "predictor_car" | "predictor-car" | "predictor+car" => Algorithm::predictor_car(),
            _ => {
                if let Some(t) = s.strip_prefix("sb-") {
                    Algorithm::Sb { s: num(t)? }
                } else if let Some(t) = s.strip_prefix("e-select-") {
                    Algorithm::e_select(num(t)?)
                } else if let Some(t) = s.strip_prefix("g-select-") {
                    Algorithm::g_select(t.parse().map_err(|_| bad())?)
                } else if let Some(t) = s.strip_prefix("denasa-") {
                    let (tau, n) = t.split_once('-').ok_or_else(bad)?;
                    Algorithm::Denasa {
                        tau_d: num(tau)?,
                        avoid_count: n.parse().map_err(|_| bad())?,
                    }
                } else {
                    return Err(bad());
                }
            }
        };
        a.validate()?;
        Ok(a)
    }
}

/// Shared, immutable selection inputs for one network.
#[derive(Clone, Debug)]
pub struct ConsensusView<'a> {
    pub net: &'a NetworkModel,
    pub guards: Arc<WeightTable>,
    pub middles: WeightTable,
    pub exits: Arc<WeightTable>,
}

impl<'a> ConsensusView<'a> {
    pub fn new(net: &'a NetworkModel) -> Result<Self> {
        Ok(ConsensusView {
            net,
            guards: Arc::new(WeightTable::for_position(net, Position::Guard)?),
            middles: WeightTable::for_position(net, Position::Middle)?,
            exits: Arc::new(WeightTable::for_position(net, Position::Exit)?),
        })
    }
}

pub fn guard_assignment(guards: &WeightTable, rng: &mut Rng) -> RelayId {
    guards.draw(rng)
}

/// Bandwidth-weighted exit, then middle, behind a fixed guard, resampling on
/// collisions with already chosen hops.
pub fn vanilla_select(
    guard: RelayId,
    middles: &WeightTable,
    exits: &WeightTable,
    rng: &mut Rng,
) -> Result<Circuit> {
    let exit = exits.draw_excluding(rng, &[guard])?;
    let middle = middles.draw_excluding(rng, &[guard, exit])?;
    Ok(Circuit::new(guard, middle, exit))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictorOutcome {
    pub circuit: Circuit,
    pub tries: usize,
    pub score: f64,
    /// Set when no proposal was accepted within the try budget.
    pub fail_open: bool,
}

/// Proposes vanilla circuits until the classifier accepts one; after
/// `max_tries` rejections returns the best-scoring proposal.
pub fn predictor_select(
    guard: RelayId,
    middles: &WeightTable,
    exits: &WeightTable,
    model: &dyn CircuitClassifier,
    max_tries: usize,
    rng: &mut Rng,
) -> Result<PredictorOutcome> {
    let mut best: Option<(Circuit, f64)> = None;
    for t in 1..=max_tries.max(1) {
        let c = vanilla_select(guard, middles, exits, rng)?;
        let score = model.score(&c)?;
        if score >= 0.5 {
            return Ok(PredictorOutcome {
                circuit: c,
                tries: t,
                score,
                fail_open: false,
            });
        }
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((c, score));
        }
    }
    let (circuit, score) = best.expect("at least one proposal was made");
    Ok(PredictorOutcome {
        circuit,
        tries: max_tries.max(1),
        score,
        fail_open: true,
    })
}

/// Probe source used by CAR: returns one RTT sample (seconds) for a circuit.
pub type Prober<'p> = dyn FnMut(&Circuit, &mut Rng) -> f64 + 'p;

#[derive(Clone, Debug, PartialEq)]
pub struct CarOutcome {
    pub circuit: Circuit,
    pub candidate: usize,
    /// State of the chosen circuit seeded with its probe floor.
    pub state: CarState,
}

fn car_choose(
    candidates: Vec<Circuit>,
    n_probes: usize,
    rng: &mut Rng,
    probe: &mut Prober<'_>,
) -> Result<CarOutcome> {
    let probes: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| (0..n_probes.max(1)).map(|_| probe(c, rng)).collect())
        .collect();
    let i = car_pick(&probes)?;
    let mut state = CarState::default();
    for &rtt in &probes[i] {
        state.observe(rtt);
    }
    Ok(CarOutcome {
        circuit: candidates[i],
        candidate: i,
        state: state.restarted(),
    })
}

/// Builds three vanilla candidates, probes each and keeps the least congested.
pub fn car_select(
    guard: RelayId,
    middles: &WeightTable,
    exits: &WeightTable,
    n_probes: usize,
    rng: &mut Rng,
    probe: &mut Prober<'_>,
) -> Result<CarOutcome> {
    let candidates = (0..CAR_CANDIDATES)
        .map(|_| vanilla_select(guard, middles, exits, rng))
        .collect::<Result<Vec<_>>>()?;
    car_choose(candidates, n_probes, rng, probe)
}

/// CAR over three candidates each produced by [`predictor_select`].
#[allow(clippy::too_many_arguments)]
pub fn predictor_car_select(
    guard: RelayId,
    middles: &WeightTable,
    exits: &WeightTable,
    model: &dyn CircuitClassifier,
    max_tries: usize,
    n_probes: usize,
    rng: &mut Rng,
    probe: &mut Prober<'_>,
) -> Result<(CarOutcome, usize)> {
    let mut tries = 0;
    let mut candidates = Vec::with_capacity(CAR_CANDIDATES);
    for _ in 0..CAR_CANDIDATES {
        let o = predictor_select(guard, middles, exits, model, max_tries, rng)?;
        tries += o.tries;
        candidates.push(o.circuit);
    }
    Ok((car_choose(candidates, n_probes, rng, probe)?, tries))
}

/// Per-client selection inputs.
#[derive(Clone, Debug)]
pub struct ClientPlan {
    pub client: u32,
    /// Sticky guard drawn from `guards`.
    pub guard: RelayId,
    pub guards: Arc<WeightTable>,
    pub exits: Arc<WeightTable>,
}

/// Result of one circuit proposal.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub circuit: Circuit,
    /// Classifier evaluations spent (0 for classifier-free algorithms).
    pub tries: usize,
    pub fail_open: bool,
    pub car: Option<CarState>,
}

/// An algorithm bound to a network and, where needed, a classifier.
pub struct Selector<'a> {
    pub algorithm: Algorithm,
    pub view: ConsensusView<'a>,
    model: Option<Arc<dyn CircuitClassifier + Send + Sync + 'a>>,
    ranked_guards: Vec<RelayId>,
    ranked_middles: Vec<RelayId>,
    ranked_exits: Vec<RelayId>,
    pub car_probes: usize,
}

impl<'a> Selector<'a> {
    pub fn new(
        net: &'a NetworkModel,
        algorithm: Algorithm,
        model: Option<Arc<dyn CircuitClassifier + Send + Sync + 'a>>,
    ) -> Result<Self> {
        algorithm.validate()?;
        if algorithm.needs_model() && model.is_none() {
            return Err(Error::Config(format!(
                "algorithm {} requires a trained model",
                algorithm.name()
            )));
        }
        let view = ConsensusView::new(net)?;
        let (ranked_guards, ranked_middles, ranked_exits) = if let Algorithm::Sb { .. } = algorithm
        {
            (
                rank_by_bandwidth(net, view.guards.ids())?,
                rank_by_bandwidth(net, view.middles.ids())?,
                rank_by_bandwidth(net, view.exits.ids())?,
            )
        } else {
            Default::default()
        };
        Ok(Selector {
            algorithm,
            view,
            model,
            ranked_guards,
            ranked_middles,
            ranked_exits,
            car_probes: DEFAULT_CAR_PROBES,
        })
    }

    pub fn net(&self) -> &'a NetworkModel {
        self.view.net
    }

    /// Builds the client's plan. `dest_asns` is the client's destination set
    /// (used by e-select); `guard_rng` drives the sticky guard draw.
    pub fn plan(
        &self,
        client: &Endpoint,
        dest_asns: &[u32],
        guard_rng: &mut Rng,
    ) -> Result<ClientPlan> {
        let net = self.view.net;
        let (guards, exits) = match &self.algorithm {
            Algorithm::Denasa { tau_d, avoid_count } => {
                let guards = if *avoid_count > 0 {
                    Arc::new(denasa_g_select(
                        net,
                        &self.view.guards,
                        client.id,
                        client.asn,
                        *avoid_count,
                    )?)
                } else {
                    self.view.guards.clone()
                };
                let exits = if *tau_d < 1.0 {
                    Arc::new(e_select_survivors(
                        net,
                        &self.view.exits,
                        dest_asns,
                        *tau_d,
                    )?)
                } else {
                    self.view.exits.clone()
                };
                (guards, exits)
            }
            _ => (self.view.guards.clone(), self.view.exits.clone()),
        };
        let guard = match &self.algorithm {
            Algorithm::Sb { s } => sb_select(&self.ranked_guards, *s, guard_rng)?,
            _ => guard_assignment(&guards, guard_rng),
        };
        Ok(ClientPlan {
            client: client.id,
            guard,
            guards,
            exits,
        })
    }

    /// Draws a fresh guard from the plan's guard set instead of the sticky one.
    pub fn draw_guard(&self, plan: &ClientPlan, rng: &mut Rng) -> Result<RelayId> {
        match &self.algorithm {
            Algorithm::Sb { s } => sb_select(&self.ranked_guards, *s, rng),
            _ => Ok(guard_assignment(&plan.guards, rng)),
        }
    }

    /// Proposes a circuit behind `guard`. `probe` is consulted only by the
    /// CAR-based algorithms.
    pub fn propose(
        &self,
        plan: &ClientPlan,
        guard: RelayId,
        rng: &mut Rng,
        probe: &mut Prober<'_>,
    ) -> Result<Proposal> {
        let middles = &self.view.middles;
        let exits = &*plan.exits;
        let plain = |circuit| Proposal {
            circuit,
            tries: 0,
            fail_open: false,
            car: None,
        };
        let wrap = |e: Error| match e {
            Error::Selection(message) => Error::Simulation {
                client: plan.client,
                message,
            },
            other => other,
        };
        let p = match &self.algorithm {
            Algorithm::Vanilla | Algorithm::Denasa { .. } => {
                plain(vanilla_select(guard, middles, exits, rng).map_err(wrap)?)
            }
            Algorithm::Predictor { max_tries } => {
                let o = predictor_select(guard, middles, exits, self.model()?, *max_tries, rng)
                    .map_err(wrap)?;
                Proposal {
                    circuit: o.circuit,
                    tries: o.tries,
                    fail_open: o.fail_open,
                    car: None,
                }
            }
            Algorithm::Car => {
                let o =
                    car_select(guard, middles, exits, self.car_probes, rng, probe).map_err(wrap)?;
                Proposal {
                    circuit: o.circuit,
                    tries: 0,
                    fail_open: false,
                    car: Some(o.state),
                }
            }
            Algorithm::PredictorCar { max_tries } => {
                let (o, tries) = predictor_car_select(
                    guard,
                    middles,
                    exits,
                    self.model()?,
                    *max_tries,
                    self.car_probes,
                    rng,
                    probe,
                )
                .map_err(wrap)?;
                Proposal {
                    circuit: o.circuit,
                    tries,
                    fail_open: false,
                    car: Some(o.state),
                }
            }
            Algorithm::Sb { s } => {
                let exit =
                    sb_select_excluding(&self.ranked_exits, *s, rng, &[guard]).map_err(wrap)?;
                let middle = sb_select_excluding(&self.ranked_middles, *s, rng, &[guard, exit])
                    .map_err(wrap)?;
                plain(Circuit::new(guard, middle, exit))
            }
        };
        Ok(p)
    }

    fn model(&self) -> Result<&(dyn CircuitClassifier + Send + Sync + 'a)> {
        self.model
            .as_deref()
            .ok_or_else(|| Error::Config("model required".into()))
    }
}
