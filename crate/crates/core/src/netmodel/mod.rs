//! The synthetic Tor world: relays, client and destination endpoints,
//! geography and a deterministic AS-level path oracle.

mod generate;
pub mod geo;
mod io;
mod topology;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use generate::{
    generate_network, region_of, NetworkConfig, Region, CLIENT_COUNTRIES, MAX_BANDWIDTH,
    MIN_BANDWIDTH, TIER1,
};
pub use geo::{geo_rtt_ms, haversine_km, Coords};
pub use io::{
    load_endpoints, load_relay_table, save_endpoints, save_relay_table, ENDPOINTS_FILE,
    ENDPOINTS_HEADER, RELAYS_FILE, RELAYS_HEADER, TOPOLOGY_FILE,
};
pub use topology::{AsTopology, WATCHED_ASNS};

pub type RelayId = u32;
pub type EndpointId = u32;

/// Two-letter uppercase ISO-style country code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self> {
        code.parse()
    }

    pub fn as_bytes(&self) -> [u8; 2] {
        self.0
    }

    pub fn as_str(&self) -> &str {
        // Only ASCII uppercase letters are ever stored.
        std::str::from_utf8(&self.0).unwrap_or("??")
    }
}

impl FromStr for CountryCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() == 2 && b.iter().all(u8::is_ascii_uppercase) {
            Ok(CountryCode([b[0], b[1]]))
        } else {
            Err(Error::Validation(format!(
                "country code {s:?} is not two uppercase letters"
            )))
        }
    }
}

impl TryFrom<String> for CountryCode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CountryCode> for String {
    fn from(c: CountryCode) -> String {
        c.as_str().to_owned()
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CountryCode({})", self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relay {
    pub id: RelayId,
    pub nickname: String,
    /// Consensus bandwidth in KiB/s.
    pub bandwidth: u64,
    pub asn: u32,
    pub country: CountryCode,
    pub lat: f64,
    pub lon: f64,
    pub is_guard: bool,
    pub is_exit: bool,
}

impl Relay {
    pub fn coords(&self) -> Coords {
        Coords::new(self.lat, self.lon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidth == 0 {
            return Err(Error::Validation(format!(
                "relay {} has zero bandwidth",
                self.id
            )));
        }
        geo::check_coords(self.lat, self.lon)
            .map_err(|m| Error::Validation(format!("relay {}: {m}", self.id)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointKind {
    Client,
    Destination,
}

impl EndpointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EndpointKind::Client => "client",
            EndpointKind::Destination => "destination",
        }
    }
}

impl FromStr for EndpointKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "client" => Ok(EndpointKind::Client),
            "destination" => Ok(EndpointKind::Destination),
            other => Err(Error::Validation(format!(
                "unknown endpoint kind {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub id: EndpointId,
    pub kind: EndpointKind,
    pub asn: u32,
    pub country: CountryCode,
    pub lat: f64,
    pub lon: f64,
}

impl Endpoint {
    pub fn coords(&self) -> Coords {
        Coords::new(self.lat, self.lon)
    }
}

pub const DEFAULT_FIBER_FACTOR: f64 = 0.67;
pub const DEFAULT_PROC_DELAY_MS: f64 = 2.0;

/// A complete synthetic world.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel {
    pub relays: Vec<Relay>,
    pub clients: Vec<Endpoint>,
    pub destinations: Vec<Endpoint>,
    pub topology: AsTopology,
    pub fiber_factor: f64,
    /// Processing delay added per circuit leg, in milliseconds.
    pub proc_delay_ms: f64,
    relay_index: HashMap<RelayId, usize>,
}

impl NetworkModel {
    pub fn new(
        relays: Vec<Relay>,
        clients: Vec<Endpoint>,
        destinations: Vec<Endpoint>,
        topology: AsTopology,
    ) -> Result<Self> {
        let relay_index = relays.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        let model = NetworkModel {
            relays,
            clients,
            destinations,
            topology,
            fiber_factor: DEFAULT_FIBER_FACTOR,
            proc_delay_ms: DEFAULT_PROC_DELAY_MS,
            relay_index,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for r in &self.relays {
            r.validate()?;
            if !ids.insert(r.id) {
                return Err(Error::Validation(format!("duplicate id {}", r.id)));
            }
        }
        for (kind, list) in [
            (EndpointKind::Client, &self.clients),
            (EndpointKind::Destination, &self.destinations),
        ] {
            for e in list {
                if e.kind != kind {
                    return Err(Error::Validation(format!(
                        "endpoint {} listed as {} but has kind {}",
                        e.id,
                        kind.as_str(),
                        e.kind.as_str()
                    )));
                }
                geo::check_coords(e.lat, e.lon)
                    .map_err(|m| Error::Validation(format!("endpoint {}: {m}", e.id)))?;
                if !ids.insert(e.id) {
                    return Err(Error::Validation(format!("duplicate id {}", e.id)));
                }
            }
        }
        self.topology.validate()
    }

    pub fn relay(&self, id: RelayId) -> Result<&Relay> {
        self.relay_index
            .get(&id)
            .map(|&i| &self.relays[i])
            .ok_or(Error::UnknownRelay(id))
    }

    /// Position of a relay in [`NetworkModel::relays`].
    pub fn relay_slot(&self, id: RelayId) -> Result<usize> {
        self.relay_index
            .get(&id)
            .copied()
            .ok_or(Error::UnknownRelay(id))
    }

    pub fn client(&self, id: EndpointId) -> Result<&Endpoint> {
        self.clients
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::Validation(format!("unknown client {id}")))
    }

    pub fn destination(&self, id: EndpointId) -> Result<&Endpoint> {
        self.destinations
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::Validation(format!("unknown destination {id}")))
    }

    pub fn with_delays(mut self, fiber_factor: f64, proc_delay_ms: f64) -> Self {
        self.fiber_factor = fiber_factor;
        self.proc_delay_ms = proc_delay_ms;
        self
    }

    /// Writes `relays.csv`, `endpoints.csv` and `topology.json` into `dir`.
    pub fn save_dir(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_relay_table(&dir.join(RELAYS_FILE), &self.relays)?;
        let endpoints: Vec<Endpoint> = self
            .clients
            .iter()
            .chain(&self.destinations)
            .cloned()
            .collect();
        save_endpoints(&dir.join(ENDPOINTS_FILE), &endpoints)?;
        self.topology.save(&dir.join(TOPOLOGY_FILE))
    }

    pub fn load_dir(dir: &std::path::Path) -> Result<Self> {
        let relays = load_relay_table(&dir.join(RELAYS_FILE))?;
        let endpoints = load_endpoints(&dir.join(ENDPOINTS_FILE))?;
        let topology = AsTopology::load(&dir.join(TOPOLOGY_FILE))?;
        let (clients, destinations) = endpoints
            .into_iter()
            .partition(|e| e.kind == EndpointKind::Client);
        NetworkModel::new(relays, clients, destinations, topology)
    }
}
