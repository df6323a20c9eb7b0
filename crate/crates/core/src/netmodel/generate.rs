//! Seeded generator for synthetic worlds.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{AsTopology, CountryCode, Endpoint, EndpointKind, NetworkModel, Relay};
use crate::seed::{self, Rng};
use crate::{Error, Result};

pub const MIN_BANDWIDTH: u64 = 100;
pub const MAX_BANDWIDTH: u64 = 200_000;
pub const PARETO_SHAPE: f64 = 1.5;

/// Tier-1 ASes; the first two are the watched pair.
pub const TIER1: [u32; 8] = [3356, 1299, 64496, 64497, 64498, 64499, 64500, 64501];
/// Relative odds of each tier-1 being picked as a regional provider's uplink.
const TIER1_UPLINK_ODDS: [f64; 8] = [3.0, 3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];

const TIER2_BASE: u32 = 9000;
const RELAY_AS_BASE: u32 = 20_000;
const RELAY_AS_PER_COUNTRY: u32 = 3;
const CLIENT_AS_BASE: u32 = 30_000;
const DEST_AS_BASE: u32 = 40_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    NorthAmerica,
    SouthAmerica,
    WesternEurope,
    EasternEurope,
    AsiaPacific,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::NorthAmerica,
        Region::SouthAmerica,
        Region::WesternEurope,
        Region::EasternEurope,
        Region::AsiaPacific,
    ];

    fn index(self) -> u32 {
        Region::ALL.iter().position(|r| *r == self).unwrap_or(0) as u32
    }

    /// ASN of the region's transit provider.
    pub fn provider_asn(self) -> u32 {
        TIER2_BASE + self.index()
    }
}

struct Country {
    code: &'static str,
    region: Region,
    lat: (f64, f64),
    lon: (f64, f64),
    relay_weight: f64,
    dest_weight: f64,
}

#[rustfmt::skip]
const COUNTRIES: [Country; 13] = [
    Country { code: "US", region: Region::NorthAmerica, lat: (30.0, 47.0), lon: (-122.0, -75.0), relay_weight: 0.18, dest_weight: 0.50 },
    Country { code: "CA", region: Region::NorthAmerica, lat: (43.0, 55.0), lon: (-123.0, -65.0), relay_weight: 0.05, dest_weight: 0.0 },
    Country { code: "BR", region: Region::SouthAmerica, lat: (-30.0, -5.0), lon: (-55.0, -35.0), relay_weight: 0.04, dest_weight: 0.05 },
    Country { code: "DE", region: Region::WesternEurope, lat: (47.0, 55.0), lon: (6.0, 15.0), relay_weight: 0.22, dest_weight: 0.10 },
    Country { code: "FR", region: Region::WesternEurope, lat: (43.0, 50.0), lon: (-1.0, 7.0), relay_weight: 0.12, dest_weight: 0.05 },
    Country { code: "GB", region: Region::WesternEurope, lat: (50.0, 57.0), lon: (-5.0, 1.0), relay_weight: 0.05, dest_weight: 0.10 },
    Country { code: "NL", region: Region::WesternEurope, lat: (51.0, 53.0), lon: (4.0, 7.0), relay_weight: 0.10, dest_weight: 0.05 },
    Country { code: "SE", region: Region::WesternEurope, lat: (56.0, 64.0), lon: (12.0, 19.0), relay_weight: 0.05, dest_weight: 0.0 },
    Country { code: "RU", region: Region::EasternEurope, lat: (50.0, 60.0), lon: (30.0, 60.0), relay_weight: 0.06, dest_weight: 0.0 },
    Country { code: "UA", region: Region::EasternEurope, lat: (45.0, 52.0), lon: (24.0, 40.0), relay_weight: 0.03, dest_weight: 0.0 },
    Country { code: "IN", region: Region::AsiaPacific, lat: (10.0, 30.0), lon: (72.0, 88.0), relay_weight: 0.02, dest_weight: 0.05 },
    Country { code: "JP", region: Region::AsiaPacific, lat: (31.0, 43.0), lon: (130.0, 141.0), relay_weight: 0.04, dest_weight: 0.10 },
    Country { code: "SG", region: Region::AsiaPacific, lat: (1.2, 1.45), lon: (103.6, 104.0), relay_weight: 0.04, dest_weight: 0.0 },
];

/// The ten client countries, in default share order.
pub const CLIENT_COUNTRIES: [&str; 10] =
    ["US", "RU", "DE", "FR", "GB", "UA", "IN", "NL", "CA", "BR"];

fn country(code: &str) -> &'static Country {
    COUNTRIES
        .iter()
        .find(|c| c.code == code)
        .expect("country table covers every code it is queried with")
}

fn country_index(code: &str) -> u32 {
    COUNTRIES.iter().position(|c| c.code == code).unwrap_or(0) as u32
}

/// Region a country code belongs to, when it is one of the generator's countries.
pub fn region_of(code: CountryCode) -> Option<Region> {
    COUNTRIES
        .iter()
        .find(|c| c.code == code.as_str())
        .map(|c| c.region)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub relays: usize,
    /// Explicit client count; when absent, `relays × client_ratio`.
    pub clients: Option<usize>,
    pub client_ratio: f64,
    pub destinations: usize,
    pub seed: u64,
    pub guard_fraction: f64,
    pub exit_fraction: f64,
    /// Relative client shares over [`CLIENT_COUNTRIES`].
    pub client_shares: Vec<f64>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            relays: 100,
            clients: None,
            client_ratio: 2.5,
            destinations: 20,
            seed: 42,
            guard_fraction: 0.6,
            exit_fraction: 0.5,
            client_shares: vec![1.0; CLIENT_COUNTRIES.len()],
        }
    }
}

impl NetworkConfig {
    pub fn new(relays: usize, clients: usize, destinations: usize, seed: u64) -> Self {
        NetworkConfig {
            relays,
            clients: Some(clients),
            destinations,
            seed,
            ..Default::default()
        }
    }

    pub fn client_count(&self) -> usize {
        self.clients
            .unwrap_or_else(|| (self.relays as f64 * self.client_ratio).round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.relays == 0 {
            return Err(Error::Config("relay count must be positive".into()));
        }
        if !(self.client_ratio.is_finite() && self.client_ratio > 0.0) {
            return Err(Error::Config(format!(
                "client ratio must be positive, got {}",
                self.client_ratio
            )));
        }
        if self.client_count() == 0 {
            return Err(Error::Config("client count must be positive".into()));
        }
        if self.destinations == 0 {
            return Err(Error::Config("destination count must be positive".into()));
        }
        for (name, f) in [
            ("guard_fraction", self.guard_fraction),
            ("exit_fraction", self.exit_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {f}")));
            }
        }
        if self.client_shares.len() != CLIENT_COUNTRIES.len()
            || self
                .client_shares
                .iter()
                .any(|s| !(s.is_finite() && *s >= 0.0))
            || self.client_shares.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::Config(format!(
                "client_shares needs {} non-negative weights with a positive sum",
                CLIENT_COUNTRIES.len()
            )));
        }
        Ok(())
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn sample_coords(rng: &mut Rng, c: &Country) -> (f64, f64) {
    (
        round4(rng.gen_range(c.lat.0..=c.lat.1)),
        round4(rng.gen_range(c.lon.0..=c.lon.1)),
    )
}

/// Pareto(1.5) draws, min-max scaled onto the consensus bandwidth range.
fn sample_bandwidths(rng: &mut Rng, n: usize) -> Vec<u64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.gen::<f64>();
            u.powf(-1.0 / PARETO_SHAPE)
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (MAX_BANDWIDTH - MIN_BANDWIDTH) as f64;
    raw.iter()
        .map(|&x| {
            if hi > lo {
                MIN_BANDWIDTH + ((x - lo) / (hi - lo) * span).round() as u64
            } else {
                MIN_BANDWIDTH
            }
        })
        .collect()
}

/// Apportions `n` clients over the shares with largest remainders and
/// interleaves them so every prefix of the client list is close to the shares.
fn client_countries(n: usize, shares: &[f64]) -> Vec<&'static str> {
    let total: f64 = shares.iter().sum();
    let mut out = Vec::with_capacity(n);
    let mut credit = vec![0.0; shares.len()];
    for _ in 0..n {
        for (c, s) in credit.iter_mut().zip(shares) {
            *c += s / total;
        }
        // Ties go to the earlier country.
        let k =
            (0..shares.len()).fold(0, |best, k| if credit[k] > credit[best] { k } else { best });
        credit[k] -= 1.0;
        out.push(CLIENT_COUNTRIES[k]);
    }
    out
}

fn build_topology(rng: &mut Rng, seed: u64, stub_ases: &BTreeMap<u32, Region>) -> AsTopology {
    let odds = WeightedIndex::new(TIER1_UPLINK_ODDS).expect("static positive odds");
    let mut edges = BTreeMap::new();
    for region in Region::ALL {
        let primary = odds.sample(rng);
        let mut backup = odds.sample(rng);
        while backup == primary {
            backup = odds.sample(rng);
        }
        edges.insert(region.provider_asn(), vec![TIER1[primary], TIER1[backup]]);
    }
    for (&asn, region) in stub_ases {
        edges.insert(asn, vec![region.provider_asn()]);
    }
    AsTopology {
        tier1: TIER1.to_vec(),
        edges,
        seed,
    }
}

pub fn generate_network(cfg: &NetworkConfig) -> Result<NetworkModel> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed, &[seed::stream::NETWORK]);
    let n = cfg.relays;

    let bandwidths = sample_bandwidths(&mut rng, n);
    let relay_odds = WeightedIndex::new(COUNTRIES.iter().map(|c| c.relay_weight))
        .expect("static positive weights");
    let mut relay_cc: Vec<&'static str> = (0..n)
        .map(|_| COUNTRIES[relay_odds.sample(&mut rng)].code)
        .collect();
    let mut is_guard: Vec<bool> = (0..n).map(|_| rng.gen_bool(cfg.guard_fraction)).collect();
    let mut is_exit: Vec<bool> = (0..n).map(|_| rng.gen_bool(cfg.exit_fraction)).collect();

    if n <= 3 {
        is_guard.iter_mut().for_each(|g| *g = true);
        is_exit.iter_mut().for_each(|e| *e = true);
    } else {
        // Every client region hosts at least one guard, so location-aware
        // guard filters always have a same-region candidate.
        let mut donors: Vec<usize> = (0..n).collect();
        donors.sort_by_key(|&i| (bandwidths[i], i));
        let mut donors = donors.into_iter();
        for code in CLIENT_COUNTRIES {
            let region = country(code).region;
            if (0..n).any(|i| is_guard[i] && country(relay_cc[i]).region == region) {
                continue;
            }
            let local = (0..n).find(|&i| country(relay_cc[i]).region == region);
            let pick = match local {
                Some(i) => i,
                None => {
                    let i = donors
                        .by_ref()
                        .find(|&i| {
                            let r = country(relay_cc[i]).region;
                            (0..n).filter(|&j| country(relay_cc[j]).region == r).count() > 1
                        })
                        .unwrap_or(0);
                    relay_cc[i] = code;
                    i
                }
            };
            is_guard[pick] = true;
        }
        if !is_exit.iter().any(|e| *e) {
            let best = (0..n).max_by_key(|&i| (bandwidths[i], i)).unwrap_or(0);
            is_exit[best] = true;
        }
        let guards: Vec<usize> = (0..n).filter(|&i| is_guard[i]).collect();
        let exits: Vec<usize> = (0..n).filter(|&i| is_exit[i]).collect();
        if guards.len() == 1 && exits == guards {
            let other = (0..n).find(|&i| i != guards[0]).unwrap_or(0);
            is_exit[other] = true;
        }
    }

    let mut stub_ases = BTreeMap::new();
    let mut relays = Vec::with_capacity(n);
    for i in 0..n {
        let c = country(relay_cc[i]);
        let (lat, lon) = sample_coords(&mut rng, c);
        let asn =
            RELAY_AS_BASE + country_index(c.code) * 10 + rng.gen_range(0..RELAY_AS_PER_COUNTRY);
        stub_ases.insert(asn, c.region);
        relays.push(Relay {
            id: i as u32,
            nickname: format!("{}relay{i:04}", c.code.to_ascii_lowercase()),
            bandwidth: bandwidths[i],
            asn,
            country: CountryCode::new(c.code)?,
            lat,
            lon,
            is_guard: is_guard[i],
            is_exit: is_exit[i],
        });
    }

    let mut next_id = n as u32;
    let mut clients = Vec::new();
    for code in client_countries(cfg.client_count(), &cfg.client_shares) {
        let c = country(code);
        let (lat, lon) = sample_coords(&mut rng, c);
        let asn = CLIENT_AS_BASE + country_index(code);
        stub_ases.insert(asn, c.region);
        clients.push(Endpoint {
            id: next_id,
            kind: EndpointKind::Client,
            asn,
            country: CountryCode::new(code)?,
            lat,
            lon,
        });
        next_id += 1;
    }

    let dest_odds = WeightedIndex::new(COUNTRIES.iter().map(|c| c.dest_weight))
        .expect("static weights with a positive sum");
    let mut destinations = Vec::new();
    for k in 0..cfg.destinations {
        let c = &COUNTRIES[dest_odds.sample(&mut rng)];
        let (lat, lon) = sample_coords(&mut rng, c);
        let asn = DEST_AS_BASE + k as u32;
        stub_ases.insert(asn, c.region);
        destinations.push(Endpoint {
            id: next_id,
            kind: EndpointKind::Destination,
            asn,
            country: CountryCode::new(c.code)?,
            lat,
            lon,
        });
        next_id += 1;
    }

    let topology = build_topology(&mut rng, cfg.seed, &stub_ases);
    NetworkModel::new(relays, clients, destinations, topology)
}
