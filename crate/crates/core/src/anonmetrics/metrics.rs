//! Distributional and adversarial anonymity metrics.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::netmodel::{NetworkModel, RelayId};
use crate::pathsel::{Circuit, Position};
use crate::{Error, Result};

use super::ClasiPath;

fn check_counts(counts: &[f64]) -> Result<f64> {
    if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Validation(
            "selection counts must be finite and non-negative".into(),
        ));
    }
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return Err(Error::Degenerate("selection counts are all zero".into()));
    }
    Ok(total)
}

/// Gini coefficient of selection counts: 0 when every entry is equal,
/// `(n - 1) / n` when a single entry takes everything.
pub fn gini(counts: &[f64]) -> Result<f64> {
    let total = check_counts(counts)?;
    let mut x = counts.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let s: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (2.0 * (i + 1) as f64 - n - 1.0) * v)
        .sum();
    Ok(s / (n * total))
}

/// Normalized Shannon entropy `H(p) / log2(n)`; a single entry counts as
/// perfectly uniform.
pub fn uniformity_degree(counts: &[f64]) -> Result<f64> {
    let total = check_counts(counts)?;
    if counts.len() == 1 {
        return Ok(1.0);
    }
    let h: f64 = counts
        .iter()
        .filter(|c| **c > 0.0)
        .map(|c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum();
    Ok(h / (counts.len() as f64).log2())
}

/// What the selection counts are taken over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountBasis {
    /// Every relay, all positions pooled.
    #[default]
    Relays,
    Position(Position),
    /// Every ordered (guard, exit) pair of distinct relays.
    GuardExitPairs,
}

/// Selection counts over the support named by `basis`, zeros included.
pub fn selection_counts(
    net: &NetworkModel,
    circuits: &[Circuit],
    basis: CountBasis,
) -> Result<Vec<f64>> {
    let slots = |pos: Option<Position>| -> Vec<RelayId> {
        net.relays
            .iter()
            .filter(|r| pos.is_none_or(|p| p.admits(r)))
            .map(|r| r.id)
            .collect()
    };
    match basis {
        CountBasis::Relays | CountBasis::Position(_) => {
            let pos = match basis {
                CountBasis::Position(p) => Some(p),
                _ => None,
            };
            let mut counts: BTreeMap<RelayId, f64> =
                slots(pos).into_iter().map(|id| (id, 0.0)).collect();
            for c in circuits {
                let hit: &[RelayId] = match pos {
                    None => &c.relays(),
                    Some(Position::Guard) => &[c.guard],
                    Some(Position::Middle) => &[c.middle],
                    Some(Position::Exit) => &[c.exit],
                };
                for id in hit {
                    *counts.get_mut(id).ok_or(Error::UnknownRelay(*id))? += 1.0;
                }
            }
            Ok(counts.into_values().collect())
        }
        CountBasis::GuardExitPairs => {
            let guards = slots(Some(Position::Guard));
            let exits = slots(Some(Position::Exit));
            let mut counts: BTreeMap<(RelayId, RelayId), f64> = guards
                .iter()
                .flat_map(|g| {
                    exits
                        .iter()
                        .filter(move |e| *e != g)
                        .map(move |e| ((*g, *e), 0.0))
                })
                .collect();
            for c in circuits {
                *counts.get_mut(&(c.guard, c.exit)).ok_or_else(|| {
                    Error::Validation(format!(
                        "({}, {}) is not a guard/exit pair",
                        c.guard, c.exit
                    ))
                })? += 1.0;
            }
            Ok(counts.into_values().collect())
        }
    }
}

/// True when a watched AS sits on the client-to-guard path and a watched AS
/// (the same or another) on the exit-to-destination path.
pub fn path_is_vulnerable(net: &NetworkModel, path: &ClasiPath, watch: &[u32]) -> Result<bool> {
    let topo = &net.topology;
    let guard = net.relay(path.circuit.guard)?;
    let exit = net.relay(path.circuit.exit)?;
    Ok(topo.path_hits(path.client_asn, guard.asn, watch)?
        && topo.path_hits(exit.asn, path.dest_asn, watch)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityReport {
    /// `(client, fraction of its streams that are vulnerable)`, by client id.
    pub per_client: Vec<(u32, f64)>,
    pub median: f64,
    /// Fraction of all streams that are vulnerable.
    pub overall: f64,
}

pub fn vulnerable_rate(
    net: &NetworkModel,
    paths: &[ClasiPath],
    watch: &[u32],
) -> Result<VulnerabilityReport> {
    if paths.is_empty() {
        return Err(Error::Degenerate("no paths to assess".into()));
    }
    let mut tally: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    let mut hits = 0;
    for p in paths {
        let v = path_is_vulnerable(net, p, watch)?;
        let t = tally.entry(p.client).or_default();
        t.0 += v as usize;
        t.1 += 1;
        hits += v as usize;
    }
    let per_client: Vec<(u32, f64)> = tally
        .into_iter()
        .map(|(c, (v, n))| (c, v as f64 / n as f64))
        .collect();
    let rates: Vec<f64> = per_client.iter().map(|(_, r)| *r).collect();
    Ok(VulnerabilityReport {
        median: crate::stats::median(&rates).expect("nonempty"),
        per_client,
        overall: hits as f64 / paths.len() as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub epoch: usize,
    pub client: u32,
    pub vulnerable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtfcReport {
    /// `(client, day of first compromise)`; `None` when never compromised.
    pub per_client: Vec<(u32, Option<u32>)>,
    /// `(day, fraction of clients compromised by the end of that day)` for
    /// every day of the timeline.
    pub cdf: Vec<(u32, f64)>,
    /// Fraction of clients never compromised.
    pub censored: f64,
    /// Median over all clients, censored ones counting as infinitely late;
    /// `None` when at least half are censored.
    pub median_days: Option<f64>,
}

/// Days are numbered from 1: epoch `e` falls on day `e / epochs_per_day + 1`.
pub fn day_of(epoch: usize, epochs_per_day: usize) -> u32 {
    (epoch / epochs_per_day.max(1)) as u32 + 1
}

/// Time to first compromise from an epoch-sorted timeline. Every client that
/// appears in the timeline is counted.
pub fn time_to_first_compromise(events: &[TimelineEvent], epochs_per_day: usize) -> TtfcReport {
    let mut first: BTreeMap<u32, Option<u32>> = BTreeMap::new();
    let mut last_day = 0;
    for e in events {
        let day = day_of(e.epoch, epochs_per_day);
        last_day = last_day.max(day);
        let slot = first.entry(e.client).or_insert(None);
        if e.vulnerable && slot.is_none() {
            *slot = Some(day);
        }
    }
    let n = first.len().max(1) as f64;
    let cdf = (1..=last_day)
        .map(|d| {
            let k = first.values().filter(|v| v.is_some_and(|x| x <= d)).count();
            (d, k as f64 / n)
        })
        .collect();
    let mut days: Vec<f64> = first
        .values()
        .map(|v| v.map_or(f64::INFINITY, f64::from))
        .collect();
    days.sort_by(f64::total_cmp);
    let median_days = crate::stats::median(&days).filter(|m| m.is_finite());
    let censored = first.values().filter(|v| v.is_none()).count() as f64 / n;
    TtfcReport {
        per_client: first.into_iter().collect(),
        cdf,
        censored: if events.is_empty() { 1.0 } else { censored },
        median_days,
    }
}

pub const METRICS_HEADER: &str = "metric,value";

pub fn save_metrics(path: &Path, rows: &[(String, f64)]) -> Result<()> {
    let mut out = format!("{METRICS_HEADER}\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
