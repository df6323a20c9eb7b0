//! Location-aware exit (e-select) and guard (g-select) filters driven by the
//! suspect ASes of the topology.

use crate::netmodel::{AsTopology, NetworkModel, RelayId};
use crate::seed::Rng;
use crate::{Error, Result};

use super::weights::WeightTable;

/// Fraction of `dest_asns` whose path from `exit_asn` crosses a suspect AS.
pub fn suspect_fraction(topology: &AsTopology, exit_asn: u32, dest_asns: &[u32]) -> Result<f64> {
    if dest_asns.is_empty() {
        return Ok(0.0);
    }
    let suspects = topology.suspects();
    let mut hits = 0usize;
    for &d in dest_asns {
        if topology.path_hits(exit_asn, d, suspects)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / dest_asns.len() as f64)
}

/// Exits whose suspect fraction over the client's destinations is at most
/// `tau_d`. When fewer than two qualify, the cut rises to the next fraction
/// level until two exits survive, so a survivor distinct from the guard always
/// exists.
pub fn e_select_survivors(
    net: &NetworkModel,
    exits: &WeightTable,
    dest_asns: &[u32],
    tau_d: f64,
) -> Result<WeightTable> {
    let mut scored = Vec::with_capacity(exits.len());
    for id in exits.ids() {
        let asn = net.relay(*id)?.asn;
        scored.push((*id, suspect_fraction(&net.topology, asn, dest_asns)?));
    }
    // Fractions are ratios of small integers, so a tiny slack absorbs rounding.
    let eps = 1e-12;
    let mut levels: Vec<f64> = scored.iter().map(|(_, f)| *f).collect();
    levels.sort_by(f64::total_cmp);
    let need = scored.len().min(2);
    let cut = levels
        .get(need.saturating_sub(1))
        .map_or(tau_d, |&f| f.max(tau_d));
    exits.filtered(|id| scored.iter().any(|(r, f)| *r == id && *f <= cut + eps))
}

pub fn denasa_e_select(
    survivors: &WeightTable,
    rng: &mut Rng,
    exclude: &[RelayId],
) -> Result<RelayId> {
    survivors.draw_excluding(rng, exclude)
}

/// Guards whose path from the client AS avoids the first `avoid_count`
/// suspect ASes.
pub fn denasa_g_select(
    net: &NetworkModel,
    guards: &WeightTable,
    client_id: u32,
    client_asn: u32,
    avoid_count: usize,
) -> Result<WeightTable> {
    if avoid_count == 0 {
        return Ok(guards.clone());
    }
    let topo = &net.topology;
    if avoid_count > topo.suspects().len() {
        return Err(Error::Config(format!(
            "avoid_count {avoid_count} exceeds the {} suspect ASes",
            topo.suspects().len()
        )));
    }
    let avoid = &topo.suspects()[..avoid_count];
    let mut keep = Vec::new();
    for id in guards.ids() {
        if !topo.path_hits(client_asn, net.relay(*id)?.asn, avoid)? {
            keep.push(*id);
        }
    }
    guards
        .filtered(|id| keep.contains(&id))
        .map_err(|_| Error::GSelectStarvation {
            client: client_id,
            avoid_count,
        })
}
