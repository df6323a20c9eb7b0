//! Tunable bandwidth-biased selection over relays ranked by bandwidth.

use rand::Rng as _;

use crate::netmodel::{NetworkModel, RelayId};
use crate::seed::Rng;
use crate::{Error, Result};

/// Rank drawn for a uniform `x` in [0, 1); rank 0 is the fastest relay.
pub fn sb_index(n: usize, s: f64, x: f64) -> usize {
    if n == 0 {
        return 0;
    }
    let frac = if s == 0.0 {
        x
    } else {
        (1.0 - (s * x).exp2()) / (1.0 - s.exp2())
    };
    ((n as f64 * frac).floor().max(0.0) as usize).min(n - 1)
}

/// Relay ids of one position sorted by bandwidth, fastest first.
pub fn rank_by_bandwidth(net: &NetworkModel, ids: &[RelayId]) -> Result<Vec<RelayId>> {
    let mut ranked = Vec::with_capacity(ids.len());
    for &id in ids {
        ranked.push((net.relay(id)?.bandwidth, id));
    }
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(ranked.into_iter().map(|(_, id)| id).collect())
}

pub fn sb_select(ranked: &[RelayId], s: f64, rng: &mut Rng) -> Result<RelayId> {
    sb_select_excluding(ranked, s, rng, &[])
}

pub fn sb_select_excluding(
    ranked: &[RelayId],
    s: f64,
    rng: &mut Rng,
    exclude: &[RelayId],
) -> Result<RelayId> {
    if ranked.iter().all(|id| exclude.contains(id)) {
        return Err(Error::Selection("no SB candidate left".into()));
    }
    loop {
        let x: f64 = rng.gen();
        let id = ranked[sb_index(ranked.len(), s, x)];
        if !exclude.contains(&id) {
            return Ok(id);
        }
    }
}
