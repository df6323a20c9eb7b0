use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::netmodel::{NetworkModel, Relay, RelayId};
use crate::seed::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Guard,
    Middle,
    Exit,
}

impl Position {
    pub fn admits(self, r: &Relay) -> bool {
        match self {
            Position::Guard => r.is_guard,
            Position::Middle => true,
            Position::Exit => r.is_exit,
        }
    }
}

/// Relays eligible for one position with their selection weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    position: Position,
    ids: Vec<RelayId>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightTable {
    pub fn new(position: Position, entries: Vec<(RelayId, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Selection(format!(
                "no relay eligible for the {position:?} position"
            )));
        }
        let mut ids = Vec::with_capacity(entries.len());
        let mut weights = Vec::with_capacity(entries.len());
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut acc = 0.0;
        for (id, w) in entries {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Selection(format!("relay {id} has weight {w}")));
            }
            acc += w;
            ids.push(id);
            weights.push(w);
            cumulative.push(acc);
        }
        Ok(WeightTable {
            position,
            ids,
            weights,
            cumulative,
        })
    }

    /// Consensus-bandwidth weights over every relay admitted by `position`.
    pub fn for_position(net: &NetworkModel, position: Position) -> Result<Self> {
        Self::new(
            position,
            net.relays
                .iter()
                .filter(|r| position.admits(r))
                .map(|r| (r.id, r.bandwidth as f64))
                .collect(),
        )
    }

    /// Keeps only the entries accepted by `keep`, preserving their weights.
    pub fn filtered(&self, keep: impl Fn(RelayId) -> bool) -> Result<Self> {
        Self::new(
            self.position,
            self.entries().filter(|(id, _)| keep(*id)).collect(),
        )
    }

    pub fn position(&self) -> Position {
        self.position
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[RelayId] {
        &self.ids
    }

    pub fn entries(&self) -> impl Iterator<Item = (RelayId, f64)> + '_ {
        self.ids.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn contains(&self, id: RelayId) -> bool {
        self.ids.contains(&id)
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Weighted draw; consumes exactly one uniform variate.
    pub fn draw(&self, rng: &mut Rng) -> RelayId {
        let u = rng.gen::<f64>() * self.total();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.ids[i.min(self.ids.len() - 1)]
    }

    /// Weighted draw that resamples while the result is in `exclude`.
    pub fn draw_excluding(&self, rng: &mut Rng, exclude: &[RelayId]) -> Result<RelayId> {
        if self.ids.iter().all(|id| exclude.contains(id)) {
            return Err(Error::Selection(format!(
                "no {:?} candidate left after excluding {exclude:?}",
                self.position
            )));
        }
        loop {
            let id = self.draw(rng);
            if !exclude.contains(&id) {
                return Ok(id);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn rejects_empty_and_nonpositive() {
        assert!(WeightTable::new(Position::Exit, vec![]).is_err());
        assert!(WeightTable::new(Position::Exit, vec![(1, 0.0)]).is_err());
    }

    #[test]
    fn draw_frequencies_follow_weights() {
        let t = WeightTable::new(Position::Exit, vec![(1, 1.0), (2, 3.0), (3, 6.0)]).unwrap();
        let mut rng = seed::rng(5, &[]);
        let mut hits = [0usize; 4];
        let n = 20_000;
        for _ in 0..n {
            hits[t.draw(&mut rng) as usize] += 1;
        }
        for (id, w) in [(1, 0.1), (2, 0.3), (3, 0.6)] {
            let f = hits[id] as f64 / n as f64;
            assert!((f - w).abs() < 0.05 * w + 0.005, "relay {id}: {f}");
        }
    }

    #[test]
    fn exclusion_is_honoured_and_exhaustion_detected() {
        let t = WeightTable::new(Position::Middle, vec![(1, 100.0), (2, 1.0)]).unwrap();
        let mut rng = seed::rng(1, &[]);
        for _ in 0..50 {
            assert_eq!(t.draw_excluding(&mut rng, &[1]).unwrap(), 2);
        }
        assert!(t.draw_excluding(&mut rng, &[1, 2]).is_err());
    }
}
