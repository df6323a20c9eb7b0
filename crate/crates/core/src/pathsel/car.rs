//! Congestion-aware routing: congestion time is the current RTT minus the
//! smallest RTT seen on the circuit.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CAR_HISTORY: usize = 5;
pub const CAR_CANDIDATES: usize = 3;
/// Mean congestion (seconds) above which a circuit is abandoned.
pub const CAR_SWITCH_THRESHOLD_S: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarState {
    pub min_rtt: f64,
    history: VecDeque<f64>,
}

impl Default for CarState {
    fn default() -> Self {
        CarState {
            min_rtt: f64::INFINITY,
            history: VecDeque::with_capacity(CAR_HISTORY),
        }
    }
}

impl CarState {
    /// Records an RTT sample and returns its congestion time.
    pub fn observe(&mut self, rtt: f64) -> f64 {
        self.min_rtt = self.min_rtt.min(rtt);
        let c = car_congestion(rtt, self);
        if self.history.len() == CAR_HISTORY {
            self.history.pop_front();
        }
        self.history.push_back(c);
        c
    }

    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().copied()
    }

    pub fn with_history(history: &[f64]) -> Self {
        let mut s = CarState {
            min_rtt: 0.0,
            ..Default::default()
        };
        for &c in history.iter().rev().take(CAR_HISTORY).rev() {
            s.history.push_back(c);
        }
        s
    }

    /// Keeps the RTT floor and clears the congestion history.
    pub fn restarted(&self) -> Self {
        CarState {
            min_rtt: self.min_rtt,
            history: VecDeque::with_capacity(CAR_HISTORY),
        }
    }
}

pub fn car_congestion(rtt_now: f64, state: &CarState) -> f64 {
    if state.min_rtt.is_finite() {
        (rtt_now - state.min_rtt).max(0.0)
    } else {
        0.0
    }
}

pub fn car_should_switch(state: &CarState) -> bool {
    state.history.len() == CAR_HISTORY
        && state.history.iter().sum::<f64>() / CAR_HISTORY as f64 > CAR_SWITCH_THRESHOLD_S
}

/// Index of the candidate whose latest probe is least congested; ties go to
/// the lowest index. `probes[i]` holds the RTT samples of candidate `i`.
pub fn car_pick(probes: &[Vec<f64>]) -> Result<usize> {
    if probes.len() < CAR_CANDIDATES {
        return Err(Error::Selection(format!(
            "CAR needs {CAR_CANDIDATES} candidates, got {}",
            probes.len()
        )));
    }
    let mut best = (0, f64::INFINITY);
    for (i, samples) in probes.iter().enumerate() {
        let mut state = CarState::default();
        let mut latest = None;
        for &rtt in samples {
            latest = Some(state.observe(rtt));
        }
        let c = latest.ok_or_else(|| Error::Selection(format!("candidate {i} has no probes")))?;
        if c < best.1 {
            best = (i, c);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn congestion_is_rtt_minus_floor() {
        let mut s = CarState::default();
        s.observe(0.8);
        s.observe(0.5);
        let c = s.observe(0.9);
        assert_eq!(s.min_rtt, 0.5);
        assert!((c - 0.4).abs() < 1e-12);
    }

    #[test]
    fn switch_rule() {
        assert!(car_should_switch(&CarState::with_history(&[0.6; 5])));
        assert!(!car_should_switch(&CarState::with_history(&[0.4; 5])));
        assert!(!car_should_switch(&CarState::with_history(&[0.9; 4])));
    }

    #[test]
    fn ties_pick_first_candidate() {
        let p = vec![vec![0.3, 0.4]; 3];
        assert_eq!(car_pick(&p).unwrap(), 0);
        let p = vec![vec![0.3, 0.5], vec![0.3, 0.35], vec![0.3, 0.9]];
        assert_eq!(car_pick(&p).unwrap(), 1);
        assert!(car_pick(&p[..2]).is_err());
    }

    proptest! {
        #[test]
        fn floor_never_rises_and_congestion_nonnegative(
            rtts in proptest::collection::vec(0.001f64..5.0, 1..40)
        ) {
            let mut s = CarState::default();
            let mut floor = f64::INFINITY;
            for r in rtts {
                let c = s.observe(r);
                prop_assert!(c >= 0.0);
                prop_assert!(s.min_rtt <= floor);
                floor = s.min_rtt;
                prop_assert!(s.history().count() <= CAR_HISTORY);
            }
        }
    }
}
