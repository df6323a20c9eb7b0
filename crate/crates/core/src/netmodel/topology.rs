//! Synthetic AS-level topology and path oracle.
//!
//! Every non-tier-1 AS has an ordered uplink list; the first entry is its
//! primary provider. Following primary uplinks from any AS yields a chain that
//! ends in exactly one tier-1 AS. The path between two ASes climbs both chains
//! to their lowest common provider, or crosses between the two tier-1 ASes at
//! the chain tops when the chains never meet.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const WATCHED_ASNS: [u32; 2] = [3356, 1299];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsTopology {
    /// Tier-1 ASes, which double as the ordered suspect list.
    pub tier1: Vec<u32>,
    /// Uplink providers of every non-tier-1 AS, primary first.
    pub edges: BTreeMap<u32, Vec<u32>>,
    pub seed: u64,
}

impl AsTopology {
    pub fn validate(&self) -> Result<()> {
        let tier1: BTreeSet<u32> = self.tier1.iter().copied().collect();
        if tier1.len() != self.tier1.len() {
            return Err(Error::Validation("tier1 list has duplicates".into()));
        }
        for (asn, ups) in &self.edges {
            if tier1.contains(asn) {
                if !ups.is_empty() {
                    return Err(Error::Validation(format!(
                        "tier1 AS {asn} must not have uplinks"
                    )));
                }
                continue;
            }
            if ups.is_empty() {
                return Err(Error::Validation(format!("AS {asn} has no uplink")));
            }
            for up in ups {
                if !tier1.contains(up) && !self.edges.contains_key(up) {
                    return Err(Error::Validation(format!(
                        "AS {asn} has uplink to unknown AS {up}"
                    )));
                }
            }
            self.chain(*asn)?;
        }
        Ok(())
    }

    pub fn contains(&self, asn: u32) -> bool {
        self.tier1.contains(&asn) || self.edges.contains_key(&asn)
    }

    pub fn is_tier1(&self, asn: u32) -> bool {
        self.tier1.contains(&asn)
    }

    /// Suspect ASes, in priority order.
    pub fn suspects(&self) -> &[u32] {
        &self.tier1
    }

    /// Primary-uplink chain from `asn` up to (and including) its tier-1 AS.
    pub fn chain(&self, asn: u32) -> Result<Vec<u32>> {
        if !self.contains(asn) {
            return Err(Error::UnknownAsn(asn));
        }
        let mut chain = vec![asn];
        let mut cur = asn;
        while !self.is_tier1(cur) {
            let up = self
                .edges
                .get(&cur)
                .and_then(|u| u.first())
                .copied()
                .ok_or(Error::UnknownAsn(cur))?;
            if chain.contains(&up) {
                return Err(Error::Validation(format!("uplink cycle through AS {up}")));
            }
            chain.push(up);
            cur = up;
        }
        Ok(chain)
    }

    /// Deterministic AS-level path from `src` to `dst`, endpoints included.
    pub fn as_path(&self, src: u32, dst: u32) -> Result<Vec<u32>> {
        let a = self.chain(src)?;
        let b = self.chain(dst)?;
        if src == dst {
            return Ok(vec![src]);
        }
        // Lowest common provider. Chains follow a forest of primary uplinks, so
        // the first element of `a` present in `b` is also the first element of
        // `b` present in `a`, which keeps paths symmetric.
        if let Some((ia, ib)) = a
            .iter()
            .enumerate()
            .find_map(|(ia, x)| b.iter().position(|y| y == x).map(|ib| (ia, ib)))
        {
            let mut path = a[..=ia].to_vec();
            path.extend(b[..ib].iter().rev());
            return Ok(path);
        }
        let mut path = a;
        path.extend(b.iter().rev());
        Ok(path)
    }

    /// True when the path from `src` to `dst` traverses any AS in `set`.
    pub fn path_hits(&self, src: u32, dst: u32, set: &[u32]) -> Result<bool> {
        Ok(self.as_path(src, dst)?.iter().any(|a| set.contains(a)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let topo: AsTopology = serde_json::from_str(&text)?;
        topo.validate()?;
        Ok(topo)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Two tier-1s, a regional provider under each, stubs under the providers
    /// and one stub homed directly on a tier-1.
    fn sample() -> AsTopology {
        let mut edges = BTreeMap::new();
        edges.insert(100, vec![3356]);
        edges.insert(200, vec![1299, 3356]);
        edges.insert(11, vec![100]);
        edges.insert(12, vec![100]);
        edges.insert(21, vec![200]);
        edges.insert(31, vec![3356]);
        AsTopology {
            tier1: vec![3356, 1299],
            edges,
            seed: 0,
        }
    }

    #[test]
    fn self_path() {
        let t = sample();
        assert_eq!(t.as_path(11, 11).unwrap(), vec![11]);
    }

    #[test]
    fn same_provider_avoids_tier1() {
        let t = sample();
        assert_eq!(t.as_path(11, 12).unwrap(), vec![11, 100, 12]);
    }

    #[test]
    fn shared_tier1_appears_once() {
        let mut edges = BTreeMap::new();
        edges.insert(65001, vec![3356]);
        edges.insert(65002, vec![3356]);
        let t = AsTopology {
            tier1: vec![3356],
            edges,
            seed: 0,
        };
        assert_eq!(t.as_path(65001, 65002).unwrap(), vec![65001, 3356, 65002]);
        let t = sample();
        assert_eq!(t.as_path(11, 31).unwrap(), vec![11, 100, 3356, 31]);
    }

    #[test]
    fn distinct_tier1s_are_both_crossed() {
        let t = sample();
        assert_eq!(
            t.as_path(11, 21).unwrap(),
            vec![11, 100, 3356, 1299, 200, 21]
        );
    }

    #[test]
    fn unknown_asn_is_an_error() {
        let t = sample();
        assert!(matches!(t.as_path(11, 999), Err(Error::UnknownAsn(999))));
    }

    #[test]
    fn validation_rejects_orphans_and_duplicates() {
        let mut t = sample();
        t.edges.insert(40, vec![]);
        assert!(t.validate().is_err());
        let mut t = sample();
        t.tier1.push(3356);
        assert!(t.validate().is_err());
        let mut t = sample();
        t.edges.insert(41, vec![42]);
        t.edges.insert(42, vec![41]);
        assert!(t.validate().is_err());
    }

    proptest! {
        #[test]
        fn symmetric_with_bounded_tier1(i in 0usize..6, j in 0usize..6) {
            let t = sample();
            let ases = [11u32, 12, 21, 31, 100, 200];
            let p = t.as_path(ases[i], ases[j]).unwrap();
            let mut q = t.as_path(ases[j], ases[i]).unwrap();
            q.reverse();
            prop_assert_eq!(&p, &q);
            let tier1_hops = p.iter().filter(|a| t.is_tier1(**a)).count();
            prop_assert!(tier1_hops <= 2);
        }
    }
}
