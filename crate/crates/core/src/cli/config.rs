//! Experiment configuration: one TOML file, every key optional, with
//! `TORSELLAB_*` environment overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::anonmetrics::{ClasiParams, GuardPolicy, UserModel};
use crate::learn::ForestParams;
use crate::netmodel::{NetworkConfig, WATCHED_ASNS};
use crate::pathsel::Algorithm;
use crate::simcore::{SimParams, Workload};
use crate::{Error, Result};

pub const ENV_PREFIX: &str = "TORSELLAB_";

/// How the training threshold is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum TauPolicy {
    #[default]
    Median,
    Fixed(f64),
}

impl Serialize for TauPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TauPolicy::Median => s.serialize_str("median"),
            TauPolicy::Fixed(t) => s.serialize_f64(*t),
        }
    }
}

impl<'de> Deserialize<'de> for TauPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Word(String),
            Value(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Word(w) if w == "median" => Ok(TauPolicy::Median),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "tau must be \"median\" or a number, got {w:?}"
            ))),
            Repr::Value(t) => Ok(TauPolicy::Fixed(t)),
        }
    }
}

impl std::str::FromStr for TauPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "median" {
            return Ok(TauPolicy::Median);
        }
        s.parse()
            .map(TauPolicy::Fixed)
            .map_err(|_| Error::Config(format!("tau must be \"median\" or a number, got {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnSection {
    pub tau: TauPolicy,
    /// Thresholds in the sweep curve.
    pub sweep_points: usize,
    /// Share of records held out to evaluate the sweep.
    pub holdout: f64,
    /// Model used by the predictor variants.
    pub model: Option<PathBuf>,
    pub forest: ForestParams,
}

impl Default for LearnSection {
    fn default() -> Self {
        LearnSection {
            tau: TauPolicy::Median,
            sweep_points: 20,
            holdout: 0.2,
            model: None,
            forest: ForestParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub algos: Vec<String>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            algos: ["vanilla", "predictor", "car", "predictor_car", "sb-15"]
                .map(String::from)
                .to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClasiSection {
    pub n_train: usize,
    pub n_test: usize,
    pub repeats: usize,
    pub shuffle_labels: bool,
    /// Destinations per client; 0 lets every client visit every destination.
    pub dests_per_client: usize,
    pub guard_policy: GuardPolicy,
    pub forest: ForestParams,
}

impl Default for ClasiSection {
    fn default() -> Self {
        let p = ClasiParams::default();
        ClasiSection {
            n_train: p.n_train,
            n_test: p.n_test,
            repeats: p.repeats,
            shuffle_labels: p.shuffle_labels,
            dests_per_client: 5,
            guard_policy: GuardPolicy::PerPath,
            forest: p.forest,
        }
    }
}

impl ClasiSection {
    pub fn params(&self) -> ClasiParams {
        ClasiParams {
            n_train: self.n_train,
            n_test: self.n_test,
            repeats: self.repeats,
            shuffle_labels: self.shuffle_labels,
            forest: self.forest.clone(),
        }
    }

    pub fn user_model(&self) -> UserModel {
        user_model(self.dests_per_client)
    }
}

pub fn user_model(dests: usize) -> UserModel {
    if dests == 0 {
        UserModel::All
    } else {
        UserModel::Destinations(dests)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub days: usize,
    pub epochs_per_day: usize,
    pub streams_per_epoch: usize,
    pub dests_per_client: usize,
    pub watch: Vec<u32>,
    /// Count guard/exit pairs instead of pooled relay selections.
    pub pairs: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            days: 30,
            epochs_per_day: 6,
            streams_per_epoch: 2,
            dests_per_client: 5,
            watch: WATCHED_ASNS.to_vec(),
            pairs: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Directory holding the network files and every output.
    pub out: PathBuf,
    /// Seed of simulation runs; the world seed when absent.
    pub sim_seed: Option<u64>,
    pub network: NetworkConfig,
    pub workload: Workload,
    pub sim: SimParams,
    pub algorithm: Algorithm,
    pub learn: LearnSection,
    pub compare: CompareSection,
    pub clasi: ClasiSection,
    pub metrics: MetricsSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            out: PathBuf::from("out"),
            sim_seed: None,
            network: NetworkConfig::default(),
            workload: Workload::default(),
            sim: SimParams::default(),
            algorithm: Algorithm::Vanilla,
            learn: LearnSection::default(),
            compare: CompareSection::default(),
            clasi: ClasiSection::default(),
            metrics: MetricsSection::default(),
        }
    }
}

/// Keys absent from the default config that may still be set.
const OPTIONAL_KEYS: &[&str] = &[
    "sim_seed",
    "network.clients",
    "learn.model",
    "algorithm.s",
    "algorithm.tau_d",
    "algorithm.avoid_count",
    "algorithm.max_tries",
];

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<String>) {
    if let toml::Value::Table(t) = v {
        for (k, v) in t {
            let path = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            if v.is_table() {
                flatten(&path, v, out);
            } else {
                out.push(path);
            }
        }
    }
}

fn known_keys() -> Vec<String> {
    let default = toml::Value::try_from(ExperimentConfig::default()).expect("default serializes");
    let mut keys = Vec::new();
    flatten("", &default, &mut keys);
    keys.extend(OPTIONAL_KEYS.iter().map(|k| k.to_string()));
    keys
}

/// `network.client_ratio` is overridden by `TORSELLAB_NETWORK_CLIENT_RATIO`.
pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "_").to_uppercase())
}

fn parse_scalar(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}

fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("nonempty key");
    let mut t = root;
    for p in parts {
        t = t
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .expect("config sections are tables");
    }
    t.insert(last.to_owned(), value);
}

impl ExperimentConfig {
    /// Parses TOML text, applies `env` overrides and validates.
    pub fn from_toml_with_env(
        text: &str,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        let keys = known_keys();
        let by_env: BTreeMap<String, &String> = keys.iter().map(|k| (env_name(k), k)).collect();
        for (name, raw) in env {
            if !name.starts_with(ENV_PREFIX) {
                continue;
            }
            let key = by_env.get(&name).ok_or_else(|| {
                Error::Config(format!("environment variable {name} names no config key"))
            })?;
            set_path(&mut table, key, parse_scalar(&raw));
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_env(text, std::iter::empty())
    }

    /// Reads `path` (defaults when `None`) with overrides from the process
    /// environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml_with_env(&text, std::env::vars())
    }

    pub fn validate(&self) -> Result<()> {
        if self.network.relays == 0 {
            return Err(Error::Config("network.relays must be positive".into()));
        }
        if self.network.clients.is_none()
            && (self.network.client_ratio.is_nan() || self.network.client_ratio <= 0.0)
        {
            return Err(Error::Config(
                "network.client_ratio must be positive".into(),
            ));
        }
        if self.workload.epochs == 0 || self.workload.streams_per_epoch == 0 {
            return Err(Error::Config(
                "workload.epochs and workload.streams_per_epoch must be positive".into(),
            ));
        }
        if self.workload.file_kib == 0 {
            return Err(Error::Config("workload.file_kib must be positive".into()));
        }
        self.sim.validate()?;
        self.algorithm.validate()?;
        self.learn.forest.validate()?;
        if let TauPolicy::Fixed(t) = self.learn.tau {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!(
                    "learn.tau must be non-negative, got {t}"
                )));
            }
        }
        if self.learn.sweep_points == 0 || !(self.learn.holdout > 0.0 && self.learn.holdout < 1.0) {
            return Err(Error::Config(
                "learn.sweep_points must be positive and learn.holdout in (0, 1)".into(),
            ));
        }
        for a in &self.compare.algos {
            a.parse::<Algorithm>()?;
        }
        self.clasi.params().validate()?;
        let m = &self.metrics;
        if m.days == 0 || m.epochs_per_day == 0 || m.streams_per_epoch == 0 {
            return Err(Error::Config(
                "metrics.days, epochs_per_day and streams_per_epoch must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn world_seed(&self) -> u64 {
        self.network.seed
    }

    pub fn sim_seed(&self) -> u64 {
        self.sim_seed.unwrap_or(self.network.seed)
    }

    /// SHA-256 of the resolved config with the output directory left out.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let text = toml::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(
            ExperimentConfig::from_toml("").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn sections_and_overrides() {
        let text = r#"
            out = "runs/a"
            [network]
            relays = 40
            [algorithm]
            algo = "sb"
            s = 15
            [learn]
            tau = 0.5
        "#;
        let cfg = ExperimentConfig::from_toml_with_env(
            text,
            env(&[
                ("TORSELLAB_NETWORK_CLIENT_RATIO", "3"),
                ("TORSELLAB_SIM_SEED", "7"),
                ("TORSELLAB_SIM_CAPACITY_SIGMA", "0.25"),
                ("TORSELLAB_CLASI_GUARD_POLICY", "sticky"),
                ("PATH", "/bin"),
            ]),
        )
        .unwrap();
        assert_eq!(cfg.network.relays, 40);
        assert_eq!(cfg.network.client_ratio, 3.0);
        assert_eq!(cfg.sim_seed(), 7);
        assert_eq!(cfg.world_seed(), 42);
        assert_eq!(cfg.sim.capacity.sigma, 0.25);
        assert_eq!(cfg.clasi.guard_policy, GuardPolicy::Sticky);
        assert_eq!(cfg.algorithm, Algorithm::Sb { s: 15.0 });
        assert_eq!(cfg.learn.tau, TauPolicy::Fixed(0.5));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("colour = 1").is_err());
        assert!(ExperimentConfig::from_toml("[network]\nrelay = 3").is_err());
        assert!(ExperimentConfig::from_toml_with_env("", env(&[("TORSELLAB_NOPE", "1")])).is_err());
        assert!(ExperimentConfig::from_toml("[learn]\ntau = \"mean\"").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml("[network]\nclient_ratio = 0").is_err());
        assert!(ExperimentConfig::from_toml("[compare]\nalgos = [\"warp\"]").is_err());
        assert!(ExperimentConfig::from_toml("[algorithm]\nalgo = \"denasa\"\ntau_d = 0").is_err());
    }

    #[test]
    fn hash_tracks_content_not_location() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.config_hash(), b.config_hash());
        b.network.seed = 43;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn tau_policy_parses() {
        assert_eq!("median".parse::<TauPolicy>().unwrap(), TauPolicy::Median);
        assert_eq!("1.5".parse::<TauPolicy>().unwrap(), TauPolicy::Fixed(1.5));
        assert!("fast".parse::<TauPolicy>().is_err());
    }
}
