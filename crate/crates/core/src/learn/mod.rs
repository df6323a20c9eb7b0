//! Circuit features, threshold labelling, classifiers and their evaluation.

mod forest;
mod knn;

use std::collections::HashMap;
use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::netmodel::{Endpoint, NetworkModel};
use crate::pathsel::{Circuit, CircuitClassifier};
use crate::simcore::StreamRecord;
use crate::{Error, Result};

pub use forest::{
    predict_forest, train_forest, ForestModel, ForestParams, Task, Tree, MODEL_FORMAT,
    MODEL_VERSION,
};
pub use knn::{knn_predict, Knn, DEFAULT_K};

pub const CIRCUIT_FEATURES: usize = 9;
pub const PATH_FEATURES: usize = 11;

/// Decimal concatenation of the two ASCII codes: `"US"` is 85 then 83, 8583.
pub fn encode_country(cc: &str) -> Result<u32> {
    let b = cc.as_bytes();
    if b.len() != 2 || !b.iter().all(u8::is_ascii_uppercase) {
        return Err(Error::Validation(format!(
            "country code {cc:?} is not two uppercase letters"
        )));
    }
    Ok(b[0] as u32 * 100 + b[1] as u32)
}

/// `(asn, country, bandwidth)` for guard, middle and exit, followed by the
/// destination's `(asn, country)` when one is given.
pub fn extract_features(
    net: &NetworkModel,
    circuit: &Circuit,
    dest: Option<&Endpoint>,
) -> Result<Vec<f64>> {
    let mut fv = Vec::with_capacity(PATH_FEATURES);
    for id in circuit.relays() {
        let r = net.relay(id)?;
        fv.push(r.asn as f64);
        fv.push(encode_country(r.country.as_str())? as f64);
        fv.push(r.bandwidth as f64);
    }
    if let Some(d) = dest {
        fv.push(d.asn as f64);
        fv.push(encode_country(d.country.as_str())? as f64);
    }
    Ok(fv)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub ttlb_s: f64,
    /// True when the stream finished strictly faster than the threshold.
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub tau: f64,
    pub samples: Vec<LabeledSample>,
}

impl LabeledSet {
    pub fn positives(&self) -> usize {
        self.samples.iter().filter(|s| s.label).count()
    }

    pub fn x(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.features.clone()).collect()
    }

    pub fn y(&self) -> Vec<u64> {
        self.samples.iter().map(|s| s.label as u64).collect()
    }

    pub fn relabel(&self, tau: f64) -> LabeledSet {
        LabeledSet {
            tau,
            samples: self
                .samples
                .iter()
                .map(|s| LabeledSample {
                    label: s.ttlb_s < tau,
                    ..s.clone()
                })
                .collect(),
        }
    }
}

/// Circuit features of every record, labelled `ttlb < tau`.
pub fn label_samples(net: &NetworkModel, records: &[StreamRecord], tau: f64) -> Result<LabeledSet> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Config(format!(
            "tau must be non-negative, got {tau}"
        )));
    }
    let mut cache: HashMap<Circuit, Vec<f64>> = HashMap::new();
    let mut samples = Vec::with_capacity(records.len());
    for r in records {
        let features = match cache.get(&r.circuit) {
            Some(f) => f.clone(),
            None => {
                let f = extract_features(net, &r.circuit, None)?;
                cache.insert(r.circuit, f.clone());
                f
            }
        };
        samples.push(LabeledSample {
            features,
            ttlb_s: r.ttlb_s,
            label: r.ttlb_s < tau,
        });
    }
    Ok(LabeledSet { tau, samples })
}

pub fn median_ttlb(records: &[StreamRecord]) -> Result<f64> {
    let t: Vec<f64> = records.iter().map(|r| r.ttlb_s).collect();
    crate::stats::median(&t).ok_or_else(|| Error::Degenerate("no stream records".into()))
}

pub const SAMPLES_HEADER: &str = "g_asn,g_cc,g_bw,m_asn,m_cc,m_bw,e_asn,e_cc,e_bw";

pub fn save_samples(path: &Path, set: &LabeledSet) -> Result<()> {
    let with_dest = set
        .samples
        .first()
        .is_some_and(|s| s.features.len() == PATH_FEATURES);
    let mut buf = Vec::new();
    let io = |e| Error::io(path, e);
    write!(buf, "{SAMPLES_HEADER}").map_err(io)?;
    if with_dest {
        write!(buf, ",d_asn,d_cc").map_err(io)?;
    }
    writeln!(buf, ",ttlb_s,label").map_err(io)?;
    for s in &set.samples {
        for v in &s.features {
            write!(buf, "{v},").map_err(io)?;
        }
        writeln!(buf, "{},{}", s.ttlb_s, s.label).map_err(io)?;
    }
    std::fs::write(path, buf).map_err(io)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl EvalReport {
    /// Confusion summary with "fast" (true) as the positive class.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Result<Self> {
        let mut r = EvalReport::default();
        for (predicted, truth) in pairs {
            match (predicted, truth) {
                (true, true) => r.tp += 1,
                (true, false) => r.fp += 1,
                (false, false) => r.tn += 1,
                (false, true) => r.fn_ += 1,
            }
        }
        let n = r.tp + r.fp + r.tn + r.fn_;
        if n == 0 {
            return Err(Error::Degenerate("empty test set".into()));
        }
        let ratio = |a: usize, b: usize| {
            if a + b == 0 {
                0.0
            } else {
                a as f64 / (a + b) as f64
            }
        };
        r.accuracy = (r.tp + r.tn) as f64 / n as f64;
        r.fpr = ratio(r.fp, r.tn);
        r.fnr = ratio(r.fn_, r.tp);
        Ok(r)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Accuracy of always predicting the more common test class.
    pub fn majority_baseline(&self) -> f64 {
        let pos = self.tp + self.fn_;
        let n = self.total();
        pos.max(n - pos) as f64 / n as f64
    }
}

pub fn evaluate(model: &ForestModel, test: &LabeledSet) -> Result<EvalReport> {
    let mut pairs = Vec::with_capacity(test.samples.len());
    for s in &test.samples {
        pairs.push((predict_forest(model, &s.features)?.0, s.label));
    }
    EvalReport::from_pairs(pairs)
}

/// Trains a binary forest on a labelled set and records its threshold.
pub fn train_labeled(set: &LabeledSet, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    let mut m = train_forest(&set.x(), &set.y(), Task::Binary, params, seed)?;
    m.tau = Some(set.tau);
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau: f64,
    pub report: EvalReport,
}

/// Relabels both sets at every threshold, retrains and evaluates.
pub fn sweep_tau(
    train: &LabeledSet,
    test: &LabeledSet,
    taus: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    taus.iter()
        .map(|&tau| {
            let model = train_labeled(&train.relabel(tau), params, seed)?;
            Ok(SweepPoint {
                tau,
                report: evaluate(&model, &test.relabel(tau))?,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "tau,accuracy,fpr,fnr";

pub fn save_sweep(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut out = format!("{SWEEP_HEADER}\n");
    for p in points {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{:.6}\n",
            p.tau, p.report.accuracy, p.report.fpr, p.report.fnr
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Thresholds at evenly spaced quantiles (5% to 95%) of the training TTLBs.
pub fn quantile_grid(ttlb: &[f64], points: usize) -> Result<Vec<f64>> {
    if ttlb.is_empty() || points == 0 {
        return Err(Error::Degenerate("empty TTLB sample".into()));
    }
    let mut sorted = ttlb.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((0..points)
        .map(|i| {
            let q = if points == 1 {
                0.5
            } else {
                0.05 + 0.9 * i as f64 / (points - 1) as f64
            };
            crate::stats::quantile_sorted(&sorted, q)
        })
        .collect())
}

/// Exposes a binary forest as the circuit predicate used by path selection.
/// Scores are cached per circuit.
pub struct ForestCircuitClassifier<'a> {
    net: &'a NetworkModel,
    model: &'a ForestModel,
    cache: Mutex<HashMap<Circuit, f64>>,
}

impl<'a> ForestCircuitClassifier<'a> {
    pub fn new(net: &'a NetworkModel, model: &'a ForestModel) -> Result<Self> {
        if model.task != Task::Binary || model.n_features != CIRCUIT_FEATURES {
            return Err(Error::Model(format!(
                "circuit predicate needs a binary {CIRCUIT_FEATURES}-feature model"
            )));
        }
        Ok(ForestCircuitClassifier {
            net,
            model,
            cache: Mutex::new(HashMap::new()),
        })
    }
}

impl CircuitClassifier for ForestCircuitClassifier<'_> {
    fn score(&self, circuit: &Circuit) -> Result<f64> {
        if let Some(s) = self.cache.lock().expect("cache lock").get(circuit) {
            return Ok(*s);
        }
        let fv = extract_features(self.net, circuit, None)?;
        let (_, s) = predict_forest(self.model, &fv)?;
        self.cache.lock().expect("cache lock").insert(*circuit, s);
        Ok(s)
    }
}

#[cfg(test)]
mod tests;
