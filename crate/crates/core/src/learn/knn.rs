//! Distance-weighted k-nearest neighbours on z-scored features.

use crate::{Error, Result};

pub const DEFAULT_K: usize = 9;

#[derive(Clone, Debug, PartialEq)]
pub struct Knn {
    mean: Vec<f64>,
    scale: Vec<f64>,
    points: Vec<Vec<f64>>,
    labels: Vec<u64>,
}

impl Knn {
    /// Stores the training set standardized with its own per-feature mean and
    /// population standard deviation (constant features keep unit scale).
    pub fn fit(x: &[Vec<f64>], labels: &[u64]) -> Result<Self> {
        if x.is_empty() || x.len() != labels.len() {
            return Err(Error::Model(
                "k-NN needs a nonempty training set with one label per row".into(),
            ));
        }
        let d = x[0].len();
        if x.iter().any(|r| r.len() != d) {
            return Err(Error::Model("ragged feature rows".into()));
        }
        let n = x.len() as f64;
        let mean: Vec<f64> = (0..d)
            .map(|f| x.iter().map(|r| r[f]).sum::<f64>() / n)
            .collect();
        let scale: Vec<f64> = (0..d)
            .map(|f| {
                let var = x.iter().map(|r| (r[f] - mean[f]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut knn = Knn {
            mean,
            scale,
            points: Vec::with_capacity(x.len()),
            labels: labels.to_vec(),
        };
        knn.points = x.iter().map(|r| knn.standardize(r)).collect();
        Ok(knn)
    }

    fn standardize(&self, r: &[f64]) -> Vec<f64> {
        r.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weighted vote of the `k` nearest points with weight `1/d^2`; a point at
    /// distance zero decides alone. Ties go to the smaller label.
    pub fn predict(&self, x: &[f64], k: usize) -> Result<u64> {
        if k == 0 {
            return Err(Error::Model("k must be positive".into()));
        }
        if k > self.points.len() {
            return Err(Error::Model(format!(
                "k = {k} exceeds the {} training points",
                self.points.len()
            )));
        }
        if x.len() != self.mean.len() {
            return Err(Error::Model(format!(
                "expected {} features, got {}",
                self.mean.len(),
                x.len()
            )));
        }
        let q = self.standardize(x);
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        // Equidistant points are ordered by coordinates, so copies of a point
        // are always adjacent.
        let order = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.total_cmp(&b.0)
                .then_with(|| {
                    self.points[a.1]
                        .iter()
                        .zip(&self.points[b.1])
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .then(a.1.cmp(&b.1))
        };
        dist.select_nth_unstable_by(k - 1, order);
        let nearest = &mut dist[..k];
        nearest.sort_by(order);
        if nearest[0].0 == 0.0 {
            return Ok(self.labels[nearest[0].1]);
        }
        let mut votes: Vec<(u64, f64)> = Vec::new();
        for &(d2, i) in nearest.iter() {
            let w = 1.0 / d2;
            match votes.iter_mut().find(|(l, _)| *l == self.labels[i]) {
                Some(v) => v.1 += w,
                None => votes.push((self.labels[i], w)),
            }
        }
        votes.sort_by_key(|v| v.0);
        let mut best = votes[0];
        for v in &votes[1..] {
            if v.1 > best.1 {
                best = *v;
            }
        }
        Ok(best.0)
    }
}

pub fn knn_predict(x: &[Vec<f64>], labels: &[u64], query: &[f64], k: usize) -> Result<u64> {
    Knn::fit(x, labels)?.predict(query, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn toy(n: usize, s: u64) -> (Vec<Vec<f64>>, Vec<u64>) {
        let mut rng = seed::rng(s, &[]);
        (0..n)
            .map(|_| {
                let bw = rng.gen_range(100.0..3000.0f64).round();
                let asn = rng.gen_range(20000..20100) as f64;
                (vec![asn, bw], (bw > 1000.0) as u64)
            })
            .unzip()
    }

    #[test]
    fn training_point_returns_its_label() {
        let (x, y) = toy(100, 1);
        let m = Knn::fit(&x, &y).unwrap();
        for (r, l) in x.iter().zip(&y).take(20) {
            assert_eq!(m.predict(r, 9).unwrap(), *l);
        }
    }

    #[test]
    fn k_one_is_nearest_neighbour() {
        let x = vec![vec![0.0, 0.0], vec![10.0, 10.0], vec![0.0, 10.0]];
        let y = vec![1, 2, 3];
        let m = Knn::fit(&x, &y).unwrap();
        assert_eq!(m.predict(&[1.0, 1.0], 1).unwrap(), 1);
        assert_eq!(m.predict(&[9.0, 9.5], 1).unwrap(), 2);
    }

    #[test]
    fn separable_accuracy() {
        let (x, y) = toy(800, 2);
        let (tx, ty) = toy(300, 3);
        let m = Knn::fit(&x, &y).unwrap();
        let ok = tx
            .iter()
            .zip(&ty)
            .filter(|(r, l)| m.predict(r, 9).unwrap() == **l)
            .count();
        assert!(ok as f64 / 300.0 >= 0.95, "{ok}");
    }

    #[test]
    fn bad_k_rejected() {
        let (x, y) = toy(5, 4);
        let m = Knn::fit(&x, &y).unwrap();
        assert!(m.predict(&x[0], 0).is_err());
        assert!(m.predict(&x[0], 6).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn duplicated_training_set_predicts_the_same(s in 0u64..1000, q in 0usize..30) {
            let (x, y) = toy(30, s);
            let (probe, _) = toy(30, s + 1);
            let single = Knn::fit(&x, &y).unwrap();
            let mut xx = x.clone();
            xx.extend(x.iter().cloned());
            let mut yy = y.clone();
            yy.extend(y.iter().copied());
            let double = Knn::fit(&xx, &yy).unwrap();
            prop_assert_eq!(
                single.predict(&probe[q], 9).unwrap(),
                double.predict(&probe[q], 18).unwrap()
            );
            prop_assert_eq!(
                single.predict(&probe[q], 30).unwrap(),
                double.predict(&probe[q], 60).unwrap()
            );
        }
    }
}
