//! Probability vectors, raw (unconstrained) estimates and distances.

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, check_len, Error, Result};

/// Tolerance on `sum(weights) == 1` for exact-algebra checks.
pub const PROB_TOL: f64 = 1e-9;

/// A probability vector over `0..k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub struct Distribution {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    k: usize,
    weights: Vec<f64>,
}

impl TryFrom<DistributionRepr> for Distribution {
    type Error = Error;

    fn try_from(r: DistributionRepr) -> Result<Self> {
        check_len(r.k, r.weights.len())?;
        Distribution::new(r.weights)
    }
}

impl From<Distribution> for DistributionRepr {
    fn from(d: Distribution) -> Self {
        DistributionRepr {
            k: d.k(),
            weights: d.weights,
        }
    }
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty domain".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
        {
            return Err(Error::InvalidDistribution(format!("weight {i} is {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Distribution { weights })
    }

    /// Normalizes non-negative masses.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::InvalidDistribution(
                "masses must be non-negative with positive total".into(),
            ));
        }
        Distribution::new(masses.iter().map(|m| m / total).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("empty domain".into()));
        }
        Ok(Distribution {
            weights: vec![1.0 / k as f64; k],
        })
    }

    pub fn point_mass(k: usize, x: usize) -> Result<Self> {
        check_index(x, k)?;
        let mut weights = vec![0.0; k];
        weights[x] = 1.0;
        Ok(Distribution { weights })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.weights[x]
    }

    /// Mass of a set of symbols.
    pub fn mass(&self, set: impl IntoIterator<Item = usize>) -> f64 {
        set.into_iter().map(|x| self.weights[x]).sum()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// `n` independent draws.
    pub fn sample_iid<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        let index = WeightedIndex::new(&self.weights).expect("validated weights");
        (0..n).map(|_| index.sample(rng)).collect()
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.weights
    }
}

/// An unconstrained estimate: entries may be negative or exceed one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawEstimate {
    values: Vec<f64>,
}

impl RawEstimate {
    pub fn new(values: Vec<f64>) -> Self {
        RawEstimate { values }
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for RawEstimate {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

impl From<Distribution> for RawEstimate {
    fn from(d: Distribution) -> Self {
        RawEstimate { values: d.weights }
    }
}

/// Half the l1 distance; defined for raw estimates as well.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(0.5 * l1_distance(p, q)?)
}

pub fn l1_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_len(p.len(), q.len())?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

pub fn l2_sq_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_len(p.len(), q.len())?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tv_examples() {
        let p = [0.6, 0.4];
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((tv_distance(&[0.6, 0.4], &[0.4, 0.6]).unwrap() - 0.2).abs() < 1e-15);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn l2_examples() {
        assert_eq!(l2_sq_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(l2_sq_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!((l2_sq_distance(&[0.6, 0.4], &[0.4, 0.6]).unwrap() - 0.08).abs() < 1e-15);
        assert!(l2_sq_distance(&[1.0], &[]).is_err());
    }

    #[test]
    fn validation() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn json_schema() {
        let d = Distribution::new(vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"k":2,"weights":[0.25,0.75]}"#);
        assert_eq!(serde_json::from_str::<Distribution>(&s).unwrap(), d);
        assert!(serde_json::from_str::<Distribution>(r#"{"k":3,"weights":[0.25,0.75]}"#).is_err());
        assert!(serde_json::from_str::<Distribution>(r#"{"k":2,"weights":[0.5,0.75]}"#).is_err());
    }

    fn dist(k: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, k).prop_map(|v| {
            let t: f64 = v.iter().sum::<f64>() + 1e-9;
            v.iter().map(|x| (x + 1e-9 / v.len() as f64) / t).collect()
        })
    }

    fn subset_tv(p: &[f64], q: &[f64]) -> f64 {
        let k = p.len();
        (0u32..(1 << k))
            .map(|mask| {
                let d: f64 = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| p[i] - q[i]).sum();
                d.abs()
            })
            .fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn tv_is_a_metric(p in dist(6), q in dist(6), r in dist(6)) {
            let pq = tv_distance(&p, &q).unwrap();
            prop_assert!((pq - tv_distance(&q, &p).unwrap()).abs() < 1e-15);
            prop_assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
            prop_assert!(pq <= tv_distance(&p, &r).unwrap() + tv_distance(&r, &q).unwrap() + 1e-12);
        }

        #[test]
        fn tv_equals_max_subset_gap(k in 1usize..=10, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || {
                let v: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
                let t: f64 = v.iter().sum();
                v.into_iter().map(|x| x / t).collect::<Vec<_>>()
            };
            let p = draw();
            let q = draw();
            prop_assert!((tv_distance(&p, &q).unwrap() - subset_tv(&p, &q)).abs() < 1e-12);
        }
    }
}
