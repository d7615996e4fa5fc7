//! Unbiased estimators for Hadamard-Response outputs and risk evaluation.
//!
//! Every estimator is an affine map of the empirical output frequencies, so
//! feeding it the exact output marginal yields its expectation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, Channel};
use crate::distribution::{l1_distance, l2_sq_distance, tv_distance, Distribution, RawEstimate};
use crate::error::{check_index, check_len, invalid, Error, Result};
use crate::hadamard::fwht;
use crate::mechanisms::{privatize_all, BsHadamardResponse, BsHrLayout, HlHadamardResponse, HlHrLayout, Privatizer};
use crate::seed::{derive_seed, rng_for};

/// Maps privatized outputs back to a distribution estimate.
pub trait Estimator: Sync {
    fn input_size(&self) -> usize;
    fn output_size(&self) -> usize;

    /// Applies the affine map to output frequencies (length `output_size`).
    fn estimate_from_frequencies(&self, freq: &[f64]) -> Result<RawEstimate>;

    fn estimate(&self, ys: &[usize]) -> Result<RawEstimate> {
        let freq = frequencies(ys, self.output_size())?;
        self.estimate_from_frequencies(&freq)
    }
}

/// Empirical output frequencies.
pub fn frequencies(ys: &[usize], k_out: usize) -> Result<Vec<f64>> {
    if ys.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = vec![0u64; k_out];
    for &y in ys {
        check_index(y, k_out)?;
        counts[y] += 1;
    }
    let n = ys.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// `(e^eps + 1) / (e^eps - 1)`.
#[inline]
pub fn hr_gain(eps: f64) -> f64 {
    let e = eps.exp_m1();
    (e + 2.0) / e
}

/// Estimator for the high-low mechanism.
///
/// With `W` the Walsh-Hadamard transform of the frequencies on the first
/// `S` outputs, `p(S_i)` is `(W[0] + W[i+1]) / 2` and `p([S])` is `W[0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HlEstimator {
    layout: HlHrLayout,
    eps: f64,
}

impl HlEstimator {
    pub fn new(layout: HlHrLayout, eps: f64) -> Result<Self> {
        crate::mechanisms::check_eps(eps)?;
        Ok(HlEstimator { layout, eps })
    }

    pub fn for_mechanism(m: &HlHadamardResponse) -> Self {
        HlEstimator {
            layout: *m.layout(),
            eps: m.eps(),
        }
    }

    pub fn layout(&self) -> &HlHrLayout {
        &self.layout
    }
}

impl Estimator for HlEstimator {
    fn input_size(&self) -> usize {
        self.layout.k()
    }

    fn output_size(&self) -> usize {
        self.layout.output_size()
    }

    fn estimate_from_frequencies(&self, freq: &[f64]) -> Result<RawEstimate> {
        check_len(self.output_size(), freq.len())?;
        let (k, s, big_s) = (self.layout.k(), self.layout.s(), self.layout.hadamard_order());
        let c = hr_gain(self.eps);
        let e = self.eps.exp();
        let mut w = freq[..big_s].to_vec();
        fwht(&mut w);
        let p_all = w[0];
        let p_a = c * (p_all - 2.0 / (e + 1.0));
        let mut out = Vec::with_capacity(k);
        for i in 0..s {
            let p_si = 0.5 * (p_all + w[i + 1]);
            out.push(2.0 * c * (p_si - 1.0 / (e + 1.0)) - p_a);
        }
        out.extend((s..k).map(|i| c * freq[self.layout.tail_symbol(i)]));
        Ok(RawEstimate::new(out))
    }
}

/// Estimator for the block mechanism: `p_x = 2c (p(S_x) - p(X_j) / 2)`,
/// which reduces to `c W_j[row(x)]` for the block transform `W_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BsEstimator {
    layout: BsHrLayout,
    eps: f64,
}

impl BsEstimator {
    pub fn new(layout: BsHrLayout, eps: f64) -> Result<Self> {
        crate::mechanisms::check_eps(eps)?;
        Ok(BsEstimator { layout, eps })
    }

    pub fn for_mechanism(m: &BsHadamardResponse) -> Self {
        BsEstimator {
            layout: m.layout().clone(),
            eps: m.eps(),
        }
    }

    pub fn layout(&self) -> &BsHrLayout {
        &self.layout
    }
}

impl Estimator for BsEstimator {
    fn input_size(&self) -> usize {
        self.layout.k()
    }

    fn output_size(&self) -> usize {
        self.layout.output_size()
    }

    fn estimate_from_frequencies(&self, freq: &[f64]) -> Result<RawEstimate> {
        check_len(self.output_size(), freq.len())?;
        let l = &self.layout;
        let p = l.partition();
        let c = hr_gain(self.eps);
        let mut out = vec![0.0; l.k()];
        for j in 0..p.num_blocks() {
            let start = l.offset(j);
            let mut w = freq[start..start + l.block_order(j)].to_vec();
            fwht(&mut w);
            let p_block = w[0];
            for &x in p.members(j) {
                let p_sx = 0.5 * (p_block + w[l.row_of(x)]);
                out[x] = 2.0 * c * (p_sx - 0.5 * p_block);
            }
        }
        Ok(RawEstimate::new(out))
    }
}

/// Returns the output frequencies themselves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityEstimator {
    pub k: usize,
}

impl Estimator for IdentityEstimator {
    fn input_size(&self) -> usize {
        self.k
    }

    fn output_size(&self) -> usize {
        self.k
    }

    fn estimate_from_frequencies(&self, freq: &[f64]) -> Result<RawEstimate> {
        check_len(self.k, freq.len())?;
        Ok(RawEstimate::new(freq.to_vec()))
    }
}

/// Ignores the data and reports a fixed vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantEstimator {
    pub value: Distribution,
    pub output_size: usize,
}

impl Estimator for ConstantEstimator {
    fn input_size(&self) -> usize {
        self.value.k()
    }

    fn output_size(&self) -> usize {
        self.output_size
    }

    fn estimate_from_frequencies(&self, freq: &[f64]) -> Result<RawEstimate> {
        check_len(self.output_size, freq.len())?;
        Ok(self.value.clone().into())
    }
}

pub fn hl_estimate(ys: &[usize], est: &HlEstimator) -> Result<RawEstimate> {
    est.estimate(ys)
}

/// `ys` are flat output indices; see [`BsHrLayout::offset`].
pub fn bs_estimate(ys: &[usize], est: &BsEstimator) -> Result<RawEstimate> {
    est.estimate(ys)
}

/// Clips negatives and renormalizes; uniform if nothing positive remains.
pub fn project_to_simplex(v: &RawEstimate) -> Distribution {
    let clipped: Vec<f64> = v.values().iter().map(|x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Distribution::uniform(v.k().max(1)).expect("non-empty domain");
    }
    Distribution::new(clipped.iter().map(|x| x / total).collect())
        .or_else(|_| Distribution::uniform(v.k()))
        .expect("non-empty domain")
}

/// The estimator's expectation when the data come from `q` and `p`.
pub fn exact_expected_estimate<E: Estimator + ?Sized>(q: &Channel, est: &E, p: &Distribution) -> Result<RawEstimate> {
    check_len(est.input_size(), q.k_in())?;
    check_len(est.output_size(), q.k_out())?;
    let marginal = apply_channel(q, p)?;
    est.estimate_from_frequencies(marginal.weights())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Tv,
    L2Sq,
    L1,
}

impl Metric {
    pub fn eval(self, p: &[f64], estimate: &[f64]) -> Result<f64> {
        match self {
            Metric::Tv => tv_distance(p, estimate),
            Metric::L2Sq => l2_sq_distance(p, estimate),
            Metric::L1 => l1_distance(p, estimate),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskSummary {
    pub mean: f64,
    /// Sample standard deviation (0 for a single rep).
    pub std: f64,
    pub values: Vec<f64>,
}

impl RiskSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        RiskSummary { mean, std, values }
    }
}

/// Options for [`empirical_risk`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskOptions {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub project: bool,
}

/// One privatize-and-estimate trial; rep `r` draws inputs from seed path
/// `(r, 0)` and privatizes with `(r, 1)`.
pub fn run_trial<P: Privatizer, E: Estimator + ?Sized>(
    p: &Distribution,
    mech: &P,
    est: &E,
    n: usize,
    seed: u64,
    rep: u64,
) -> Result<RawEstimate> {
    let xs = p.sample_iid(n, &mut rng_for(seed, &[rep, 0]));
    let ys = privatize_all(mech, &xs, derive_seed(seed, &[rep, 1]))?;
    est.estimate(&ys)
}

/// Risk of `est` over `reps` independent trials, per metric.
pub fn empirical_risks<P: Privatizer, E: Estimator + ?Sized>(
    p: &Distribution,
    mech: &P,
    est: &E,
    opts: RiskOptions,
    metrics: &[Metric],
) -> Result<Vec<RiskSummary>> {
    if opts.n == 0 || opts.reps == 0 {
        return Err(invalid("n and reps must be at least 1"));
    }
    check_len(p.k(), mech.input_size())?;
    check_len(est.input_size(), mech.input_size())?;
    check_len(est.output_size(), mech.output_size())?;
    let per_rep: Vec<Vec<f64>> = (0..opts.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let raw = run_trial(p, mech, est, opts.n, opts.seed, rep)?;
            let values = if opts.project {
                project_to_simplex(&raw).into_weights()
            } else {
                raw.into_values()
            };
            metrics.iter().map(|m| m.eval(p.weights(), &values)).collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..metrics.len())
        .map(|i| RiskSummary::from_values(per_rep.iter().map(|r| r[i]).collect()))
        .collect())
}

pub fn empirical_risk<P: Privatizer, E: Estimator + ?Sized>(
    p: &Distribution,
    mech: &P,
    est: &E,
    opts: RiskOptions,
    metric: Metric,
) -> Result<RiskSummary> {
    Ok(empirical_risks(p, mech, est, opts, &[metric])?.remove(0))
}

/// Expected squared l2 error bound for the high-low estimator.
pub fn hl_l2_bound(s: usize, eps: f64, n: usize) -> f64 {
    let c = hr_gain(eps);
    (3.0 * s as f64 * c * c + c) / n as f64
}

/// Expected l1 error bound for the high-low estimator.
pub fn hl_l1_bound(k: usize, s: usize, eps: f64, n: usize) -> f64 {
    let c = hr_gain(eps);
    let n = n as f64;
    (3.0 * (s * s) as f64 / n * c * c).sqrt() + (c * k as f64 / n).sqrt()
}

/// Expected squared l2 error bound for the block estimator.
pub fn bs_l2_bound(max_block: usize, eps: f64, n: usize) -> f64 {
    let c = hr_gain(eps);
    12.0 * max_block as f64 / n as f64 * c * c
}

/// Expected l1 error bound for the block estimator.
pub fn bs_l1_bound(sum_sq_sizes: usize, eps: f64, n: usize) -> f64 {
    2.0 * hr_gain(eps) * (3.0 * sum_sq_sizes as f64 / n as f64).sqrt()
}
