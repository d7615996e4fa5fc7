//! Synthetic estimation sweeps: distribution -> samples -> privatize ->
//! estimate -> risk, over a grid of sample sizes and settings.
//!
//! Seeds: row `(n_idx, rep)` gets `row = derive(base, [n_idx, rep])`.
//! Inputs are drawn from `derive(row, [0])` and are shared by every
//! setting, so settings are compared on the same samples. A setting
//! privatizes with `derive(row, [1, model_code, s_or_m])`.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{l2_sq_distance, tv_distance, Distribution, RawEstimate};
use crate::error::{invalid, Result};
use crate::estimation::{project_to_simplex, BsEstimator, Estimator, HlEstimator};
use crate::mechanisms::{privatize_all, BsHadamardResponse, HlHadamardResponse, Privatizer};
use crate::partition::{Partition, SensitiveSet};
use crate::seed::{derive_seed, rng_for};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    /// Hadamard Response over one block.
    Ldp,
    /// High-low model with sensitive set `0..s`, one run per `s`.
    Hlldp { s: Vec<usize> },
    /// Block model with `m` equal index blocks, one run per `m`. `m = 1`
    /// is reported as the LDP baseline.
    Bsldp { m: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform,
    /// `p(i) ~ (1 - lambda)^i lambda`.
    Geometric {
        lambda: f64,
    },
    /// `p(i) ~ (i + 1)^-lambda`.
    Zipf {
        lambda: f64,
    },
    /// Geometric weights moved by `i -> (i * stride mod k) + floor(i * stride / k)`.
    GeometricPermuted {
        lambda: f64,
        stride: usize,
    },
    /// Geometric weights under a seeded uniform permutation.
    GeometricShuffled {
        lambda: f64,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: usize,
    pub eps: f64,
    pub model: ModelSpec,
    pub distribution: DistributionSpec,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub project: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(invalid(format!("k must be at least 2, got {}", self.k)));
        }
        crate::mechanisms::check_eps(self.eps)?;
        if self.reps == 0 {
            return Err(invalid("reps must be at least 1"));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(invalid("n_grid must be non-empty with positive entries"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_grid must be strictly increasing"));
        }
        match &self.model {
            ModelSpec::Ldp => {}
            ModelSpec::Hlldp { s } => {
                if s.is_empty() || s.iter().any(|&s| s == 0 || s >= self.k) {
                    return Err(invalid(format!("every s must satisfy 1 <= s < k = {}", self.k)));
                }
            }
            ModelSpec::Bsldp { m } => {
                if m.is_empty() || m.iter().any(|&m| m == 0 || m > self.k) {
                    return Err(invalid(format!("every m must satisfy 1 <= m <= k = {}", self.k)));
                }
            }
        }
        make_distribution(&self.distribution, self.k).map(|_| ())
    }
}

fn geometric_weights(lambda: f64, k: usize) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("geometric lambda must lie in (0, 1), got {lambda}")));
    }
    Ok((0..k).map(|i| (1.0 - lambda).powi(i as i32) * lambda).collect())
}

/// The stride permutation `i -> (i * stride mod k) + floor(i * stride / k)`.
/// With `stride` dividing `k` this sends `i = q * (k / stride) + r` to
/// `r * stride + q`.
pub fn stride_permutation(k: usize, stride: usize) -> Result<Vec<usize>> {
    if stride == 0 || !k.is_multiple_of(stride) {
        return Err(invalid(format!("stride {stride} must divide k = {k}")));
    }
    Ok((0..k).map(|i| (i * stride) % k + (i * stride) / k).collect())
}

pub fn make_distribution(spec: &DistributionSpec, k: usize) -> Result<Distribution> {
    let masses = match *spec {
        DistributionSpec::Uniform => return Distribution::uniform(k),
        DistributionSpec::Geometric { lambda } => geometric_weights(lambda, k)?,
        DistributionSpec::Zipf { lambda } => {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(invalid(format!("zipf lambda must be positive, got {lambda}")));
            }
            (0..k).map(|i| ((i + 1) as f64).powf(-lambda)).collect()
        }
        DistributionSpec::GeometricPermuted { lambda, stride } => {
            let w = geometric_weights(lambda, k)?;
            let perm = stride_permutation(k, stride)?;
            let mut out = vec![0.0; k];
            for (i, &to) in perm.iter().enumerate() {
                out[to] = w[i];
            }
            out
        }
        DistributionSpec::GeometricShuffled { lambda, seed } => {
            let mut w = geometric_weights(lambda, k)?;
            w.shuffle(&mut rng_for(seed, &[]));
            w
        }
    };
    Distribution::from_masses(&masses)
}

/// `m` contiguous index blocks of size `floor(k / m)`; the last block
/// absorbs the remainder.
pub fn index_partition(k: usize, m: usize) -> Result<Partition> {
    if m == 0 || m > k {
        return Err(invalid(format!("need 1 <= m <= k, got m = {m}, k = {k}")));
    }
    let size = k / m;
    Partition::new((0..k).map(|x| (x / size).min(m - 1)).collect())
}

/// A mechanism paired with its estimator.
#[derive(Clone, Debug)]
pub enum Pipeline {
    HighLow(HlHadamardResponse, HlEstimator),
    Block(BsHadamardResponse, BsEstimator),
}

impl Pipeline {
    pub fn high_low(a: &SensitiveSet, eps: f64) -> Result<Self> {
        let m = HlHadamardResponse::new(a, eps)?;
        let e = HlEstimator::for_mechanism(&m);
        Ok(Pipeline::HighLow(m, e))
    }

    pub fn block(partition: &Partition, eps: f64) -> Result<Self> {
        let m = BsHadamardResponse::new(partition, eps)?;
        let e = BsEstimator::for_mechanism(&m);
        Ok(Pipeline::Block(m, e))
    }

    pub fn input_size(&self) -> usize {
        match self {
            Pipeline::HighLow(m, _) => m.input_size(),
            Pipeline::Block(m, _) => m.input_size(),
        }
    }

    /// Privatizes `xs` and returns the raw estimate.
    pub fn run(&self, xs: &[usize], seed: u64) -> Result<Vec<f64>> {
        let raw = match self {
            Pipeline::HighLow(m, e) => e.estimate(&privatize_all(m, xs, seed)?)?,
            Pipeline::Block(m, e) => e.estimate(&privatize_all(m, xs, seed)?)?,
        };
        Ok(raw.into_values())
    }
}

/// One row of a sweep.
#[derive(Clone, Debug)]
pub struct Setting {
    pub model: String,
    pub s_or_m: usize,
    pub pipeline: Pipeline,
}

impl Setting {
    fn code(&self) -> u64 {
        match self.model.as_str() {
            "ldp" => 0,
            "hlldp" => 1,
            "bsldp" => 2,
            _ => 3,
        }
    }
}

pub fn settings_for(config: &ExperimentConfig) -> Result<Vec<Setting>> {
    let k = config.k;
    let eps = config.eps;
    let ldp = || -> Result<Setting> {
        Ok(Setting {
            model: "ldp".into(),
            s_or_m: 1,
            pipeline: Pipeline::block(&Partition::single(k)?, eps)?,
        })
    };
    match &config.model {
        ModelSpec::Ldp => Ok(vec![ldp()?]),
        ModelSpec::Hlldp { s } => s
            .iter()
            .map(|&s| {
                Ok(Setting {
                    model: "hlldp".into(),
                    s_or_m: s,
                    pipeline: Pipeline::high_low(&SensitiveSet::new(k, s)?, eps)?,
                })
            })
            .collect(),
        ModelSpec::Bsldp { m } => m
            .iter()
            .map(|&m| {
                if m == 1 {
                    return ldp();
                }
                Ok(Setting {
                    model: "bsldp".into(),
                    s_or_m: m,
                    pipeline: Pipeline::block(&index_partition(k, m)?, eps)?,
                })
            })
            .collect(),
    }
}

/// Errors of one trial. Wall time is kept out of serialized output so
/// reruns are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub model: String,
    pub k: usize,
    pub s_or_m: usize,
    pub eps: f64,
    pub n: usize,
    pub rep: usize,
    pub tv: f64,
    pub l2sq: f64,
    pub seed: u64,
    pub tv_proj: f64,
    pub l2sq_proj: f64,
    /// Position of the producing setting in the sweep.
    #[serde(skip)]
    pub setting: usize,
    #[serde(skip)]
    pub wall_time_ms: f64,
}

/// Runs every setting on shared samples. Rows are ordered by setting, then
/// `n`, then rep.
pub fn run_settings(
    p: &Distribution,
    settings: &[Setting],
    eps: f64,
    n_grid: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<ResultRow>> {
    for s in settings {
        crate::error::check_len(p.k(), s.pipeline.input_size())?;
    }
    let cells: Vec<(usize, usize)> = (0..n_grid.len()).flat_map(|i| (0..reps).map(move |r| (i, r))).collect();
    let per_cell: Vec<Vec<ResultRow>> = cells
        .par_iter()
        .map(|&(n_idx, rep)| {
            let n = n_grid[n_idx];
            let row_seed = derive_seed(seed, &[n_idx as u64, rep as u64]);
            let xs = p.sample_iid(n, &mut rng_for(row_seed, &[0]));
            settings
                .iter()
                .enumerate()
                .map(|(setting, s)| {
                    let start = Instant::now();
                    let est = s
                        .pipeline
                        .run(&xs, derive_seed(row_seed, &[1, s.code(), s.s_or_m as u64]))?;
                    let proj = project_to_simplex(&RawEstimate::new(est.clone()));
                    Ok(ResultRow {
                        model: s.model.clone(),
                        k: p.k(),
                        s_or_m: s.s_or_m,
                        eps,
                        n,
                        rep,
                        tv: tv_distance(p.weights(), &est)?,
                        l2sq: l2_sq_distance(p.weights(), &est)?,
                        seed: row_seed,
                        tv_proj: tv_distance(p.weights(), proj.weights())?,
                        l2sq_proj: l2_sq_distance(p.weights(), proj.weights())?,
                        setting,
                        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = per_cell.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.setting, r.n, r.rep));
    Ok(rows)
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let p = make_distribution(&config.distribution, config.k)?;
    let settings = settings_for(config)?;
    run_settings(&p, &settings, config.eps, &config.n_grid, config.reps, config.seed)
}

/// Mean and standard deviation of the errors at one `(setting, n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub model: String,
    pub s_or_m: usize,
    pub n: usize,
    pub reps: usize,
    pub mean_tv: f64,
    pub std_tv: f64,
    pub mean_l2sq: f64,
    pub std_l2sq: f64,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Groups rows by `(setting, n)` in first-seen order. `project` selects
/// the projected errors.
pub fn summarize(rows: &[ResultRow], project: bool) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.setting, r.n)) {
            keys.push((r.setting, r.n));
        }
    }
    keys.into_iter()
        .map(|(setting, n)| {
            let group: Vec<&ResultRow> = rows.iter().filter(|r| r.setting == setting && r.n == n).collect();
            let tv: Vec<f64> = group.iter().map(|r| if project { r.tv_proj } else { r.tv }).collect();
            let l2: Vec<f64> = group
                .iter()
                .map(|r| if project { r.l2sq_proj } else { r.l2sq })
                .collect();
            let (mean_tv, std_tv) = mean_std(&tv);
            let (mean_l2sq, std_l2sq) = mean_std(&l2);
            SummaryRow {
                model: group[0].model.clone(),
                s_or_m: group[0].s_or_m,
                n,
                reps: group.len(),
                mean_tv,
                std_tv,
                mean_l2sq,
                std_l2sq,
            }
        })
        .collect()
}

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
