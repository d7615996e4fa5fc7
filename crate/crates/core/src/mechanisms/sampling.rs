use rand::Rng;
use rayon::prelude::*;

use crate::channel::Channel;
use crate::error::{check_index, Result};
use crate::seed::rng_for;

/// Anything that can privatize a single input symbol.
pub trait Privatizer: Sync {
    fn input_size(&self) -> usize;
    fn output_size(&self) -> usize;
    fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Result<usize>;
}

/// Draws one output of row `x` by inverse CDF.
pub fn sample_output<R: Rng + ?Sized>(q: &Channel, x: usize, rng: &mut R) -> Result<usize> {
    check_index(x, q.k_in())?;
    let row = q.row(x);
    let total: f64 = row.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (y, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = y;
            if u < acc {
                return Ok(y);
            }
        }
    }
    Ok(last_positive)
}

/// Inverse-CDF sampler over precomputed cumulative rows.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    k_in: usize,
    k_out: usize,
    cdf: Vec<f64>,
    last_positive: Vec<usize>,
}

impl ChannelSampler {
    pub fn new(q: &Channel) -> Self {
        let mut cdf = Vec::with_capacity(q.k_in() * q.k_out());
        let mut last_positive = Vec::with_capacity(q.k_in());
        for row in q.rows() {
            let mut acc = 0.0;
            let mut last = 0;
            for (y, &p) in row.iter().enumerate() {
                acc += p;
                if p > 0.0 {
                    last = y;
                }
                cdf.push(acc);
            }
            last_positive.push(last);
        }
        ChannelSampler {
            k_in: q.k_in(),
            k_out: q.k_out(),
            cdf,
            last_positive,
        }
    }
}

impl Privatizer for ChannelSampler {
    fn input_size(&self) -> usize {
        self.k_in
    }

    fn output_size(&self) -> usize {
        self.k_out
    }

    fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Result<usize> {
        check_index(x, self.k_in)?;
        let row = &self.cdf[x * self.k_out..(x + 1) * self.k_out];
        let u = rng.gen::<f64>() * row[self.k_out - 1];
        let y = row.partition_point(|&c| c <= u);
        Ok(y.min(self.last_positive[x]))
    }
}

/// Privatizes every input independently.
///
/// The stream for position `i` is keyed by `(seed, x_i, r_i)` where `r_i`
/// counts earlier occurrences of `x_i`. Results do not depend on
/// scheduling, and permuting the inputs permutes the outputs accordingly.
pub fn privatize_all<P: Privatizer>(mech: &P, xs: &[usize], seed: u64) -> Result<Vec<usize>> {
    let k = mech.input_size();
    let mut seen = vec![0u64; k];
    let mut keys = Vec::with_capacity(xs.len());
    for &x in xs {
        check_index(x, k)?;
        keys.push((x, seen[x]));
        seen[x] += 1;
    }
    keys.par_iter()
        .with_min_len(4096)
        .map(|&(x, occurrence)| {
            let mut rng = rng_for(seed, &[x as u64, occurrence]);
            mech.sample(x, &mut rng)
        })
        .collect()
}
