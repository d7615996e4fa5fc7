//! Row-stochastic channels `Q(y|x)`.

use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, PROB_TOL};
use crate::error::{check_index, check_len, Error, Result};

/// Label of a structured output symbol, `(block, index)`. Serialized as a
/// two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct OutputLabel {
    pub block: usize,
    pub index: usize,
}

impl From<(usize, usize)> for OutputLabel {
    fn from((block, index): (usize, usize)) -> Self {
        OutputLabel { block, index }
    }
}

impl From<OutputLabel> for (usize, usize) {
    fn from(l: OutputLabel) -> Self {
        (l.block, l.index)
    }
}

/// A conditional distribution with `k_in` rows over `k_out` outputs, stored
/// densely in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct Channel {
    k_in: usize,
    k_out: usize,
    entries: Vec<f64>,
    labels: Option<Vec<OutputLabel>>,
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    k_in: usize,
    k_out: usize,
    rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<OutputLabel>>,
}

impl TryFrom<ChannelRepr> for Channel {
    type Error = Error;

    fn try_from(r: ChannelRepr) -> Result<Self> {
        check_len(r.k_in, r.rows.len())?;
        if let Some(row) = r.rows.first() {
            check_len(r.k_out, row.len())?;
        }
        let ch = Channel::new(r.rows)?;
        match r.labels {
            Some(labels) => ch.with_labels(labels),
            None => Ok(ch),
        }
    }
}

impl From<Channel> for ChannelRepr {
    fn from(c: Channel) -> Self {
        ChannelRepr {
            k_in: c.k_in,
            k_out: c.k_out,
            rows: c.rows().map(<[f64]>::to_vec).collect(),
            labels: c.labels,
        }
    }
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k_in = rows.len();
        let k_out = rows.first().map_or(0, Vec::len);
        if k_in == 0 || k_out == 0 {
            return Err(Error::InvalidChannel("empty channel".into()));
        }
        let mut entries = Vec::with_capacity(k_in * k_out);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != k_out {
                return Err(Error::InvalidChannel(format!(
                    "row {x} has {} entries, expected {k_out}",
                    row.len()
                )));
            }
            entries.extend(row);
        }
        Channel::from_flat(k_in, k_out, entries)
    }

    pub fn from_flat(k_in: usize, k_out: usize, entries: Vec<f64>) -> Result<Self> {
        check_len(k_in * k_out, entries.len())?;
        if k_in == 0 || k_out == 0 {
            return Err(Error::InvalidChannel("empty channel".into()));
        }
        for x in 0..k_in {
            let row = &entries[x * k_out..(x + 1) * k_out];
            if let Some(y) = row.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidChannel(format!("Q({y}|{x}) = {}", row[y])));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidChannel(format!("row {x} sums to {total}")));
            }
        }
        Ok(Channel {
            k_in,
            k_out,
            entries,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<OutputLabel>) -> Result<Self> {
        check_len(self.k_out, labels.len())?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn identity(k: usize) -> Result<Self> {
        let mut entries = vec![0.0; k * k];
        for x in 0..k {
            entries[x * k + x] = 1.0;
        }
        Channel::from_flat(k, k, entries)
    }

    /// Every input mapped to the same output distribution.
    pub fn constant(k_in: usize, row: &[f64]) -> Result<Self> {
        Channel::from_flat(k_in, row.len(), row.repeat(k_in))
    }

    pub fn k_in(&self) -> usize {
        self.k_in
    }

    pub fn k_out(&self) -> usize {
        self.k_out
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.k_out + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.k_out..(x + 1) * self.k_out]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.k_out)
    }

    pub fn labels(&self) -> Option<&[OutputLabel]> {
        self.labels.as_deref()
    }

    /// `Q(S|x)` for an output subset.
    pub fn set_prob(&self, x: usize, set: &[usize]) -> Result<f64> {
        check_index(x, self.k_in)?;
        let row = self.row(x);
        set.iter()
            .map(|&y| {
                check_index(y, self.k_out)?;
                Ok(row[y])
            })
            .sum()
    }

    /// Column sums `sum_x Q(y|x)`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k_out];
        for row in self.rows() {
            for (o, q) in out.iter_mut().zip(row) {
                *o += q;
            }
        }
        out
    }

    /// Output marginal for input weights that need not be a distribution.
    pub fn push_forward(&self, weights: &[f64]) -> Result<Vec<f64>> {
        check_len(self.k_in, weights.len())?;
        let mut out = vec![0.0; self.k_out];
        for (w, row) in weights.iter().zip(self.rows()) {
            if *w == 0.0 {
                continue;
            }
            for (o, q) in out.iter_mut().zip(row) {
                *o += w * q;
            }
        }
        Ok(out)
    }
}

/// Exact output marginal `y -> sum_x p_x Q(y|x)`.
pub fn apply_channel(q: &Channel, p: &Distribution) -> Result<Distribution> {
    Distribution::new(q.push_forward(p.weights())?)
}
