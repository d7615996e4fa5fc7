//! Hadamard Response for the high-low and block-structured models.

use rand::Rng;
use serde::Serialize;

use crate::channel::{Channel, OutputLabel};
use crate::error::{check_index, invalid, Result};
use crate::hadamard::Hadamard;
use crate::partition::{Partition, SensitiveSet};

use super::{check_eps, Privatizer};

/// Output layout of the high-low mechanism.
///
/// Outputs `0..S` are Hadamard columns, with sensitive symbol `x` owning
/// the `+1` columns of row `x + 1` of `H_S`. Non-sensitive symbol `x` owns
/// the tail symbol `S + (x - s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HlHrLayout {
    k: usize,
    s: usize,
    #[serde(serialize_with = "ser_order")]
    hadamard: Hadamard,
}

fn ser_order<S: serde::Serializer>(h: &Hadamard, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(h.order() as u64)
}

impl HlHrLayout {
    pub fn new(a: &SensitiveSet) -> Result<Self> {
        let (k, s) = (a.k(), a.s());
        if s == 0 || s >= k {
            return Err(invalid(format!(
                "high-low layout needs 1 <= s < k, got s = {s}, k = {k}"
            )));
        }
        Ok(HlHrLayout {
            k,
            s,
            hadamard: Hadamard::covering(s),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `S`, the Hadamard order.
    pub fn hadamard_order(&self) -> usize {
        self.hadamard.order()
    }

    pub fn hadamard(&self) -> Hadamard {
        self.hadamard
    }

    pub fn output_size(&self) -> usize {
        self.hadamard.order() + self.k - self.s
    }

    /// `y in S_x` for a sensitive `x`.
    #[inline]
    pub fn in_plus_set(&self, x: usize, y: usize) -> bool {
        y < self.hadamard.order() && self.hadamard.is_plus(x + 1, y)
    }

    pub fn plus_set(&self, x: usize) -> Vec<usize> {
        (0..self.hadamard.order()).filter(|&y| self.in_plus_set(x, y)).collect()
    }

    #[inline]
    pub fn tail_symbol(&self, x: usize) -> usize {
        debug_assert!(x >= self.s);
        x - self.s + self.hadamard.order()
    }
}

/// The high-low Hadamard-Response mechanism.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HlHadamardResponse {
    layout: HlHrLayout,
    eps: f64,
}

impl HlHadamardResponse {
    pub fn new(a: &SensitiveSet, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(HlHadamardResponse {
            layout: HlHrLayout::new(a)?,
            eps,
        })
    }

    pub fn layout(&self) -> &HlHrLayout {
        &self.layout
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn channel(&self) -> Result<Channel> {
        let l = &self.layout;
        let big_s = l.hadamard_order();
        let e = self.eps.exp();
        let high = 2.0 * e / (big_s as f64 * (e + 1.0));
        let low = 2.0 / (big_s as f64 * (e + 1.0));
        let tail = (e - 1.0) / (e + 1.0);
        let k_out = l.output_size();
        let mut entries = vec![0.0; l.k * k_out];
        for x in 0..l.k {
            let row = &mut entries[x * k_out..(x + 1) * k_out];
            if x < l.s {
                for (y, q) in row[..big_s].iter_mut().enumerate() {
                    *q = if l.in_plus_set(x, y) { high } else { low };
                }
            } else {
                row[..big_s].fill(low);
                row[l.tail_symbol(x)] = tail;
            }
        }
        Channel::from_flat(l.k, k_out, entries)
    }
}

impl Privatizer for HlHadamardResponse {
    fn input_size(&self) -> usize {
        self.layout.k
    }

    fn output_size(&self) -> usize {
        self.layout.output_size()
    }

    fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Result<usize> {
        let l = &self.layout;
        check_index(x, l.k)?;
        let e = self.eps.exp();
        if x < l.s {
            let want_plus = rng.gen::<f64>() * (e + 1.0) < e;
            Ok(sample_hadamard_half(l.hadamard, x + 1, want_plus, rng))
        } else if rng.gen::<f64>() * (e + 1.0) < 2.0 {
            Ok(rng.gen_range(0..l.hadamard_order()))
        } else {
            Ok(l.tail_symbol(x))
        }
    }
}

/// Uniform column from the `+1` (or `-1`) half of a non-first row.
fn sample_hadamard_half<R: Rng + ?Sized>(h: Hadamard, row: usize, plus: bool, rng: &mut R) -> usize {
    debug_assert!(row >= 1);
    loop {
        let c = rng.gen_range(0..h.order());
        if h.is_plus(row, c) == plus {
            return c;
        }
    }
}

/// Output layout of the block mechanism: block `j` owns `K_j` consecutive
/// outputs starting at `offset(j)`, labelled `(j, i)`. Member `x` uses row
/// `position(x) + 1` of `H_{K_j}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BsHrLayout {
    partition: Partition,
    hadamards: Vec<Hadamard>,
    offsets: Vec<usize>,
    output_size: usize,
}

impl BsHrLayout {
    pub fn new(partition: &Partition) -> Self {
        let hadamards: Vec<Hadamard> = partition.sizes().into_iter().map(Hadamard::covering).collect();
        let mut offsets = Vec::with_capacity(hadamards.len());
        let mut total = 0;
        for h in &hadamards {
            offsets.push(total);
            total += h.order();
        }
        BsHrLayout {
            partition: partition.clone(),
            hadamards,
            offsets,
            output_size: total,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn k(&self) -> usize {
        self.partition.k()
    }

    pub fn block_order(&self, block: usize) -> usize {
        self.hadamards[block].order()
    }

    pub fn hadamard(&self, block: usize) -> Hadamard {
        self.hadamards[block]
    }

    pub fn offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn labels(&self) -> Vec<OutputLabel> {
        self.hadamards
            .iter()
            .enumerate()
            .flat_map(|(j, h)| (0..h.order()).map(move |i| OutputLabel { block: j, index: i }))
            .collect()
    }

    /// Hadamard row assigned to `x`.
    pub fn row_of(&self, x: usize) -> usize {
        self.partition.position(x) + 1
    }

    /// `i in S_x`, with `i` indexing outputs inside the block of `x`.
    #[inline]
    pub fn in_plus_set(&self, x: usize, i: usize) -> bool {
        let j = self.partition.block_of(x);
        self.hadamards[j].is_plus(self.row_of(x), i)
    }

    pub fn plus_set(&self, x: usize) -> Vec<usize> {
        let j = self.partition.block_of(x);
        (0..self.block_order(j)).filter(|&i| self.in_plus_set(x, i)).collect()
    }
}

/// The block-structured Hadamard-Response mechanism. With a single block
/// this is plain Hadamard Response under classical LDP.
#[derive(Clone, Debug, PartialEq)]
pub struct BsHadamardResponse {
    layout: BsHrLayout,
    eps: f64,
}

impl BsHadamardResponse {
    pub fn new(partition: &Partition, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(BsHadamardResponse {
            layout: BsHrLayout::new(partition),
            eps,
        })
    }

    pub fn layout(&self) -> &BsHrLayout {
        &self.layout
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn channel(&self) -> Result<Channel> {
        let l = &self.layout;
        let e = self.eps.exp();
        let k_out = l.output_size();
        let mut entries = vec![0.0; l.k() * k_out];
        for x in 0..l.k() {
            let j = l.partition.block_of(x);
            let kj = l.block_order(j) as f64;
            let high = 2.0 * e / (kj * (1.0 + e));
            let low = 2.0 / (kj * (1.0 + e));
            let start = x * k_out + l.offset(j);
            for i in 0..l.block_order(j) {
                entries[start + i] = if l.in_plus_set(x, i) { high } else { low };
            }
        }
        Channel::from_flat(l.k(), k_out, entries)?.with_labels(l.labels())
    }
}

impl Privatizer for BsHadamardResponse {
    fn input_size(&self) -> usize {
        self.layout.k()
    }

    fn output_size(&self) -> usize {
        self.layout.output_size()
    }

    fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Result<usize> {
        let l = &self.layout;
        check_index(x, l.k())?;
        let j = l.partition.block_of(x);
        let e = self.eps.exp();
        let want_plus = rng.gen::<f64>() * (e + 1.0) < e;
        Ok(l.offset(j) + sample_hadamard_half(l.hadamards[j], l.row_of(x), want_plus, rng))
    }
}

/// Dense high-low Hadamard-Response channel.
pub fn hlldp_hr_channel(a: &SensitiveSet, eps: f64) -> Result<Channel> {
    HlHadamardResponse::new(a, eps)?.channel()
}

/// Dense block Hadamard-Response channel, outputs labelled `(block, index)`.
pub fn bsldp_hr_channel(partition: &Partition, eps: f64) -> Result<Channel> {
    BsHadamardResponse::new(partition, eps)?.channel()
}
