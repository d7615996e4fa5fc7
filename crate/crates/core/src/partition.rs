//! Partitions of the domain into blocks, and sensitive sets.

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};

/// Assignment of every symbol in `0..k` to one of `m` non-empty blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRepr", into = "PartitionRepr")]
pub struct Partition {
    block_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    position: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    k: usize,
    block_of: Vec<usize>,
}

impl TryFrom<PartitionRepr> for Partition {
    type Error = Error;

    fn try_from(r: PartitionRepr) -> Result<Self> {
        crate::error::check_len(r.k, r.block_of.len())?;
        Partition::new(r.block_of)
    }
}

impl From<Partition> for PartitionRepr {
    fn from(p: Partition) -> Self {
        PartitionRepr {
            k: p.k(),
            block_of: p.block_of,
        }
    }
}

impl Partition {
    /// Block ids must cover `0..m` with no empty block.
    pub fn new(block_of: Vec<usize>) -> Result<Self> {
        if block_of.is_empty() {
            return Err(Error::InvalidPartition("empty domain".into()));
        }
        let m = block_of.iter().max().map_or(0, |b| b + 1);
        let mut members = vec![Vec::new(); m];
        let mut position = vec![0; block_of.len()];
        for (x, &b) in block_of.iter().enumerate() {
            position[x] = members[b].len();
            members[b].push(x);
        }
        if let Some(j) = members.iter().position(Vec::is_empty) {
            return Err(Error::InvalidPartition(format!("block {j} is empty")));
        }
        Ok(Partition {
            block_of,
            members,
            position,
        })
    }

    /// Contiguous blocks with the given sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::InvalidPartition("block sizes must be positive".into()));
        }
        let block_of = sizes
            .iter()
            .enumerate()
            .flat_map(|(j, &s)| std::iter::repeat_n(j, s))
            .collect();
        Partition::new(block_of)
    }

    /// A single block holding every symbol.
    pub fn single(k: usize) -> Result<Self> {
        Partition::new(vec![0; k])
    }

    pub fn k(&self) -> usize {
        self.block_of.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.members.len()
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.block_of[x]
    }

    /// Rank of `x` among the members of its block (members sorted by index).
    pub fn position(&self, x: usize) -> usize {
        self.position[x]
    }

    pub fn members(&self, block: usize) -> &[usize] {
        &self.members[block]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn sum_sq_sizes(&self) -> usize {
        self.members.iter().map(|b| b.len() * b.len()).sum()
    }

    pub fn max_size(&self) -> usize {
        self.members.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn same_block(&self, x: usize, y: usize) -> bool {
        self.block_of[x] == self.block_of[y]
    }
}

/// Sensitive symbols of a high-low model, canonically the prefix `0..s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveSet {
    k: usize,
    s: usize,
}

impl SensitiveSet {
    pub fn new(k: usize, s: usize) -> Result<Self> {
        if s > k {
            return Err(Error::InvalidParameter(format!("s = {s} exceeds k = {k}")));
        }
        Ok(SensitiveSet { k, s })
    }

    /// Relabels an arbitrary sensitive subset to the canonical prefix.
    ///
    /// Returns the set and `relabel`, where `relabel[user_label]` is the
    /// canonical symbol: sensitive labels first in the order given, then the
    /// remaining labels in increasing order.
    pub fn canonicalize(k: usize, members: &[usize]) -> Result<(Self, Vec<usize>)> {
        let mut relabel = vec![usize::MAX; k];
        for (next, &x) in members.iter().enumerate() {
            check_index(x, k)?;
            if relabel[x] != usize::MAX {
                return Err(Error::InvalidParameter(format!("duplicate sensitive symbol {x}")));
            }
            relabel[x] = next;
        }
        for (r, next) in relabel.iter_mut().filter(|r| **r == usize::MAX).zip(members.len()..) {
            *r = next;
        }
        Ok((SensitiveSet::new(k, members.len())?, relabel))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn contains(&self, x: usize) -> bool {
        x < self.s
    }

    pub fn members(&self) -> std::ops::Range<usize> {
        0..self.s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_follow_index_order() {
        let p = Partition::new(vec![1, 0, 1, 0, 1]).unwrap();
        assert_eq!(p.num_blocks(), 2);
        assert_eq!(p.members(1), &[0, 2, 4]);
        assert_eq!(p.position(4), 2);
        assert_eq!(p.sizes(), vec![2, 3]);
        assert_eq!(p.sum_sq_sizes(), 13);
    }

    #[test]
    fn rejects_empty_block() {
        assert!(Partition::new(vec![0, 2]).is_err());
        assert!(Partition::from_sizes(&[2, 0]).is_err());
        assert!(Partition::new(vec![]).is_err());
    }

    #[test]
    fn canonical_relabeling() {
        let (a, relabel) = SensitiveSet::canonicalize(5, &[3, 1]).unwrap();
        assert_eq!(a.s(), 2);
        assert_eq!(relabel, vec![2, 1, 3, 0, 4]);
        assert!(SensitiveSet::canonicalize(3, &[1, 1]).is_err());
        assert!(SensitiveSet::canonicalize(3, &[3]).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let p = Partition::from_sizes(&[2, 1]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"k":3,"block_of":[0,0,1]}"#);
        assert_eq!(serde_json::from_str::<Partition>(&s).unwrap(), p);
    }
}
