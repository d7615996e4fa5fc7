//! Privacy matrices `E = (eps_{x,x'})`.

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{check_len, invalid, Error, Result};
use crate::partition::{Partition, SensitiveSet};

/// `k x k` matrix of pairwise budgets with a zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PrivacyMatrixRepr", into = "PrivacyMatrixRepr")]
pub struct PrivacyMatrix {
    k: usize,
    eps: Vec<Budget>,
}

#[derive(Serialize, Deserialize)]
struct PrivacyMatrixRepr {
    k: usize,
    eps: Vec<Vec<Budget>>,
}

impl TryFrom<PrivacyMatrixRepr> for PrivacyMatrix {
    type Error = Error;

    fn try_from(r: PrivacyMatrixRepr) -> Result<Self> {
        check_len(r.k, r.eps.len())?;
        PrivacyMatrix::from_rows(r.eps)
    }
}

impl From<PrivacyMatrix> for PrivacyMatrixRepr {
    fn from(m: PrivacyMatrix) -> Self {
        PrivacyMatrixRepr {
            k: m.k,
            eps: m.eps.chunks(m.k).map(<[Budget]>::to_vec).collect(),
        }
    }
}

fn positive(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!("eps must be positive and finite, got {eps}")));
    }
    Ok(())
}

impl PrivacyMatrix {
    pub fn from_rows(rows: Vec<Vec<Budget>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(invalid("empty privacy matrix"));
        }
        let mut eps = Vec::with_capacity(k * k);
        for (x, row) in rows.into_iter().enumerate() {
            check_len(k, row.len())?;
            if row[x] != Budget::ZERO {
                return Err(invalid(format!("diagonal entry {x} is {}, expected 0", row[x])));
            }
            eps.extend(row);
        }
        Ok(PrivacyMatrix { k, eps })
    }

    /// Builds a matrix from `f(x, x')` for off-diagonal pairs.
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> Budget) -> Self {
        let mut eps = Vec::with_capacity(k * k);
        for x in 0..k {
            for xp in 0..k {
                eps.push(if x == xp { Budget::ZERO } else { f(x, xp) });
            }
        }
        PrivacyMatrix { k, eps }
    }

    /// Classical eps-LDP.
    pub fn uniform(k: usize, eps: f64) -> Result<Self> {
        positive(eps)?;
        Ok(Self::from_fn(k, |_, _| Budget::Finite(eps)))
    }

    /// High-low model: rows of sensitive symbols carry `eps`, all others are
    /// unbounded.
    pub fn high_low(a: &SensitiveSet, eps: f64) -> Result<Self> {
        positive(eps)?;
        Ok(Self::from_fn(a.k(), |x, _| {
            if a.contains(x) {
                Budget::Finite(eps)
            } else {
                Budget::Unbounded
            }
        }))
    }

    /// Block-structured model: `eps` within a block, unbounded across blocks.
    pub fn block_structured(partition: &Partition, eps: f64) -> Result<Self> {
        positive(eps)?;
        Ok(Self::from_fn(partition.k(), |x, xp| {
            if partition.same_block(x, xp) {
                Budget::Finite(eps)
            } else {
                Budget::Unbounded
            }
        }))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, x: usize, xp: usize) -> Budget {
        self.eps[x * self.k + xp]
    }

    /// All `(i, j, l)` with `eps_{i,j} > eps_{i,l} + eps_{l,j}`.
    pub fn validate_triangle(&self) -> Vec<(usize, usize, usize)> {
        let k = self.k;
        let mut out = Vec::new();
        for i in 0..k {
            for j in 0..k {
                let direct = self.get(i, j);
                for l in 0..k {
                    if direct > self.get(i, l) + self.get(l, j) {
                        out.push((i, j, l));
                    }
                }
            }
        }
        out
    }

    /// Entrywise `self <= other + tol`.
    pub fn dominated_by(&self, other: &PrivacyMatrix, tol: f64) -> bool {
        self.k == other.k && self.eps.iter().zip(&other.eps).all(|(a, b)| a.within(*b, tol))
    }

    /// Entrywise saturating sum.
    pub fn sum(&self, other: &PrivacyMatrix) -> Result<PrivacyMatrix> {
        check_len(self.k, other.k)?;
        Ok(PrivacyMatrix {
            k: self.k,
            eps: self.eps.iter().zip(&other.eps).map(|(a, b)| *a + *b).collect(),
        })
    }
}
