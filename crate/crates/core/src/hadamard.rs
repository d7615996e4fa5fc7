//! Sylvester Hadamard matrices.
//!
//! Entry `(i, j)` (0-based) of `H_K` is `(-1)^popcount(i & j)`, which is the
//! closed form of `H_2m = [[H_m, H_m], [H_m, -H_m]]`. Nothing is stored.

use crate::error::{check_index, invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hadamard {
    order: usize,
}

impl Hadamard {
    pub fn sylvester(order: usize) -> Result<Self> {
        if !order.is_power_of_two() {
            return Err(invalid(format!("Hadamard order must be a power of two, got {order}")));
        }
        Ok(Hadamard { order })
    }

    /// Smallest Sylvester matrix with strictly more than `n` rows.
    pub fn covering(n: usize) -> Self {
        Hadamard {
            order: (n + 1).next_power_of_two(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn is_plus(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.order && col < self.order);
        (row & col).count_ones().is_multiple_of(2)
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> i8 {
        if self.is_plus(row, col) {
            1
        } else {
            -1
        }
    }

    /// Column indices of the `+1` entries of `row`.
    pub fn row_plus_set(&self, row: usize) -> Result<Vec<usize>> {
        check_index(row, self.order)?;
        Ok((0..self.order).filter(|&c| self.is_plus(row, c)).collect())
    }

    pub fn to_dense(&self) -> Vec<Vec<i8>> {
        (0..self.order)
            .map(|r| (0..self.order).map(|c| self.entry(r, c)).collect())
            .collect()
    }
}

/// In-place unnormalized fast Walsh-Hadamard transform in Sylvester order:
/// afterwards `data[r] = sum_c H(r, c) * old[c]`.
pub fn fwht(data: &mut [f64]) {
    let n = data.len();
    assert!(n.is_power_of_two() || n == 0, "fwht length must be a power of two");
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let a = data[i];
                let b = data[i + h];
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recursive(order: usize) -> Vec<Vec<i8>> {
        let mut h = vec![vec![1i8]];
        while h.len() < order {
            let m = h.len();
            let mut next = vec![vec![0i8; 2 * m]; 2 * m];
            for r in 0..m {
                for c in 0..m {
                    next[r][c] = h[r][c];
                    next[r][c + m] = h[r][c];
                    next[r + m][c] = h[r][c];
                    next[r + m][c + m] = -h[r][c];
                }
            }
            h = next;
        }
        h
    }

    #[test]
    fn small_orders() {
        assert_eq!(Hadamard::sylvester(1).unwrap().to_dense(), vec![vec![1]]);
        assert_eq!(
            Hadamard::sylvester(2).unwrap().to_dense(),
            vec![vec![1, 1], vec![1, -1]]
        );
        let h4 = Hadamard::sylvester(4).unwrap();
        assert_eq!(h4.to_dense()[1], vec![1, -1, 1, -1]);
    }

    #[test]
    fn popcount_matches_recursion() {
        for t in 0..=6 {
            let order = 1 << t;
            assert_eq!(Hadamard::sylvester(order).unwrap().to_dense(), recursive(order));
        }
    }

    #[test]
    fn plus_sets() {
        let h2 = Hadamard::sylvester(2).unwrap();
        assert_eq!(h2.row_plus_set(0).unwrap(), vec![0, 1]);
        let h4 = Hadamard::sylvester(4).unwrap();
        assert_eq!(h4.row_plus_set(1).unwrap(), vec![0, 2]);
        assert_eq!(h4.row_plus_set(2).unwrap(), vec![0, 1]);
        assert!(h4.row_plus_set(4).is_err());
    }

    #[test]
    fn rejects_non_power_of_two() {
        for bad in [0, 3, 6, 12] {
            assert!(Hadamard::sylvester(bad).is_err());
        }
    }

    #[test]
    fn covering_order() {
        assert_eq!(Hadamard::covering(1).order(), 2);
        assert_eq!(Hadamard::covering(3).order(), 4);
        assert_eq!(Hadamard::covering(4).order(), 8);
        assert_eq!(Hadamard::covering(7).order(), 8);
    }

    #[test]
    fn fwht_matches_dense_product() {
        let h = Hadamard::sylvester(16).unwrap();
        let v: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut w = v.clone();
        fwht(&mut w);
        for r in 0..16 {
            let direct: f64 = (0..16).map(|c| h.entry(r, c) as f64 * v[c]).sum();
            assert!((direct - w[r]).abs() < 1e-12);
        }
    }
}
