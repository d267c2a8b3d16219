//! Exact share matrices for idealized (untruncated) averaging dynamics.
//!
//! The share matrix of a round assigns weight `1/d` to every incident edge
//! and keeps the remainder on the diagonal. With `d` at least twice the
//! maximum degree every entry stays nonnegative and each matrix is symmetric
//! and doubly stochastic.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};

use crate::graph::{ConstituentGraph, GraphError};

/// Default vertex-count cap for exact conductance enumeration.
pub const CONDUCTANCE_CAP: usize = 16;

/// Dense exact matrix indexed `entry[row][col]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareMatrix {
    n: usize,
    entries: Vec<Vec<BigRational>>,
}

impl ShareMatrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![vec![BigRational::zero(); n]; n];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = BigRational::one();
        }
        ShareMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> &BigRational {
        &self.entries[row][col]
    }

    /// Matrix product `self * rhs`, in that order.
    pub fn mul(&self, rhs: &ShareMatrix) -> ShareMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut entries = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            for k in 0..n {
                if self.entries[i][k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if rhs.entries[k][j].is_zero() {
                        continue;
                    }
                    entries[i][j] += &self.entries[i][k] * &rhs.entries[k][j];
                }
            }
        }
        ShareMatrix { n, entries }
    }

    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.entries[i][j] != self.entries[j][i] {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        let one = BigRational::one();
        for i in 0..self.n {
            if self.entries[i].iter().any(|e| e < &BigRational::zero()) {
                return false;
            }
            let row: BigRational = self.entries[i].iter().sum();
            if row != one {
                return false;
            }
            let col: BigRational = (0..self.n).map(|r| self.entries[r][i].clone()).sum();
            if col != one {
                return false;
            }
        }
        true
    }

    /// Row-vector application: `out[j] = sum_i vec[i] * entry[i][j]`.
    pub fn apply_row(&self, vec: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(vec.len(), self.n);
        let mut out = vec![BigRational::zero(); self.n];
        for i in 0..self.n {
            if vec[i].is_zero() {
                continue;
            }
            for j in 0..self.n {
                if !self.entries[i][j].is_zero() {
                    out[j] += &vec[i] * &self.entries[i][j];
                }
            }
        }
        out
    }

    /// Exact conductance: the minimum over nonempty sets `S` with
    /// `|S| <= n/2` of `(1/|S|) * sum of entries leaving S`.
    pub fn conductance(&self) -> Result<BigRational, GraphError> {
        self.conductance_with_cap(CONDUCTANCE_CAP)
    }

    pub fn conductance_with_cap(&self, cap: usize) -> Result<BigRational, GraphError> {
        let n = self.n;
        if n < 2 {
            return Err(GraphError::TooSmall);
        }
        if n > cap {
            return Err(GraphError::EnumerationCap { n, cap });
        }
        let mut best: Option<BigRational> = None;
        for set in 1u64..(1u64 << n) {
            let size = set.count_ones() as usize;
            if size > n / 2 {
                continue;
            }
            let mut flow = BigRational::zero();
            for u in 0..n {
                if set & (1 << u) == 0 {
                    continue;
                }
                for v in 0..n {
                    if set & (1 << v) == 0 {
                        flow += &self.entries[u][v];
                    }
                }
            }
            let cand = flow / BigRational::from(BigInt::from(size));
            if best.as_ref().map_or(true, |b| &cand < b) {
                best = Some(cand);
            }
        }
        Ok(best.expect("n >= 2 guarantees a candidate"))
    }
}

/// Share matrix of one round with common denominator `d`, which must be at
/// least twice the maximum degree so diagonals stay at least one half.
pub fn share_matrix(g: &ConstituentGraph, d: u64) -> Result<ShareMatrix, GraphError> {
    let n = g.n();
    let max_degree = g.max_degree();
    if (d as u128) < 2 * max_degree as u128 {
        return Err(GraphError::DenominatorTooSmall { d, max_degree });
    }
    let dd = BigInt::from(d);
    let off = BigRational::new(BigInt::one(), dd.clone());
    let mut entries = vec![vec![BigRational::zero(); n]; n];
    for u in 0..n {
        let deg = g.degree(u);
        entries[u][u] = BigRational::new(BigInt::from(d - deg as u64), dd.clone());
        for v in g.neighbors(u) {
            entries[u][v as usize] = off.clone();
        }
    }
    Ok(ShareMatrix { n, entries })
}

/// Product of per-round share matrices in round order: the matrix taking the
/// distribution at the start of the window to the distribution at its end
/// under row-vector application.
pub fn window_product(mats: &[ShareMatrix]) -> ShareMatrix {
    assert!(!mats.is_empty());
    let mut acc = mats[0].clone();
    for m in &mats[1..] {
        acc = acc.mul(m);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn k2_share_matrix_entries() {
        let g = ConstituentGraph::clique(2);
        let p = share_matrix(&g, 4).unwrap();
        assert_eq!(*p.entry(0, 0), rat(3, 4));
        assert_eq!(*p.entry(0, 1), rat(1, 4));
        assert_eq!(*p.entry(1, 0), rat(1, 4));
        assert_eq!(*p.entry(1, 1), rat(3, 4));
        assert!(p.is_symmetric());
        assert!(p.is_doubly_stochastic());
    }

    #[test]
    fn k2_window_square() {
        let g = ConstituentGraph::clique(2);
        let p = share_matrix(&g, 4).unwrap();
        let sq = window_product(&[p.clone(), p]);
        assert_eq!(*sq.entry(0, 0), rat(5, 8));
        assert_eq!(*sq.entry(0, 1), rat(3, 8));
        assert!(sq.is_doubly_stochastic());
    }

    #[test]
    fn k2_conductance() {
        let g = ConstituentGraph::clique(2);
        let p = share_matrix(&g, 4).unwrap();
        assert_eq!(p.conductance().unwrap(), rat(1, 4));
    }

    #[test]
    fn denominator_below_twice_degree_rejected() {
        let g = ConstituentGraph::path(4);
        assert!(matches!(
            share_matrix(&g, 3),
            Err(GraphError::DenominatorTooSmall { d: 3, max_degree: 2 })
        ));
        assert!(share_matrix(&g, 4).is_ok());
    }

    #[test]
    fn row_application_preserves_mass() {
        let g = ConstituentGraph::path(4);
        let p = share_matrix(&g, 8).unwrap();
        let v = vec![rat(1, 1), rat(0, 1), rat(0, 1), rat(0, 1)];
        let w = p.apply_row(&v);
        let total: BigRational = w.iter().sum();
        assert_eq!(total, rat(1, 1));
        assert_eq!(w[0], rat(7, 8));
        assert_eq!(w[1], rat(1, 8));
    }

    #[test]
    fn conductance_cap_enforced() {
        let p = ShareMatrix::identity(18);
        assert!(p.conductance().is_err());
    }
}
