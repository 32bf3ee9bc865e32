//! Small dense helpers that the GP and the targets share.
//!
//! [`PackedCholesky`] stores a lower-triangular factor row by row so that a
//! new observation only appends one row; this is what makes the incremental
//! surrogate update O(n²).

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

/// Lower-triangular Cholesky factor stored as packed rows.
#[derive(Debug, Clone, Default)]
pub struct PackedCholesky {
    data: Vec<f64>,
    n: usize,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl PackedCholesky {
    pub fn new() -> Self {
        Self::default()
    }

    /// Factor the symmetric matrix whose entries are produced by `entry(i, j)`
    /// for `j <= i`. Returns `None` on a non-positive pivot.
    pub fn factor_with<F>(n: usize, mut entry: F) -> Option<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let mut chol = Self {
            data: Vec::with_capacity(row_start(n)),
            n: 0,
        };
        let mut col = Vec::with_capacity(n);
        for i in 0..n {
            col.clear();
            col.extend((0..i).map(|j| entry(i, j)));
            let diag = entry(i, i);
            if !chol.push_row(&col, diag) {
                return None;
            }
        }
        Some(chol)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i && i < self.n);
        self.data[row_start(i) + j]
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let s = row_start(i);
        &self.data[s..s + i + 1]
    }

    /// Extend the factor by one row given the new column of the original
    /// matrix (`cross`, length `n`) and its diagonal entry. On failure the
    /// factor is left untouched and `false` is returned.
    pub fn push_row(&mut self, cross: &[f64], diag: f64) -> bool {
        debug_assert_eq!(cross.len(), self.n);
        let l = self.solve_lower(cross);
        let pivot = diag - l.iter().map(|v| v * v).sum::<f64>();
        if !(pivot > 0.0) || !pivot.is_finite() {
            return false;
        }
        self.data.extend_from_slice(&l);
        self.data.push(pivot.sqrt());
        self.n += 1;
        true
    }

    /// Extend the factor by a block of `q` rows: `cross[r]` is column `r` of
    /// the new off-diagonal block (length `n`) and `block` the new `q × q`
    /// diagonal block, row-major. All-or-nothing like [`Self::push_row`].
    pub fn push_block(&mut self, cross: &[Vec<f64>], block: &[f64]) -> bool {
        let q = cross.len();
        debug_assert_eq!(block.len(), q * q);
        let w = self.solve_lower_many(cross);
        let n0 = self.n;
        let mut tail = Vec::with_capacity(q * (q + 1) / 2);
        for r in 0..q {
            for c in 0..=r {
                let mut v = block[r * q + c] - dot(&w[r], &w[c]);
                for k in 0..c {
                    v -= tail[row_start(r) + k] * tail[row_start(c) + k];
                }
                if c < r {
                    v /= tail[row_start(c) + c];
                } else {
                    if !(v > 0.0) || !v.is_finite() {
                        return false;
                    }
                    v = v.sqrt();
                }
                tail.push(v);
            }
        }
        for r in 0..q {
            self.data.extend_from_slice(&w[r]);
            self.data.extend_from_slice(&tail[row_start(r)..row_start(r) + r + 1]);
        }
        self.n = n0 + q;
        true
    }

    /// Drop rows beyond `n` (used to roll back a partial block extension).
    pub fn truncate(&mut self, n: usize) {
        if n < self.n {
            self.data.truncate(row_start(n));
            self.n = n;
        }
    }

    /// Solve `L z = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut z = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let s: f64 = row[..i].iter().zip(&z).map(|(l, z)| l * z).sum();
            z.push((b[i] - s) / row[i]);
        }
        z
    }

    /// Solve `L Z = B` for several right-hand sides in one pass over `L`.
    pub fn solve_lower_many(&self, bs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut zs: Vec<Vec<f64>> = bs.iter().map(|_| Vec::with_capacity(self.n)).collect();
        for i in 0..self.n {
            let row = self.row(i);
            for (z, b) in zs.iter_mut().zip(bs) {
                debug_assert_eq!(b.len(), self.n);
                let s: f64 = row[..i].iter().zip(z.iter()).map(|(l, z)| l * z).sum();
                z.push((b[i] - s) / row[i]);
            }
        }
        zs
    }

    /// Extend `z`, a solution of `L z = b` over the leading rows, to the
    /// full factor; `tail` holds the entries of `b` for the remaining rows.
    pub fn extend_lower(&self, z: &mut Vec<f64>, tail: &[f64]) {
        debug_assert_eq!(z.len() + tail.len(), self.n);
        for (i, b) in (z.len()..self.n).zip(tail) {
            let row = self.row(i);
            let s: f64 = row[..i].iter().zip(z.iter()).map(|(l, z)| l * z).sum();
            z.push((b - s) / row[i]);
        }
    }

    /// Solve `Lᵀ x = z`.
    pub fn solve_upper(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.n);
        let mut x = z.to_vec();
        for i in (0..self.n).rev() {
            let row = self.row(i);
            x[i] /= row[i];
            let xi = x[i];
            for (xj, l) in x[..i].iter_mut().zip(&row[..i]) {
                *xj -= l * xi;
            }
        }
        x
    }

    /// Solve `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.get(i, i).ln()).sum::<f64>()
    }

    /// Dense lower-triangular copy (row-major `n × n`).
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.resize(self.n, 0.0);
                r
            })
            .collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn block_push_matches_row_pushes() {
        let a = [
            [4.0, 1.0, 0.5, 0.3],
            [1.0, 3.0, 0.2, -0.4],
            [0.5, 0.2, 2.0, 0.1],
            [0.3, -0.4, 0.1, 1.5],
        ];
        let full = PackedCholesky::factor_with(4, |i, j| a[i][j]).unwrap();
        let mut chol = PackedCholesky::factor_with(2, |i, j| a[i][j]).unwrap();
        let cross = vec![vec![a[2][0], a[2][1]], vec![a[3][0], a[3][1]]];
        assert!(chol.push_block(&cross, &[a[2][2], a[2][3], a[3][2], a[3][3]]));
        for i in 0..4 {
            for j in 0..=i {
                assert!((chol.get(i, j) - full.get(i, j)).abs() < 1e-14);
            }
        }
        let many = full.solve_lower_many(&[vec![1.0, 2.0, 3.0, 4.0], vec![-1.0, 0.0, 0.5, 2.0]]);
        assert_eq!(many[1], full.solve_lower(&[-1.0, 0.0, 0.5, 2.0]));
        let mut bad = PackedCholesky::factor_with(2, |i, j| a[i][j]).unwrap();
        assert!(!bad.push_block(&cross, &[-1.0, 0.0, 0.0, 1.0]));
        assert_eq!(bad.len(), 2);
    }

    #[test]
    fn extended_forward_solve_matches_full() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let mut chol = PackedCholesky::factor_with(2, |i, j| a[i][j]).unwrap();
        let b = [1.0, -2.0, 0.7];
        let mut z = chol.solve_lower(&b[..2]);
        assert!(chol.push_row(&[a[2][0], a[2][1]], a[2][2]));
        chol.extend_lower(&mut z, &b[2..]);
        let full = chol.solve_lower(&b);
        for (x, y) in z.iter().zip(&full) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    fn spd(n: usize) -> Vec<Vec<f64>> {
        // A = Bᵀ B + n I with a fixed B
        let b: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| ((i * 7 + j * 3) % 5) as f64 - 2.0).collect())
            .collect();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let s: f64 = (0..n).map(|k| b[k][i] * b[k][j]).sum();
                        s + if i == j { n as f64 } else { 0.0 }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn reconstructs_matrix() {
        let a = spd(6);
        let c = PackedCholesky::factor_with(6, |i, j| a[i][j]).unwrap();
        let l = c.to_dense();
        for i in 0..6 {
            for j in 0..6 {
                let r: f64 = (0..6).map(|k| l[i][k] * l[j][k]).sum();
                assert!((r - a[i][j]).abs() <= 1e-10 * a[i][j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn solve_matches_matrix_product() {
        let a = spd(5);
        let c = PackedCholesky::factor_with(5, |i, j| a[i][j]).unwrap();
        let b = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let x = c.solve(&b);
        for i in 0..5 {
            let r: f64 = (0..5).map(|j| a[i][j] * x[j]).sum();
            assert!((r - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn failed_push_leaves_factor_intact() {
        let mut c = PackedCholesky::factor_with(1, |_, _| 1.0).unwrap();
        assert!(!c.push_row(&[1.0], 1.0));
        assert_eq!(c.len(), 1);
        assert!(c.push_row(&[0.5], 1.0));
        assert_eq!(c.len(), 2);
    }
}
