//! Sparse symmetric matrices and SPD solves, backed by faer's sparse Cholesky.

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Symmetric matrix accumulated from entries; duplicates are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SymmetricMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `value` at `(i, j)` and, off the diagonal, at `(j, i)`.
    pub fn add_sym(&mut self, i: usize, j: usize, value: f64) {
        self.entries.push((i, j, value));
        if i != j {
            self.entries.push((j, i, value));
        }
    }

    pub fn add_diag(&mut self, i: usize, value: f64) {
        self.entries.push((i, i, value));
    }

    /// Row-major dense copy, entries summed in insertion order.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.dim]; self.dim];
        for &(i, j, v) in &self.entries {
            m[i][j] += v;
        }
        m
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    /// Restriction to the leading `k` rows and columns.
    pub fn leading_block(&self, k: usize) -> Self {
        Self {
            dim: k,
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|&(i, j, _)| i < k && j < k)
                .collect(),
        }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self
            .entries
            .iter()
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.dim, self.dim, &triplets)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))
    }

    /// Cholesky factorization; fails with [`Error::NotPositiveDefinite`].
    pub fn cholesky(&self) -> Result<Cholesky> {
        if self.dim == 0 {
            return Ok(Cholesky { factor: None, dim: 0 });
        }
        let a = self.to_faer()?;
        let factor = a
            .sp_cholesky(Side::Lower)
            .map_err(|_| Error::NotPositiveDefinite)?;
        Ok(Cholesky {
            factor: Some(factor),
            dim: self.dim,
        })
    }

    /// Ascending eigenvalues of the dense copy.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let dense = self.to_dense();
        let m = Mat::<f64>::from_fn(self.dim, self.dim, |i, j| dense[i][j]);
        let mut ev = m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }
}

pub struct Cholesky {
    factor: Option<faer::sparse::linalg::solvers::Llt<usize, f64>>,
    dim: usize,
}

impl Cholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.dim, "right-hand side has the wrong length");
        match &self.factor {
            None => Vec::new(),
            Some(llt) => {
                let b = Mat::<f64>::from_fn(self.dim, 1, |i, _| rhs[i]);
                let x = llt.solve(&b);
                (0..self.dim).map(|i| x[(i, 0)]).collect()
            }
        }
    }
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        let mut a = SymmetricMatrix::new(4);
        for i in 0..4 {
            a.add_diag(i, 4.0);
            if i + 1 < 4 {
                a.add_sym(i, i + 1, -1.0);
            }
        }
        let x = a.cholesky().unwrap().solve(&[0.0, 1.0, 2.0, 3.0]);
        let r = a.apply(&x);
        for (ri, bi) in r.iter().zip([0.0, 1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-14);
        }
        let ev = a.eigenvalues().unwrap();
        assert!((ev[0] - (4.0 - 2.0 * (std::f64::consts::PI / 5.0).cos())).abs() < 1e-12);
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = SymmetricMatrix::new(2);
        a.add_diag(0, 1.0);
        a.add_diag(1, -1.0);
        assert!(matches!(a.cholesky(), Err(Error::NotPositiveDefinite)));
    }
}
