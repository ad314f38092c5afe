use crate::linalg::{CsrMatrix, SymmetricOperator};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::sync::Arc;

/// Photon-space factor of a Kronecker term.
#[derive(Clone, Debug)]
pub enum PhotonFactor {
    Sparse(Arc<CsrMatrix>),
    Dense(Arc<DMatrix<f64>>),
    /// Transpose of the shared dense matrix.
    DenseTransposed(Arc<DMatrix<f64>>),
}

impl PhotonFactor {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            PhotonFactor::Sparse(m) => m.get(i, j),
            PhotonFactor::Dense(m) => m[(i, j)],
            PhotonFactor::DenseTransposed(m) => m[(j, i)],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PhotonFactor::Sparse(m) => m.dim(),
            PhotonFactor::Dense(m) | PhotonFactor::DenseTransposed(m) => m.nrows(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            PhotonFactor::Sparse(m) => m.nnz(),
            PhotonFactor::Dense(m) | PhotonFactor::DenseTransposed(m) => m.len(),
        }
    }

    fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        match self {
            PhotonFactor::Sparse(m) => m.row(i).collect(),
            PhotonFactor::Dense(m) => (0..m.ncols()).map(|j| (j, m[(i, j)])).filter(|e| e.1 != 0.0).collect(),
            PhotonFactor::DenseTransposed(m) => (0..m.nrows()).map(|j| (j, m[(j, i)])).filter(|e| e.1 != 0.0).collect(),
        }
    }

    fn max_row_sum(&self) -> f64 {
        match self {
            PhotonFactor::Sparse(m) => (0..m.dim()).map(|i| m.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max),
            PhotonFactor::Dense(m) => m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max),
            PhotonFactor::DenseTransposed(m) => {
                m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
            }
        }
    }

    /// `B X` for a block of columns.
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            PhotonFactor::Sparse(m) => m.apply(x),
            PhotonFactor::Dense(m) => m.as_ref() * x,
            PhotonFactor::DenseTransposed(m) => m.tr_mul(x),
        }
    }
}

/// `diag + Σ_t A_t ⊗ B_t` on the product space junction ⊗ photons.
///
/// Index of `(a, p)` is `a * photon_dim + p`. Each term is symmetric as a
/// whole; the factors individually may be antisymmetric.
#[derive(Clone, Debug)]
pub struct KronOperator {
    pub junction_dim: usize,
    pub photon_dim: usize,
    pub diagonal: Vec<f64>,
    pub terms: Vec<(CsrMatrix, PhotonFactor)>,
}

impl KronOperator {
    /// Explicit entries of row `r`, summed over terms.
    pub fn row_entries(&self, r: usize) -> Vec<(usize, f64)> {
        let p_dim = self.photon_dim;
        let (a, p) = (r / p_dim, r % p_dim);
        let mut out = vec![(r, self.diagonal[r])];
        for (ja, pb) in &self.terms {
            let prow = pb.row_entries(p);
            for (c, x) in ja.row(a) {
                out.extend(prow.iter().map(|&(q, y)| (c * p_dim + q, x * y)));
            }
        }
        out
    }

    /// Largest `|H_ij - H_ji|` of the assembled matrix.
    pub fn max_asymmetry(&self) -> f64 {
        self.to_csr().max_asymmetry()
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let n = self.dim();
        let rows = (0..n).into_par_iter().map(|r| self.row_entries(r)).collect();
        CsrMatrix::from_rows(n, rows, 0.0)
    }

    /// Entries held by the factors (not the expanded product).
    pub fn stored_entries(&self) -> usize {
        self.diagonal.len() + self.terms.iter().map(|(a, b)| a.nnz() + b.nnz()).sum::<usize>()
    }
}

impl SymmetricOperator for KronOperator {
    fn dim(&self) -> usize {
        self.junction_dim * self.photon_dim
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (p_dim, j_dim, b) = (self.photon_dim, self.junction_dim, x.ncols());
        let mut y = DMatrix::from_fn(self.dim(), b, |r, c| self.diagonal[r] * x[(r, c)]);
        if self.terms.is_empty() {
            return y;
        }
        // column c * b + col holds junction slice c of vector col
        let gathered = DMatrix::from_fn(p_dim, j_dim * b, |p, idx| x[((idx / b) * p_dim + p, idx % b)]);
        for (ja, pb) in &self.terms {
            let bx = pb.apply(&gathered);
            for a in 0..j_dim {
                for (c, v) in ja.row(a) {
                    for col in 0..b {
                        let src = bx.column(c * b + col);
                        let mut dst = y.column_mut(col);
                        let mut dst = dst.rows_mut(a * p_dim, p_dim);
                        dst.axpy(v, &src, 1.0);
                    }
                }
            }
        }
        y
    }

    fn diagonal(&self) -> Vec<f64> {
        let p_dim = self.photon_dim;
        let mut d = self.diagonal.clone();
        for (ja, pb) in &self.terms {
            for a in 0..self.junction_dim {
                let x = ja.get(a, a);
                if x != 0.0 {
                    for p in 0..p_dim {
                        d[a * p_dim + p] += x * pb.get(p, p);
                    }
                }
            }
        }
        d
    }

    fn norm_bound(&self) -> f64 {
        let row_sum = |m: &CsrMatrix, i: usize| m.row(i).map(|(_, v)| v.abs()).sum::<f64>();
        let mut bound = self.diagonal.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        for (ja, pb) in &self.terms {
            let a = (0..self.junction_dim).map(|i| row_sum(ja, i)).fold(0.0, f64::max);
            bound += a * pb.max_row_sum();
        }
        bound
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.to_csr().to_dense()
    }
}
