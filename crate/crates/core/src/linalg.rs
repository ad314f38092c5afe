//! Symmetric sparse storage and the lowest-eigenpair solvers.

use crate::error::{Error, Result};
use crate::junction::dense_lowest;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Real symmetric linear operator acting on blocks of column vectors.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    fn diagonal(&self) -> Vec<f64>;
    /// Upper bound on the spectral norm.
    fn norm_bound(&self) -> f64;
    fn to_dense(&self) -> DMatrix<f64>;
}

/// Symmetric operator in compressed-row form. Both triangles are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists. Duplicates are summed and
    /// entries with `|value| <= drop` are removed.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, f64)>>, drop: f64) -> Self {
        assert_eq!(rows.len(), dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = 0.0;
                while i < row.len() && row[i].0 == c {
                    v += row[i].1;
                    i += 1;
                }
                if v.abs() > drop {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { dim, row_ptr, cols, vals }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
            .collect();
        Self::from_rows(m.nrows(), rows, 0.0)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.dim)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Row `i` of `self * x` accumulated into `out` (length `x.ncols()`), `xt = xᵀ`.
    pub(crate) fn row_times(&self, i: usize, xt: &[f64], b: usize, out: &mut [f64]) {
        for (j, v) in self.row(i) {
            let src = &xt[j * b..(j + 1) * b];
            for (o, s) in out.iter_mut().zip(src) {
                *o += v * s;
            }
        }
    }

    /// `y += alpha * A x` on plain slices; `A` need not be symmetric.
    pub fn mul_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            *out += alpha * acc;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }
}

impl SymmetricOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    fn norm_bound(&self) -> f64 {
        (0..self.dim).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let b = x.ncols();
        let xt = x.transpose();
        let mut yt = DMatrix::zeros(b, self.dim);
        // rows are independent, so the parallel split is deterministic
        yt.as_mut_slice().par_chunks_mut(b).enumerate().for_each(|(i, out)| self.row_times(i, xt.as_slice(), b, out));
        yt.transpose()
    }
}

/// Eigensolver selection and thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Dimensions up to this use dense diagonalization.
    pub dense_threshold: usize,
    /// Residual target relative to the norm bound.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Diagonal (Davidson) preconditioning of the Krylov expansion.
    pub precondition: bool,
    pub force: Option<SolverKind>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { dense_threshold: 600, tolerance: 1e-10, max_iterations: 4000, precondition: true, force: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Dense,
    Iterative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub energies: Vec<f64>,
    /// Columns are eigenvectors, phase-fixed.
    pub vectors: Option<DMatrix<f64>>,
    /// `‖Hv - Ev‖` per pair.
    pub residuals: Vec<f64>,
    pub norm_bound: f64,
    pub solver: SolverKind,
    pub iterations: usize,
}

impl EigenResult {
    pub fn max_relative_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0_f64, |a, &r| a.max(r)) / self.norm_bound.max(f64::MIN_POSITIVE)
    }
}

fn residual_norms<O: SymmetricOperator + ?Sized>(h: &O, energies: &[f64], vectors: &DMatrix<f64>) -> Vec<f64> {
    let hv = h.apply(vectors);
    (0..energies.len()).map(|i| (hv.column(i) - vectors.column(i) * energies[i]).norm()).collect()
}

/// The `k` smallest eigenpairs of a symmetric operator.
pub fn lowest_eigs<O: SymmetricOperator + ?Sized>(h: &O, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(crate::error::invalid("k", format!("need 1 <= k <= dimension {n}, got {k}")));
    }
    let kind = opts.force.unwrap_or(if n <= opts.dense_threshold { SolverKind::Dense } else { SolverKind::Iterative });
    let norm = h.norm_bound();
    match kind {
        SolverKind::Dense => {
            let (energies, vectors) = dense_lowest(h.to_dense(), k, "dense eigensolver")?;
            let residuals = residual_norms(h, &energies, &vectors);
            Ok(EigenResult { energies, vectors: Some(vectors), residuals, norm_bound: norm, solver: kind, iterations: 0 })
        }
        SolverKind::Iterative => block_davidson(h, k, opts, norm),
    }
}

/// Orthogonalizes the columns of `w` against `basis` (two passes) and among
/// themselves; returns only the columns that survive.
fn orthogonalize(basis: &DMatrix<f64>, used: usize, w: DMatrix<f64>, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    let v = basis.columns(0, used);
    for col in w.column_iter() {
        let mut x: DVector<f64> = col.into_owned();
        let start = x.norm();
        if start == 0.0 {
            continue;
        }
        let mut tries = 0;
        loop {
            for _ in 0..2 {
                let c = v.transpose() * &x;
                x -= v * c;
                for q in &out {
                    let d = q.dot(&x);
                    x.axpy(-d, q, 1.0);
                }
            }
            let nrm = x.norm();
            if nrm > 1e-8 * start {
                out.push(x / nrm);
                break;
            }
            tries += 1;
            if tries > 2 {
                break;
            }
            // direction already spanned: replace by a random one
            x = DVector::from_fn(basis.nrows(), |_, _| rng.random::<f64>() - 0.5);
        }
    }
    out
}

fn block_davidson<O: SymmetricOperator + ?Sized>(h: &O, k: usize, opts: &SolverOptions, norm: f64) -> Result<EigenResult> {
    let n = h.dim();
    let block = (k + 2).min(n);
    let max_basis = (6 * block).max(k + 40).min(n);
    let keep = (2 * block).min(max_basis - block).max(k);
    let diag = h.diagonal();
    let target = opts.tolerance * norm;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a6c_696e_65);

    // start from unit vectors on the lowest diagonal entries, slightly mixed
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    let mut start = DMatrix::from_fn(n, block, |_, _| 1e-3 * (rng.random::<f64>() - 0.5));
    for (c, &i) in order.iter().take(block).enumerate() {
        start[(i, c)] += 1.0;
    }

    let mut v = DMatrix::zeros(n, max_basis);
    let mut hv = DMatrix::zeros(n, max_basis);
    let mut used = 0;
    let mut pending = start;
    let mut last_residuals = vec![f64::INFINITY; k];
    for iter in 0..opts.max_iterations {
        let new = orthogonalize(&v, used, pending, &mut rng);
        if new.is_empty() && used < k {
            return Err(Error::EigenNonConvergence {
                context: "block Davidson".into(),
                report: format!("search space collapsed at size {used}"),
            });
        }
        let add = new.len().min(max_basis - used);
        if add > 0 {
            let block_new = DMatrix::from_columns(&new[..add]);
            let h_new = h.apply(&block_new);
            v.columns_mut(used, add).copy_from(&block_new);
            hv.columns_mut(used, add).copy_from(&h_new);
            used += add;
        }

        let vs = v.columns(0, used);
        let hvs = hv.columns(0, used);
        let mut t = vs.transpose() * hvs;
        t = (&t + t.transpose()) * 0.5;
        let (theta, y) = dense_lowest(t, used, "Rayleigh-Ritz")?;
        let want = block.min(used);
        let ritz = vs * y.columns(0, want);
        let hritz = hvs * y.columns(0, want);
        let mut res = hritz - &ritz * DMatrix::from_diagonal(&DVector::from_column_slice(&theta[..want]));
        let norms: Vec<f64> = res.column_iter().map(|c| c.norm()).collect();
        last_residuals = norms[..k.min(want)].to_vec();

        if want >= k && norms[..k].iter().all(|&r| r <= target) {
            let mut vectors = ritz.columns(0, k).into_owned();
            crate::junction::fix_phases(&mut vectors);
            let energies = theta[..k].to_vec();
            let residuals = residual_norms(h, &energies, &vectors);
            return Ok(EigenResult {
                energies,
                vectors: Some(vectors),
                residuals,
                norm_bound: norm,
                solver: SolverKind::Iterative,
                iterations: iter + 1,
            });
        }

        // expansion vectors from unconverged residuals; the preconditioned
        // correction is projected off its Ritz vector (Olsen), which keeps it
        // informative when the operator is close to diagonal
        let floor = 1e-8 * norm.max(1.0);
        for (c, mut col) in res.column_iter_mut().enumerate() {
            if norms[c] <= target {
                col.fill(0.0);
                continue;
            }
            if opts.precondition {
                let x = ritz.column(c);
                let (mut xr, mut xx) = (0.0, 0.0);
                let inv: Vec<f64> = (0..n)
                    .map(|i| {
                        let d = diag[i] - theta[c];
                        1.0 / if d.abs() < floor { floor.copysign(d) } else { d }
                    })
                    .collect();
                for i in 0..n {
                    xr += x[i] * inv[i] * col[i];
                    xx += x[i] * inv[i] * x[i];
                }
                let eps = if xx != 0.0 && xx.is_finite() { xr / xx } else { 0.0 };
                for i in 0..n {
                    col[i] = inv[i] * (col[i] - eps * x[i]);
                }
            }
        }
        pending = res;

        if used + block > max_basis {
            // thick restart on the lowest Ritz vectors
            let keep_now = keep.min(used);
            let nv = vs * y.columns(0, keep_now);
            let nhv = hvs * y.columns(0, keep_now);
            v.columns_mut(0, keep_now).copy_from(&nv);
            hv.columns_mut(0, keep_now).copy_from(&nhv);
            used = keep_now;
        }
    }
    Err(Error::EigenNonConvergence {
        context: "block Davidson".into(),
        report: format!(
            "{} iterations, residuals {:?}, target {target:e}",
            opts.max_iterations, last_residuals
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_sparse(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            rows[i].push((i, i as f64 * 0.05 + rng.random::<f64>()));
            for _ in 0..4 {
                let j = rng.random_range(0..n);
                let x = rng.random::<f64>() - 0.5;
                rows[i].push((j, x));
                rows[j].push((i, x));
            }
        }
        CsrMatrix::from_rows(n, rows, 0.0)
    }

    #[test]
    fn two_by_two() {
        let m = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let r = lowest_eigs(&m, 2, &SolverOptions::default()).unwrap();
        assert!((r.energies[0] + 1.0).abs() < 1e-15 && (r.energies[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_sorted() {
        let d = [3.0, -1.0, 2.0, 0.5, 7.0];
        let m = CsrMatrix::from_rows(5, d.iter().enumerate().map(|(i, &x)| vec![(i, x)]).collect(), 0.0);
        let r = lowest_eigs(&m, 3, &SolverOptions::default()).unwrap();
        assert_eq!(r.energies, vec![-1.0, 0.5, 2.0]);
    }

    #[test]
    fn csr_assembly_sums_and_drops() {
        let m = CsrMatrix::from_rows(2, vec![vec![(1, 1.0), (0, 2.0), (1, 0.5)], vec![(0, 1.5), (1, 1e-20)]], 1e-15);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 1.5);
        assert_eq!(m.max_asymmetry(), 0.0);
    }

    #[test]
    fn iterative_matches_dense() {
        for (n, seed) in [(300, 1), (900, 2)] {
            let m = random_sparse(n, seed);
            let dense = lowest_eigs(&m, 6, &SolverOptions { force: Some(SolverKind::Dense), ..Default::default() }).unwrap();
            for precondition in [true, false] {
                let opts = SolverOptions { force: Some(SolverKind::Iterative), precondition, ..Default::default() };
                let it = lowest_eigs(&m, 6, &opts).unwrap();
                for (a, b) in dense.energies.iter().zip(&it.energies) {
                    assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} {b}");
                }
                assert!(it.max_relative_residual() < 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_levels_are_found() {
        // two copies of the same block: every level is doubly degenerate
        let n = 350;
        let base = random_sparse(n, 5);
        let mut rows = vec![Vec::new(); 2 * n];
        for i in 0..n {
            for (j, v) in base.row(i) {
                rows[i].push((j, v));
                rows[i + n].push((j + n, v));
            }
        }
        let m = CsrMatrix::from_rows(2 * n, rows, 0.0);
        let opts = SolverOptions { force: Some(SolverKind::Iterative), ..Default::default() };
        let r = lowest_eigs(&m, 4, &opts).unwrap();
        let d = lowest_eigs(&base, 2, &SolverOptions::default()).unwrap();
        for (i, e) in r.energies.iter().enumerate() {
            assert!((e - d.energies[i / 2]).abs() < 1e-9);
        }
    }

    #[test]
    fn block_apply_matches_dense_product() {
        let m = random_sparse(50, 9);
        let x = DMatrix::from_fn(50, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        assert!((m.apply(&x) - m.to_dense() * &x).amax() < 1e-12);
    }
}
