//! Brute-force references: bare-basis assemblies of the circuit Hamiltonians
//! and closed-form normal-mode spectra of the quadratic (E_J = 0) limits.
//!
//! Nothing here reuses the polaron-frame assembly; only the circuit data and
//! the generic eigensolver are shared.

use crate::circuit::{build_matrices, charge_gauge_bath, line_normal_modes, BathModes, Boundary, CircuitSpec};
use crate::error::{invalid, Error, Result};
use crate::linalg::{lowest_eigs, CsrMatrix, EigenResult, SolverOptions};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default ceiling on the bare-basis dimension.
pub const DEFAULT_MAX_DIM: usize = 20_000;

/// Per-mode Fock boxes times a junction window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BareBasisSpec {
    /// Charge window half-width (charge circuit) or number of oscillator
    /// states (flux circuit).
    pub junction_cutoff: usize,
    /// Highest occupation kept per mode.
    pub fock_cutoffs: Vec<usize>,
    pub max_dim: usize,
}

impl BareBasisSpec {
    pub fn uniform(junction_cutoff: usize, fock: usize, n_modes: usize) -> Self {
        BareBasisSpec { junction_cutoff, fock_cutoffs: vec![fock; n_modes], max_dim: DEFAULT_MAX_DIM }
    }

    pub fn photon_dim(&self) -> usize {
        self.fock_cutoffs.iter().map(|f| f + 1).product()
    }

    fn check(&self, junction_dim: usize, n_modes: usize) -> Result<()> {
        if self.fock_cutoffs.len() != n_modes {
            return Err(invalid("fock_cutoffs", format!("need {n_modes} entries, got {}", self.fock_cutoffs.len())));
        }
        let dim = junction_dim * self.photon_dim();
        if dim > self.max_dim {
            return Err(Error::BasisOverflow { what: "bare reference basis", size: dim, max: self.max_dim });
        }
        Ok(())
    }
}

/// Mixed-radix photon index over the Fock boxes.
struct FockBox {
    radix: Vec<usize>,
    stride: Vec<usize>,
    len: usize,
}

impl FockBox {
    fn new(cutoffs: &[usize]) -> Self {
        let radix: Vec<usize> = cutoffs.iter().map(|c| c + 1).collect();
        let mut stride = vec![1; radix.len()];
        for k in (0..radix.len().saturating_sub(1)).rev() {
            stride[k] = stride[k + 1] * radix[k + 1];
        }
        let len = radix.iter().product();
        FockBox { radix, stride, len }
    }

    fn occupation(&self, p: usize, k: usize) -> usize {
        (p / self.stride[k]) % self.radix[k]
    }

    /// Index with mode `k` moved by `delta`, if still inside the box.
    fn shifted(&self, p: usize, k: usize, delta: i64) -> Option<usize> {
        let n = self.occupation(p, k) as i64 + delta;
        (n >= 0 && (n as usize) < self.radix[k]).then(|| (p as i64 + delta * self.stride[k] as i64) as usize)
    }
}

/// Open-ended (charge) circuit in the bare basis `|N⟩ ⊗ |n_1 … n_M⟩`.
///
/// The Fock states are rephased by `i^n`, which turns the coupling
/// `i(N - ν) Σ g (a† - a)` into the real form `(N - ν) Σ g (a + a†)`.
pub fn dense_ed_charge(spec: &CircuitSpec, bare: &BareBasisSpec, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    if spec.boundary != Boundary::OpenEnd {
        return Err(Error::WrongBoundary("charge reference needs an open-ended line".into()));
    }
    let bath = charge_gauge_bath(&line_normal_modes(spec)?, spec.e_c)?;
    let n_j = 2 * bare.junction_cutoff + 1;
    bare.check(n_j, bath.len())?;
    let fock = FockBox::new(&bare.fock_cutoffs);
    let center = spec.bias.round() as i64;
    let p_dim = fock.len;
    let mut rows = Vec::with_capacity(n_j * p_dim);
    for a in 0..n_j {
        let q = (center + a as i64 - bare.junction_cutoff as i64) as f64 - spec.bias;
        for p in 0..p_dim {
            let mut row = Vec::new();
            let mut diag = 4.0 * spec.e_c * q * q;
            for m in 0..bath.len() {
                let n = fock.occupation(p, m);
                diag += bath.frequencies[m] * n as f64;
                if let Some(up) = fock.shifted(p, m, 1) {
                    row.push((a * p_dim + up, q * bath.couplings[m] * ((n + 1) as f64).sqrt()));
                }
                if let Some(dn) = fock.shifted(p, m, -1) {
                    row.push((a * p_dim + dn, q * bath.couplings[m] * (n as f64).sqrt()));
                }
            }
            row.push((a * p_dim + p, diag));
            if a > 0 {
                row.push(((a - 1) * p_dim + p, -0.5 * spec.e_j));
            }
            if a + 1 < n_j {
                row.push(((a + 1) * p_dim + p, -0.5 * spec.e_j));
            }
            rows.push(row);
        }
    }
    lowest_eigs(&CsrMatrix::from_rows(n_j * p_dim, rows, 0.0), k, opts)
}

/// Junction operators in the oscillator basis of `4E_C N² + (e_l/2) φ²`:
/// `(ħω_0 (n + 1/2), φ, ∂_φ, cos(φ + 2π bias))`, first `size` states.
///
/// The cosine is a matrix function of the position operator in an enlarged
/// window whose eigenvectors are the Gauss–Hermite nodes.
fn oscillator_junction(e_l: f64, e_c: f64, bias: f64, size: usize) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let omega = (8.0 * e_l * e_c).sqrt();
    let zpf = (2.0 * e_c / e_l).powf(0.25);
    let big = 2 * size + 80;
    let ladder = |n: usize| DMatrix::from_fn(n, n, |i, j| if i == j + 1 { (i as f64).sqrt() } else { 0.0 });
    let a_dag = ladder(big);
    let x = (&a_dag + a_dag.transpose()) * zpf;
    let eig = SymmetricEigen::new(x.clone());
    let cos_nodes = DMatrix::from_diagonal(&eig.eigenvalues.map(|p| (p + 2.0 * PI * bias).cos()));
    let cos_big = &eig.eigenvectors * cos_nodes * eig.eigenvectors.transpose();
    let cos = cos_big.view((0, 0), (size, size)).into_owned();
    let phi = x.view((0, 0), (size, size)).into_owned();
    let small = ladder(size);
    let deriv = (small.transpose() - &small) * (0.5 / zpf);
    let levels = (0..size).map(|n| omega * (n as f64 + 0.5)).collect();
    (levels, phi, deriv, cos)
}

fn short_bath(spec: &CircuitSpec) -> Result<BathModes> {
    if spec.boundary != Boundary::ShortEnd {
        return Err(Error::WrongBoundary("flux reference needs a short-ended line".into()));
    }
    line_normal_modes(spec)
}

/// Flux-gauge circuit in the bare basis: `(Φ0²/2L) φ² + 4E_C N² - E_J cos(φ + 2πφ_e)
/// + Σ Ω a†a + φ Σ f (a + a†)` in oscillator ⊗ Fock states.
pub fn dense_ed_flux(spec: &CircuitSpec, bare: &BareBasisSpec, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    let modes = short_bath(spec)?;
    let n_j = bare.junction_cutoff;
    bare.check(n_j, modes.len())?;
    let (levels, phi, _, cos) = oscillator_junction(modes.inductive_energy(), spec.e_c, spec.bias, n_j);
    let fock = FockBox::new(&bare.fock_cutoffs);
    let p_dim = fock.len;
    let mut rows = Vec::with_capacity(n_j * p_dim);
    for a in 0..n_j {
        for p in 0..p_dim {
            let mut row = Vec::new();
            let mut diag = levels[a];
            for m in 0..modes.len() {
                diag += modes.frequencies[m] * fock.occupation(p, m) as f64;
            }
            for b in 0..n_j {
                let mut v = -spec.e_j * cos[(a, b)];
                if a == b {
                    v += diag;
                }
                if v != 0.0 {
                    row.push((b * p_dim + p, v));
                }
                let x = phi[(a, b)];
                if x == 0.0 {
                    continue;
                }
                for m in 0..modes.len() {
                    let n = fock.occupation(p, m);
                    if let Some(up) = fock.shifted(p, m, 1) {
                        row.push((b * p_dim + up, x * modes.couplings[m] * ((n + 1) as f64).sqrt()));
                    }
                    if let Some(dn) = fock.shifted(p, m, -1) {
                        row.push((b * p_dim + dn, x * modes.couplings[m] * (n as f64).sqrt()));
                    }
                }
            }
            rows.push(row);
        }
    }
    lowest_eigs(&CsrMatrix::from_rows(n_j * p_dim, rows, 0.0), k, opts)
}

/// Charge-gauge form of the short-ended circuit, inductive residual kept:
/// `4E_C (N + i Σ u (a† - a))² + (Φ0²/2L - Σ f²/Ω) φ² - E_J cos(φ + 2πφ_e) + Σ Ω a†a`,
/// in the oscillator basis of the residual quadratic junction part ⊗ Fock boxes.
pub fn dense_ed_charge_gauge_flux(
    spec: &CircuitSpec,
    bare: &BareBasisSpec,
    k: usize,
    opts: &SolverOptions,
) -> Result<EigenResult> {
    let modes = short_bath(spec)?;
    let n_j = bare.junction_cutoff;
    bare.check(n_j, modes.len())?;
    let residual = 2.0 * modes.sum_rule_residual();
    let (levels, _, deriv, cos) = oscillator_junction(residual, spec.e_c, spec.bias, n_j);
    let u: Vec<f64> = modes.frequencies.iter().zip(&modes.couplings).map(|(w, f)| f / w).collect();
    let fock = FockBox::new(&bare.fock_cutoffs);
    let p_dim = fock.len;
    let nm = modes.len();
    // (N + iX)² = N² + 2 ∂_φ X - X², X = Σ u (a† - a)
    let x_col = |p: usize| -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for m in 0..nm {
            let n = fock.occupation(p, m) as f64;
            if let Some(up) = fock.shifted(p, m, 1) {
                out.push((up, u[m] * (n + 1.0).sqrt()));
            }
            if let Some(dn) = fock.shifted(p, m, -1) {
                out.push((dn, -u[m] * n.sqrt()));
            }
        }
        out
    };
    let x_sq = |p: usize| -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for m in 0..nm {
            let n = fock.occupation(p, m) as f64;
            // single-mode (a† - a)² with exact elements inside the box
            out.push((p, -u[m] * u[m] * (2.0 * n + 1.0)));
            if let Some(up2) = fock.shifted(p, m, 2) {
                out.push((up2, u[m] * u[m] * ((n + 1.0) * (n + 2.0)).sqrt()));
            }
            if let Some(dn2) = fock.shifted(p, m, -2) {
                out.push((dn2, u[m] * u[m] * (n * (n - 1.0)).sqrt()));
            }
            for l in 0..nm {
                if l == m {
                    continue;
                }
                let nl = fock.occupation(p, l) as f64;
                for (dm, am) in [(1i64, (n + 1.0).sqrt()), (-1, -n.sqrt())] {
                    let Some(q) = fock.shifted(p, m, dm) else { continue };
                    for (dl, al) in [(1i64, (nl + 1.0).sqrt()), (-1, -nl.sqrt())] {
                        if let Some(r) = fock.shifted(q, l, dl) {
                            out.push((r, u[m] * u[l] * am * al));
                        }
                    }
                }
            }
        }
        out
    };
    let mut rows = Vec::with_capacity(n_j * p_dim);
    for a in 0..n_j {
        for p in 0..p_dim {
            let mut row = Vec::new();
            let mut photon = 0.0;
            for m in 0..nm {
                photon += modes.frequencies[m] * fock.occupation(p, m) as f64;
            }
            row.push((a * p_dim + p, levels[a] + photon));
            for b in 0..n_j {
                let c = -spec.e_j * cos[(a, b)];
                if c != 0.0 {
                    row.push((b * p_dim + p, c));
                }
                let d = deriv[(a, b)];
                if d != 0.0 {
                    // row (a, p) of ∂ ⊗ X: Σ ∂_ab X_pq, with X_pq = -X_qp
                    for (q, v) in x_col(p) {
                        row.push((b * p_dim + q, -8.0 * spec.e_c * d * v));
                    }
                }
            }
            for (q, v) in x_sq(p) {
                row.push((a * p_dim + q, -4.0 * spec.e_c * v));
            }
            rows.push(row);
        }
    }
    lowest_eigs(&CsrMatrix::from_rows(n_j * p_dim, rows, 0.0), k, opts)
}

/// Normal-mode frequencies of a quadratic Hamiltonian `½ ξᵀ H ξ` with
/// `ξ = (x_1..x_n, p_1..p_n)`: the positive eigenvalues of `i J H`, read off
/// the spectrum of `-(H^{1/2} J H^{1/2})²`.
pub fn symplectic_frequencies(hessian: &DMatrix<f64>) -> Result<Vec<f64>> {
    let two_n = hessian.nrows();
    let n = two_n / 2;
    let eig = SymmetricEigen::new(hessian.clone());
    if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("quadrature Hessian is not positive definite".into()));
    }
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
    let mut j = DMatrix::zeros(two_n, two_n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    let k = &root * j * &root;
    let sq = -(&k * &k);
    let sq = (&sq + sq.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(sq).eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    vals.sort_by(f64::total_cmp);
    // each frequency appears twice
    Ok(vals.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect())
}

/// Quadrature Hessian of `Σ Ω a†a + 4E_C (Σ u_i i(a_i† - a_i))²`, the photonic
/// part of the open-line charge gauge, with `a = (x + ip)/√2`.
pub fn charge_gauge_hessian(modes: &BathModes, e_c: f64) -> DMatrix<f64> {
    let n = modes.len();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    let u: Vec<f64> = modes.frequencies.iter().zip(&modes.couplings).map(|(w, f)| f / w).collect();
    for i in 0..n {
        h[(i, i)] = modes.frequencies[i];
        h[(n + i, n + i)] += modes.frequencies[i];
        // i(a† - a) = √2 p
        for j in 0..n {
            h[(n + i, n + j)] += 2.0 * 4.0 * e_c * 2.0 * u[i] * u[j];
        }
    }
    h
}

/// Nonzero normal-mode frequencies of the full lumped network (junction node
/// included, `E_J = 0`), from the generalized problem `Γ v = ω² C v`.
pub fn network_frequencies(spec: &CircuitSpec) -> Result<Vec<f64>> {
    let (c, g) = build_matrices(spec)?;
    let c_inv_sqrt = c.map_diagonal(|x| 1.0 / x.sqrt());
    let d = DMatrix::from_diagonal(&c_inv_sqrt);
    let m = &d * g * &d;
    let m = (&m + m.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    let scale = vals.last().copied().unwrap_or(1.0).abs();
    Ok(vals.into_iter().filter(|&v| v > 1e-10 * scale).map(f64::sqrt).collect())
}

/// Lowest `k` levels of the short-ended circuit at `E_J = 0` from its normal
/// modes: `E_0 + Σ n w`, with `E_0 = ½ Σ w - ½ Σ Ω`.
pub fn flux_quadratic_levels(spec: &CircuitSpec, k: usize) -> Result<Vec<f64>> {
    if spec.boundary != Boundary::ShortEnd {
        return Err(Error::WrongBoundary("quadratic flux levels need a short-ended line".into()));
    }
    let w = network_frequencies(spec)?;
    let line = line_normal_modes(spec)?;
    let e0 = 0.5 * w.iter().sum::<f64>() - 0.5 * line.frequencies.iter().sum::<f64>();
    Ok(ladder_levels(&w, k).into_iter().map(|e| e0 + e).collect())
}

/// Lowest `k` sums `Σ n_i w_i` over occupation vectors.
pub fn ladder_levels(w: &[f64], k: usize) -> Vec<f64> {
    let mut levels = vec![0.0];
    // grow an energy window until it certainly holds k levels
    let mut cut = w.iter().cloned().fold(f64::INFINITY, f64::min) * (k as f64 + 1.0);
    loop {
        levels.clear();
        fn rec(w: &[f64], i: usize, e: f64, cut: f64, out: &mut Vec<f64>) {
            if i == w.len() {
                out.push(e);
                return;
            }
            let mut n = 0.0;
            while e + n * w[i] <= cut {
                rec(w, i + 1, e + n * w[i], cut, out);
                n += 1.0;
            }
        }
        rec(w, 0, 0.0, cut, &mut levels);
        if levels.len() >= k {
            levels.sort_by(f64::total_cmp);
            levels.truncate(k);
            return levels;
        }
        cut *= 2.0;
    }
}
