use super::{Boundary, CircuitSpec};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Capacitance and inductance matrices of the circuit, junction node first.
///
/// Both are scaled by `2E_C/e²`, so the junction capacitance entry is 1 and
/// the line entries are `C/C_J`; the inductance matrix carries `1/(L C_J)`.
pub fn build_matrices(spec: &CircuitSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    spec.validate()?;
    let n = spec.n_modes + 1;
    let c_line = spec.capacitance_ratio();
    let capacitance = DMatrix::from_fn(n, n, |i, j| match (i, j) {
        (0, 0) => 1.0,
        (i, j) if i == j => c_line,
        _ => 0.0,
    });
    let gamma = inverse_inductance_scale(spec);
    let mut inductance = DMatrix::zeros(n, n);
    for i in 0..n {
        inductance[(i, i)] = if i == 0 {
            1.0
        } else if i == n - 1 {
            spec.boundary.last_entry()
        } else {
            2.0
        };
        if i + 1 < n {
            inductance[(i, i + 1)] = -1.0;
            inductance[(i + 1, i)] = -1.0;
        }
    }
    inductance *= gamma;
    Ok((capacitance, inductance))
}

/// `1/(L C_J)`.
fn inverse_inductance_scale(spec: &CircuitSpec) -> f64 {
    spec.capacitance_ratio() / spec.lc_product()
}

/// Generalized eigen-decomposition of the line-only submatrices.
#[derive(Clone, Debug)]
pub struct LineModes {
    /// `Ω_i`, ascending.
    pub frequencies: Vec<f64>,
    /// Columns are modes; normalized so that `Pᵀ C̃ P = I`, first row non-negative.
    pub shapes: DMatrix<f64>,
    pub capacitance: DMatrix<f64>,
}

/// Flux-gauge normal modes of the bare line and their couplings to the junction phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathModes {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
    pub boundary: Boundary,
    /// `Φ0²/(2L)`.
    pub inductive_scale: f64,
}

impl BathModes {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `Φ0²/L`.
    pub fn inductive_energy(&self) -> f64 {
        2.0 * self.inductive_scale
    }

    /// `Σ f_i²/Ω_i`.
    pub fn coupling_sum(&self) -> f64 {
        self.frequencies.iter().zip(&self.couplings).map(|(w, f)| f * f / w).sum()
    }

    /// `Σ f_i²/Ω_i²`.
    pub fn coupling_sum_sq(&self) -> f64 {
        self.frequencies.iter().zip(&self.couplings).map(|(w, f)| f * f / (w * w)).sum()
    }

    /// `Φ0²/(2L) - Σ f_i²/Ω_i`: the inductive term left in the charge gauge.
    pub fn sum_rule_residual(&self) -> f64 {
        self.inductive_scale - self.coupling_sum()
    }

    /// Same line with every coupling set to zero.
    pub fn decoupled(&self) -> Self {
        BathModes { couplings: vec![0.0; self.len()], ..self.clone() }
    }
}

fn condition_report(m: &DMatrix<f64>) -> String {
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    format!("|λ|max = {max:e}, |λ|min = {min:e}, condition = {:e}", max / min)
}

/// Solves `Γ̃ P = C̃ P Ω²` on the line nodes with `Pᵀ C̃ P = I`.
pub fn line_mode_decomposition(spec: &CircuitSpec) -> Result<LineModes> {
    let (c_full, g_full) = build_matrices(spec)?;
    let n = spec.n_modes;
    let c_line = c_full.view((1, 1), (n, n)).into_owned();
    let g_line = g_full.view((1, 1), (n, n)).into_owned();

    let chol = c_line.clone().cholesky().ok_or_else(|| Error::EigenNonConvergence {
        context: "line capacitance not positive definite".into(),
        report: condition_report(&c_line),
    })?;
    let l_inv = chol.l().try_inverse().ok_or_else(|| Error::EigenNonConvergence {
        context: "line capacitance factor singular".into(),
        report: condition_report(&c_line),
    })?;
    let mut reduced = &l_inv * &g_line * l_inv.transpose();
    reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(reduced, 1e-15, 10_000).ok_or_else(|| Error::EigenNonConvergence {
        context: "line normal modes".into(),
        report: format!("capacitance: {}; inductance: {}", condition_report(&c_line), condition_report(&g_line)),
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let back = l_inv.transpose();
    let mut shapes = DMatrix::zeros(n, n);
    let mut frequencies = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        let w2 = eig.eigenvalues[k];
        if !(w2 > 0.0) {
            return Err(Error::NonPositiveFrequency { context: "line normal modes".into(), index: col, value: w2 });
        }
        frequencies.push(w2.sqrt());
        let mut v: DVector<f64> = &back * eig.eigenvectors.column(k);
        if v[0] < 0.0 {
            v.neg_mut();
        }
        shapes.set_column(col, &v);
    }
    Ok(LineModes { frequencies, shapes, capacitance: c_line })
}

/// Normal modes of the bare line with couplings `f_i = (Φ0²/L) sqrt(4E_C/Ω_i) P_1i`.
pub fn line_normal_modes(spec: &CircuitSpec) -> Result<BathModes> {
    let modes = line_mode_decomposition(spec)?;
    let e_l = spec.inductive_scale();
    let couplings = modes
        .frequencies
        .iter()
        .enumerate()
        .map(|(i, &w)| e_l * (4.0 * spec.e_c / w).sqrt() * modes.shapes[(0, i)])
        .collect();
    Ok(BathModes { frequencies: modes.frequencies, couplings, boundary: spec.boundary, inductive_scale: 0.5 * e_l })
}
