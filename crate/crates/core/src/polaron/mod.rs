//! Junction + line Hamiltonians in the polaron frame, for both circuits.
//!
//! Charge circuit: basis `|N, n⃗⟩` with modes displaced by `(N - ν) λ_k`; the
//! cosine couples `N ↔ N ± 1` through displaced-state overlaps.
//!
//! Flux circuit: modes displaced by `φ u_k`, which shifts the junction charge
//! to `N + i Σ u_k (a_k† - a_k)` and leaves the residual inductance
//! `Ẽ_L = Φ0²/L - 2 Σ f²/Ω` on the junction. The junction factor is the
//! span of the lowest `N_lev` fluxonium eigenstates at `Ẽ_L`.

mod configs;
mod operator;

pub use configs::{build_photon_configs, PhotonConfigSet};
pub use operator::{KronOperator, PhotonFactor};

use crate::circuit::{BathModes, Boundary, ChargeGaugeBath, CircuitSpec};
use crate::error::{Error, Result};
use crate::junction::{fluxonium_eigs, oscillator_scales, FluxoniumEigs};
use crate::linalg::{lowest_eigs, CsrMatrix, EigenResult, SolverOptions, SymmetricOperator};
use crate::special::displacement_table;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Truncation parameters shared by both circuits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    /// Photon energy cut `E_cut` in the energy unit of the spec.
    pub energy_cutoff: f64,
    /// `N_max` for the charge circuit.
    pub charge_cutoff: usize,
    /// `N_lev` for the flux circuit.
    pub flux_levels: usize,
    /// Starting oscillator cutoff of the fluxonium solve (grown automatically).
    pub oscillator_cutoff: usize,
    pub max_configs: usize,
}

/// Default photon energy cut in units of the mode spacing `Δ`.
pub const DEFAULT_CUTOFF_SPACINGS: f64 = 13.0;

impl Cutoffs {
    /// `E_cut = 13ħΔ`, `N_max = 12`, `N_lev = 48`.
    pub fn defaults_for(spec: &CircuitSpec) -> Self {
        Self::with_energy(DEFAULT_CUTOFF_SPACINGS * spec.spacing())
    }

    pub fn with_energy(energy_cutoff: f64) -> Self {
        Cutoffs { energy_cutoff, charge_cutoff: 12, flux_levels: 48, oscillator_cutoff: 64, max_configs: 200_000 }
    }

    /// Every cutoff doubled, for convergence audits.
    pub fn doubled(&self) -> Self {
        Cutoffs {
            energy_cutoff: 2.0 * self.energy_cutoff,
            charge_cutoff: 2 * self.charge_cutoff,
            flux_levels: 2 * self.flux_levels,
            oscillator_cutoff: self.oscillator_cutoff,
            max_configs: self.max_configs,
        }
    }
}

/// Junction factor of the product basis.
#[derive(Clone, Debug)]
pub enum JunctionBasis {
    /// Charge states `N = center - n_max ..= center + n_max`.
    Charge { center: i64, n_max: usize, displacements: Vec<f64> },
    /// Lowest fluxonium eigenstates at the residual inductance.
    Flux { eigs: FluxoniumEigs, e_l_tilde: f64, phase: DMatrix<f64>, displacements: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct PolaronHamiltonian {
    pub spec: CircuitSpec,
    pub cutoffs: Cutoffs,
    pub configs: PhotonConfigSet,
    pub junction: JunctionBasis,
    pub operator: KronOperator,
}

impl PolaronHamiltonian {
    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn junction_dim(&self) -> usize {
        self.operator.junction_dim
    }

    pub fn bias(&self) -> f64 {
        self.spec.bias
    }

    /// `Σ_k |⟨E_n| a_k† |G⟩|²` for the bare-frame creation operators, where
    /// column 0 of `vectors` is `|G⟩`.
    pub fn creation_weights(&self, vectors: &DMatrix<f64>) -> Vec<f64> {
        let p_dim = self.configs.len();
        let j_dim = self.junction_dim();
        let ground = vectors.column(0);
        let n_modes = self.configs.n_modes();
        // bare a_k† = a_k† - x κ_k in the displaced frame
        let (kappa, x_op): (&[f64], DMatrix<f64>) = match &self.junction {
            JunctionBasis::Charge { center, n_max, displacements } => {
                let diag = DVector::from_fn(j_dim, |a, _| (*center + a as i64 - *n_max as i64) as f64 - self.spec.bias);
                (displacements, DMatrix::from_diagonal(&diag))
            }
            JunctionBasis::Flux { phase, displacements, .. } => (displacements, phase.clone()),
        };
        let mut weights = vec![0.0; vectors.ncols()];
        for k in 0..n_modes {
            let mut out = DVector::zeros(self.dim());
            let mut raised = self.configs.config(0).to_vec();
            for p in 0..p_dim {
                raised.copy_from_slice(self.configs.config(p));
                raised[k] += 1;
                let Some(q) = self.configs.position(&raised) else { continue };
                let amp = (raised[k] as f64).sqrt();
                for a in 0..j_dim {
                    out[a * p_dim + q] += amp * ground[a * p_dim + p];
                }
            }
            for a in 0..j_dim {
                for b in 0..j_dim {
                    let x = x_op[(a, b)];
                    if x == 0.0 {
                        continue;
                    }
                    for p in 0..p_dim {
                        out[a * p_dim + p] -= kappa[k] * x * ground[b * p_dim + p];
                    }
                }
            }
            for (w, v) in weights.iter_mut().zip(vectors.column_iter()) {
                *w += v.dot(&out).powi(2);
            }
        }
        weights
    }
}

/// Charge-circuit Hamiltonian in the polaron frame.
pub fn build_charge_hamiltonian(
    spec: &CircuitSpec,
    bath: &ChargeGaugeBath,
    configs: &PhotonConfigSet,
    charge_cutoff: usize,
) -> Result<PolaronHamiltonian> {
    spec.validate()?;
    if spec.boundary != Boundary::OpenEnd {
        return Err(Error::WrongBoundary("charge Hamiltonian needs an open-ended line".into()));
    }
    if bath.len() != configs.n_modes() || bath.frequencies != configs.frequencies {
        return Err(crate::error::invalid("configs", "must be built from the charge-gauge frequencies"));
    }
    let lambda = bath.displacements();
    let p_dim = configs.len();
    let j_dim = 2 * charge_cutoff + 1;
    let center = spec.bias.round() as i64;

    let mut diagonal = Vec::with_capacity(j_dim * p_dim);
    for a in 0..j_dim {
        let q = (center + a as i64 - charge_cutoff as i64) as f64 - spec.bias;
        let e = 4.0 * bath.e_c_tilde * q * q;
        diagonal.extend((0..p_dim).map(|p| e + configs.energy(p)));
    }

    let mut terms = Vec::new();
    if spec.e_j > 0.0 && j_dim > 1 {
        let overlap = overlap_factor(configs, &lambda, 2e-14 * bath.josephson_suppression);
        let transpose = match &overlap {
            PhotonFactor::Dense(m) => PhotonFactor::DenseTransposed(Arc::clone(m)),
            PhotonFactor::Sparse(m) => PhotonFactor::Sparse(Arc::new(transpose(m))),
            PhotonFactor::DenseTransposed(_) => unreachable!(),
        };
        let hop = |up: bool| {
            let rows = (0..j_dim)
                .map(|a| {
                    let src = if up { a.checked_sub(1) } else { (a + 1 < j_dim).then_some(a + 1) };
                    src.map(|c| vec![(c, -0.5 * spec.e_j)]).unwrap_or_default()
                })
                .collect();
            CsrMatrix::from_rows(j_dim, rows, 0.0)
        };
        // ⟨N+1, m| ... |N, n⟩ = -E_J/2 ⟨m|D(λ)|n⟩
        terms.push((hop(true), overlap));
        terms.push((hop(false), transpose));
    }
    Ok(PolaronHamiltonian {
        spec: *spec,
        cutoffs: Cutoffs { charge_cutoff, energy_cutoff: configs.energy_cutoff, ..Cutoffs::with_energy(configs.energy_cutoff) },
        configs: configs.clone(),
        junction: JunctionBasis::Charge { center, n_max: charge_cutoff, displacements: lambda },
        operator: KronOperator { junction_dim: j_dim, photon_dim: p_dim, diagonal, terms },
    })
}

/// Overlap factor, stored dense once more than a quarter of it survives the drop.
fn overlap_factor(configs: &PhotonConfigSet, lambda: &[f64], drop: f64) -> PhotonFactor {
    let sparse = overlap_matrix(configs, lambda, drop);
    let p_dim = configs.len();
    if sparse.nnz() * 4 > p_dim * p_dim {
        PhotonFactor::Dense(Arc::new(sparse.to_dense()))
    } else {
        PhotonFactor::Sparse(Arc::new(sparse))
    }
}

/// `O_mn = Π_k ⟨m_k| D(λ_k) |n_k⟩`, dropping `|O_mn| <= drop`.
pub fn overlap_matrix(configs: &PhotonConfigSet, lambda: &[f64], drop: f64) -> CsrMatrix {
    let size = configs.max_occupation() + 1;
    let tables: Vec<Vec<f64>> = lambda.iter().map(|&l| displacement_table(size, l)).collect();
    let p_dim = configs.len();
    let rows = (0..p_dim)
        .into_par_iter()
        .map(|m| {
            let cm = configs.config(m);
            let mut row = Vec::new();
            for n in 0..p_dim {
                let cn = configs.config(n);
                let mut v = 1.0;
                for (k, t) in tables.iter().enumerate() {
                    v *= t[cm[k] as usize * size + cn[k] as usize];
                }
                if v.abs() > drop {
                    row.push((n, v));
                }
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(p_dim, rows, 0.0)
}

fn transpose(m: &CsrMatrix) -> CsrMatrix {
    let n = m.dim();
    let mut rows = vec![Vec::new(); n];
    for i in 0..n {
        for (j, v) in m.row(i) {
            rows[j].push((i, v));
        }
    }
    CsrMatrix::from_rows(n, rows, 0.0)
}

/// `X = Σ_k u_k (a_k† - a_k)` on the configuration set, and `X²` with exact
/// matrix elements (intermediate states may lie outside the set).
pub fn quadrature_matrices(configs: &PhotonConfigSet, u: &[f64]) -> (CsrMatrix, CsrMatrix) {
    let p_dim = configs.len();
    let apply = |occ: &[u16]| -> Vec<(Vec<u16>, f64)> {
        let mut out = Vec::with_capacity(2 * u.len());
        for (k, &uk) in u.iter().enumerate() {
            let mut up = occ.to_vec();
            up[k] += 1;
            out.push((up, uk * (occ[k] as f64 + 1.0).sqrt()));
            if occ[k] > 0 {
                let mut dn = occ.to_vec();
                dn[k] -= 1;
                out.push((dn, -uk * (occ[k] as f64).sqrt()));
            }
        }
        out
    };
    let rows: Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>)> = (0..p_dim)
        .into_par_iter()
        .map(|p| {
            // column p of X, X² (both symmetric up to sign, stored by row via symmetry)
            let once = apply(configs.config(p));
            let x_col: Vec<(usize, f64)> =
                once.iter().filter_map(|(o, v)| configs.position(o).map(|q| (q, *v))).collect();
            let mut x2_col = Vec::new();
            for (o, v) in &once {
                for (o2, w) in apply(o) {
                    if let Some(q) = configs.position(&o2) {
                        x2_col.push((q, v * w));
                    }
                }
            }
            (x_col, x2_col)
        })
        .collect();
    // rows of X are minus its columns (antisymmetric); X² is symmetric
    let mut x_rows = vec![Vec::new(); p_dim];
    let mut x2_rows = vec![Vec::new(); p_dim];
    for (p, (xc, x2c)) in rows.into_iter().enumerate() {
        for (q, v) in xc {
            x_rows[q].push((p, v));
        }
        for (q, v) in x2c {
            x2_rows[q].push((p, v));
        }
    }
    (CsrMatrix::from_rows(p_dim, x_rows, 0.0), CsrMatrix::from_rows(p_dim, x2_rows, 0.0))
}

/// Flux-circuit Hamiltonian in the polaron frame.
pub fn build_flux_hamiltonian(
    spec: &CircuitSpec,
    modes: &BathModes,
    configs: &PhotonConfigSet,
    flux_levels: usize,
    oscillator_cutoff: usize,
) -> Result<PolaronHamiltonian> {
    spec.validate()?;
    if spec.boundary != Boundary::ShortEnd || modes.boundary != Boundary::ShortEnd {
        return Err(Error::WrongBoundary("flux Hamiltonian needs a short-ended line".into()));
    }
    if modes.frequencies != configs.frequencies {
        return Err(crate::error::invalid("configs", "must be built from the line frequencies"));
    }
    let e_l_tilde = 2.0 * modes.sum_rule_residual();
    if !(e_l_tilde > 0.0) {
        return Err(Error::Domain(format!("residual inductive energy {e_l_tilde:e} is not positive")));
    }
    let eigs = fluxonium_eigs(e_l_tilde, spec.e_c, spec.e_j, spec.bias, oscillator_cutoff, flux_levels)?;
    let size = eigs.oscillator_cutoff;
    let (_, zpf) = oscillator_scales(e_l_tilde, spec.e_c);
    // ∂_φ = -(a† - a)/(2 φ_zpf) and φ = φ_zpf (a + a†)
    let mut deriv = DMatrix::zeros(size, size);
    let mut phi = DMatrix::zeros(size, size);
    for n in 0..size - 1 {
        let s = ((n + 1) as f64).sqrt();
        deriv[(n + 1, n)] = -s / (2.0 * zpf);
        deriv[(n, n + 1)] = s / (2.0 * zpf);
        phi[(n + 1, n)] = zpf * s;
        phi[(n, n + 1)] = zpf * s;
    }
    let v = &eigs.vectors;
    let d_ab = v.transpose() * deriv * v;
    let phase = v.transpose() * phi * v;

    let u: Vec<f64> = modes.frequencies.iter().zip(&modes.couplings).map(|(w, f)| f / w).collect();
    let (x, x2) = quadrature_matrices(configs, &u);
    let p_dim = configs.len();
    let j_dim = eigs.energies.len();
    let mut diagonal = Vec::with_capacity(j_dim * p_dim);
    for &e in &eigs.energies {
        diagonal.extend((0..p_dim).map(|p| e + configs.energy(p)));
    }
    let scale = 8.0 * spec.e_c;
    let coupling = CsrMatrix::from_rows(
        j_dim,
        (0..j_dim).map(|a| (0..j_dim).map(|b| (b, scale * d_ab[(a, b)])).collect()).collect(),
        1e-15 * scale,
    );
    let identity = CsrMatrix::from_rows(j_dim, (0..j_dim).map(|a| vec![(a, -4.0 * spec.e_c)]).collect(), 0.0);
    let terms = vec![(coupling, PhotonFactor::Sparse(Arc::new(x))), (identity, PhotonFactor::Sparse(Arc::new(x2)))];
    Ok(PolaronHamiltonian {
        spec: *spec,
        cutoffs: Cutoffs {
            flux_levels,
            oscillator_cutoff,
            energy_cutoff: configs.energy_cutoff,
            ..Cutoffs::with_energy(configs.energy_cutoff)
        },
        configs: configs.clone(),
        junction: JunctionBasis::Flux { eigs, e_l_tilde, phase, displacements: u },
        operator: KronOperator { junction_dim: j_dim, photon_dim: p_dim, diagonal, terms },
    })
}

/// Builds the circuit's line bath, configurations and polaron Hamiltonian.
pub fn assemble(spec: &CircuitSpec, cutoffs: &Cutoffs) -> Result<PolaronHamiltonian> {
    let modes = crate::circuit::line_normal_modes(spec)?;
    match spec.boundary {
        Boundary::OpenEnd => {
            let bath = crate::circuit::charge_gauge_bath(&modes, spec.e_c)?;
            let configs = build_photon_configs(&bath.frequencies, cutoffs.energy_cutoff, cutoffs.max_configs)?;
            let mut h = build_charge_hamiltonian(spec, &bath, &configs, cutoffs.charge_cutoff)?;
            h.cutoffs = *cutoffs;
            Ok(h)
        }
        Boundary::ShortEnd => {
            let configs = build_photon_configs(&modes.frequencies, cutoffs.energy_cutoff, cutoffs.max_configs)?;
            let mut h = build_flux_hamiltonian(spec, &modes, &configs, cutoffs.flux_levels, cutoffs.oscillator_cutoff)?;
            h.cutoffs = *cutoffs;
            Ok(h)
        }
    }
}

/// Lowest `k` eigenpairs of an assembled polaron Hamiltonian.
pub fn solve(h: &PolaronHamiltonian, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    let r = lowest_eigs(&h.operator, k.min(h.dim()), opts)?;
    let worst = r.max_relative_residual();
    if worst > 1e-8 {
        return Err(Error::EigenNonConvergence {
            context: "polaron eigenpairs".into(),
            report: format!("relative residual {worst:e} above 1e-8"),
        });
    }
    Ok(r)
}

/// Assembles and solves in one call.
pub fn spectrum(spec: &CircuitSpec, cutoffs: &Cutoffs, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    solve(&assemble(spec, cutoffs)?, k, opts)
}
