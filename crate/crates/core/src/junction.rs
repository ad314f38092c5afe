//! Isolated junction spectra: transmon in the charge basis, fluxonium in the
//! oscillator basis of its quadratic part, and the phase-slip amplitude.

use crate::error::{invalid, Error, Result};
use crate::special::displacement_table;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Boundary amplitude below which the charge cutoff counts as converged.
pub const CHARGE_TAIL_TOLERANCE: f64 = 1e-10;
/// Largest charge cutoff `N_max` tried by the automatic growth.
pub const MAX_CHARGE_CUTOFF: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct TransmonEigs {
    pub quasicharge: f64,
    pub charge_cutoff: usize,
    pub energies: Vec<f64>,
    /// `(2 N_max + 1) × n_levels`; row `r` is charge `N = r - N_max`.
    pub vectors: DMatrix<f64>,
}

impl TransmonEigs {
    pub fn charge_of_row(&self, row: usize) -> i64 {
        row as i64 - self.charge_cutoff as i64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluxoniumEigs {
    pub e_l: f64,
    pub flux_bias: f64,
    pub oscillator_cutoff: usize,
    pub energies: Vec<f64>,
    /// `oscillator_cutoff × n_levels` amplitudes over oscillator states.
    pub vectors: DMatrix<f64>,
}

/// Flips each column so its largest-magnitude entry is positive.
pub(crate) fn fix_phases(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0.0_f64;
        for &v in col.iter() {
            if v.abs() > best.abs() + 1e-14 {
                best = v;
            }
        }
        if best < 0.0 {
            col.neg_mut();
        }
    }
}

/// Lowest `k` eigenpairs of a dense symmetric matrix, ascending, phase-fixed.
pub(crate) fn dense_lowest(h: DMatrix<f64>, k: usize, context: &str) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h, 1e-15, 100_000)
        .ok_or_else(|| Error::EigenNonConvergence { context: context.into(), report: format!("dense, n = {n}") })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k = k.min(n);
    let energies = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, k);
    for (c, &i) in order[..k].iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    fix_phases(&mut vectors);
    Ok((energies, vectors))
}

fn transmon_matrix(e_c: f64, e_j: f64, nu: f64, n_max: usize) -> DMatrix<f64> {
    let dim = 2 * n_max + 1;
    let mut h = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        let q = r as f64 - n_max as f64 - nu;
        h[(r, r)] = 4.0 * e_c * q * q;
        if r + 1 < dim {
            h[(r, r + 1)] = -0.5 * e_j;
            h[(r + 1, r)] = -0.5 * e_j;
        }
    }
    h
}

/// Lowest `n_levels` eigenpairs of `4E_C(N - ν)² - E_J cos φ` in the charge basis.
///
/// The cutoff starts at `n_max` and doubles until every returned state has
/// boundary amplitude below [`CHARGE_TAIL_TOLERANCE`].
pub fn transmon_eigs(e_c: f64, e_j: f64, nu: f64, n_max: usize, n_levels: usize) -> Result<TransmonEigs> {
    if !(e_c > 0.0 && e_c.is_finite()) {
        return Err(invalid("e_c", "must be finite and > 0"));
    }
    if !(e_j >= 0.0 && e_j.is_finite()) {
        return Err(invalid("e_j", "must be finite and >= 0"));
    }
    if !nu.is_finite() {
        return Err(invalid("nu", "must be finite"));
    }
    if n_levels == 0 {
        return Err(invalid("n_levels", "must be >= 1"));
    }
    let mut cutoff = n_max.max(1).max((nu.abs().ceil() as usize) + n_levels / 2 + 1);
    loop {
        let dim = 2 * cutoff + 1;
        if dim >= n_levels {
            let (energies, vectors) = dense_lowest(transmon_matrix(e_c, e_j, nu, cutoff), n_levels, "transmon")?;
            let tail = vectors.row(0).amax().max(vectors.row(dim - 1).amax());
            if tail < CHARGE_TAIL_TOLERANCE {
                return Ok(TransmonEigs { quasicharge: nu, charge_cutoff: cutoff, energies, vectors });
            }
            if cutoff >= MAX_CHARGE_CUTOFF {
                return Err(Error::CutoffSaturation {
                    what: "transmon charge cutoff",
                    cutoff,
                    detail: format!("boundary amplitude {tail:e}"),
                });
            }
        }
        cutoff = (2 * cutoff).min(MAX_CHARGE_CUTOFF);
    }
}

/// Cutoff-doubling policy for the oscillator basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub max_cutoff: usize,
    /// Relative change of the kept levels accepted as converged.
    pub tolerance: f64,
}

impl Default for Growth {
    fn default() -> Self {
        Growth { max_cutoff: 1536, tolerance: 1e-9 }
    }
}

/// `ħω_0 = sqrt(8 E_L E_C)` and `φ_zpf = (2E_C/E_L)^{1/4}`, with `φ = φ_zpf (a + a†)`.
pub fn oscillator_scales(e_l: f64, e_c: f64) -> (f64, f64) {
    ((8.0 * e_l * e_c).sqrt(), (2.0 * e_c / e_l).powf(0.25))
}

/// `(E_L/2)φ² + 4E_C N² - E_J cos(φ + 2πφ_ext)` in the oscillator basis of size `size`.
pub fn fluxonium_matrix(e_l: f64, e_c: f64, e_j: f64, phi_ext: f64, size: usize) -> DMatrix<f64> {
    let (omega, zpf) = oscillator_scales(e_l, e_c);
    let table = displacement_table(size, zpf);
    let theta = 2.0 * PI * phi_ext;
    let (c, s) = (theta.cos(), theta.sin());
    let mut h = DMatrix::zeros(size, size);
    for m in 0..size {
        for n in 0..size {
            let (hi, lo) = if m >= n { (m, n) } else { (n, m) };
            let r = table[hi * size + lo];
            let d = hi - lo;
            // <m|e^{iφ}|n> = i^d R, so cos(φ+θ) -> R cos(θ + dπ/2)
            let phase = match d % 4 {
                0 => c,
                1 => -s,
                2 => -c,
                _ => s,
            };
            h[(m, n)] = -e_j * r * phase;
        }
        h[(m, m)] += omega * (m as f64 + 0.5);
    }
    h
}

/// Lowest `n_levels` fluxonium eigenpairs with default [`Growth`].
pub fn fluxonium_eigs(
    e_l: f64,
    e_c: f64,
    e_j: f64,
    phi: f64,
    oscillator_cutoff: usize,
    n_levels: usize,
) -> Result<FluxoniumEigs> {
    fluxonium_eigs_with(e_l, e_c, e_j, phi, oscillator_cutoff, n_levels, Growth::default())
}

/// Doubles the oscillator cutoff until the lowest `n_levels` move less than
/// `growth.tolerance` relative to `max(|E|, ħω_0)`.
pub fn fluxonium_eigs_with(
    e_l: f64,
    e_c: f64,
    e_j: f64,
    phi: f64,
    oscillator_cutoff: usize,
    n_levels: usize,
    growth: Growth,
) -> Result<FluxoniumEigs> {
    if !(e_l > 0.0 && e_l.is_finite()) {
        return Err(invalid("e_l", "must be finite and > 0"));
    }
    if !(e_c > 0.0 && e_c.is_finite()) {
        return Err(invalid("e_c", "must be finite and > 0"));
    }
    if !(e_j >= 0.0 && e_j.is_finite()) {
        return Err(invalid("e_j", "must be finite and >= 0"));
    }
    if !phi.is_finite() {
        return Err(invalid("phi", "must be finite"));
    }
    if n_levels == 0 {
        return Err(invalid("n_levels", "must be >= 1"));
    }
    let (omega, _) = oscillator_scales(e_l, e_c);
    let mut size = oscillator_cutoff.max(n_levels + 8).min(growth.max_cutoff.max(n_levels + 8));
    let mut prev = dense_lowest(fluxonium_matrix(e_l, e_c, e_j, phi, size), n_levels, "fluxonium")?;
    loop {
        if size >= growth.max_cutoff {
            return Err(Error::CutoffSaturation {
                what: "fluxonium oscillator cutoff",
                cutoff: size,
                detail: "no room left to check convergence".into(),
            });
        }
        let next_size = (2 * size).min(growth.max_cutoff);
        let next = dense_lowest(fluxonium_matrix(e_l, e_c, e_j, phi, next_size), n_levels, "fluxonium")?;
        let worst = prev
            .0
            .iter()
            .zip(&next.0)
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(omega))
            .fold(0.0, f64::max);
        if worst < growth.tolerance {
            let (energies, vectors) = next;
            return Ok(FluxoniumEigs { e_l, flux_bias: phi, oscillator_cutoff: next_size, energies, vectors });
        }
        if next_size >= growth.max_cutoff {
            return Err(Error::CutoffSaturation {
                what: "fluxonium oscillator cutoff",
                cutoff: next_size,
                detail: format!("lowest {n_levels} levels still moved by {worst:e}"),
            });
        }
        size = next_size;
        prev = next;
    }
}

/// How `U_0` is read off the lowest transmon band.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseSlipMethod {
    /// `(E_0(1/2) - E_0(0)) / 2`.
    #[default]
    HalfBandwidth,
    /// Least-squares fit of `a - U_0 cos(2πν)` on a 101-point grid over the zone.
    CosineFit,
}

/// Phase-slip amplitude `U_0` of the one-band approximation.
pub fn extract_phase_slip_amplitude(e_c: f64, e_j: f64, method: PhaseSlipMethod) -> Result<f64> {
    let ground = |nu: f64| transmon_eigs(e_c, e_j, nu, 16, 1).map(|t| t.energies[0]);
    match method {
        PhaseSlipMethod::HalfBandwidth => Ok(0.5 * (ground(0.5)? - ground(0.0)?)),
        PhaseSlipMethod::CosineFit => {
            let pts = 101;
            let (mut s1, mut sc, mut scc, mut se, mut sec) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..pts {
                let nu = -0.5 + i as f64 / (pts - 1) as f64;
                let c = (2.0 * PI * nu).cos();
                let e = ground(nu)?;
                s1 += 1.0;
                sc += c;
                scc += c * c;
                se += e;
                sec += e * c;
            }
            // normal equations for e ≈ a + b c; U_0 = -b
            let b = (s1 * sec - sc * se) / (s1 * scc - sc * sc);
            Ok(-b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn free_rotor_levels() {
        let t = transmon_eigs(1.0, 0.0, 0.0, 5, 4).unwrap();
        let expect = [0.0, 4.0, 4.0, 16.0];
        for (a, b) in t.energies.iter().zip(expect) {
            assert!((a - b).abs() < 1e-13);
        }
        let t = transmon_eigs(1.0, 0.0, 0.25, 5, 1).unwrap();
        assert_relative_eq!(t.energies[0], 0.25, epsilon = 1e-14);
    }

    #[test]
    fn transmon_matches_large_dense() {
        let t = transmon_eigs(1.0, 1.0, 0.0, 4, 6).unwrap();
        let (dense, _) = dense_lowest(transmon_matrix(1.0, 1.0, 0.0, 40), 6, "t").unwrap();
        for (a, b) in t.energies.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn transmon_band_symmetry() {
        for &nu in &[0.1, 0.23, 0.41] {
            let a = transmon_eigs(1.0, 2.0, nu, 8, 3).unwrap();
            let b = transmon_eigs(1.0, 2.0, -nu, 8, 3).unwrap();
            let c = transmon_eigs(1.0, 2.0, nu + 1.0, 8, 3).unwrap();
            for i in 0..3 {
                assert!((a.energies[i] - b.energies[i]).abs() < 1e-10);
                assert!((a.energies[i] - c.energies[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigenvectors_orthonormal_and_phase_fixed() {
        let t = transmon_eigs(1.0, 3.0, 0.2, 10, 5).unwrap();
        let g = t.vectors.transpose() * &t.vectors;
        assert!((g - DMatrix::identity(5, 5)).amax() < 1e-12);
        for col in t.vectors.column_iter() {
            let big = col.iter().cloned().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn fluxonium_harmonic_limit() {
        let f = fluxonium_eigs(0.4, 1.0, 0.0, 0.3, 16, 6).unwrap();
        let (w, _) = oscillator_scales(0.4, 1.0);
        for (n, e) in f.energies.iter().enumerate() {
            assert!((e - w * (n as f64 + 0.5)).abs() < 1e-10);
        }
    }

    fn sinc_dvr(e_l: f64, e_c: f64, e_j: f64, phi: f64, half_width: f64, pts: usize) -> Vec<f64> {
        let dx = 2.0 * half_width / (pts - 1) as f64;
        let kin = 4.0 * e_c / (dx * dx);
        let h = DMatrix::from_fn(pts, pts, |i, j| {
            if i == j {
                let x = -half_width + i as f64 * dx;
                kin * PI * PI / 3.0 + 0.5 * e_l * x * x - e_j * (x + 2.0 * PI * phi).cos()
            } else {
                let d = i as f64 - j as f64;
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                kin * 2.0 * sign / (d * d)
            }
        });
        dense_lowest(h, 4, "dvr").unwrap().0
    }

    #[test]
    fn fluxonium_double_well_against_grid() {
        let f = fluxonium_eigs(0.1, 1.0, 2.0, 0.5, 32, 4).unwrap();
        let grid = sinc_dvr(0.1, 1.0, 2.0, 0.5, 40.0, 801);
        for (a, b) in f.energies.iter().zip(&grid) {
            assert!((a - b).abs() < 1e-7, "{a} {b}");
        }
        let split = f.energies[1] - f.energies[0];
        assert!(split < f.energies[2] - f.energies[0]);
    }

    #[test]
    fn fluxonium_symmetric_biases() {
        for &phi in &[0.0, 0.5] {
            let a = fluxonium_eigs(0.3, 1.0, 1.5, phi, 32, 4).unwrap();
            let b = fluxonium_eigs(0.3, 1.0, 1.5, -phi, 32, 4).unwrap();
            for i in 0..4 {
                assert!((a.energies[i] - b.energies[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn phase_slip_limits() {
        let u = extract_phase_slip_amplitude(1.0, 0.0, PhaseSlipMethod::HalfBandwidth).unwrap();
        assert_relative_eq!(u, 0.5, epsilon = 1e-13);
        let slip = |e_j: f64| extract_phase_slip_amplitude(1.0, e_j, PhaseSlipMethod::HalfBandwidth).unwrap();
        assert!(slip(10.0) < 1e-2 * slip(0.0));
        // deep-transmon asymptote (E_J)^{3/4} exp(-sqrt(8 E_J / E_C))
        let asym = |e_j: f64| e_j.powf(0.75) * (-(8.0 * e_j).sqrt()).exp();
        let ratio = (slip(20.0) / slip(10.0)) / (asym(20.0) / asym(10.0));
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn phase_slip_matches_band_sweep() {
        let u = extract_phase_slip_amplitude(1.0, 1.0, PhaseSlipMethod::HalfBandwidth).unwrap();
        let band: Vec<f64> = (0..101)
            .map(|i| transmon_eigs(1.0, 1.0, -0.5 + i as f64 / 100.0, 8, 1).unwrap().energies[0])
            .collect();
        let width = band.iter().cloned().fold(f64::MIN, f64::max) - band.iter().cloned().fold(f64::MAX, f64::min);
        assert_relative_eq!(u, 0.5 * width, epsilon = 1e-12);
        // deep transmon: the band is a pure cosine and both methods agree
        let a = extract_phase_slip_amplitude(1.0, 8.0, PhaseSlipMethod::HalfBandwidth).unwrap();
        let b = extract_phase_slip_amplitude(1.0, 8.0, PhaseSlipMethod::CosineFit).unwrap();
        assert!((a / b - 1.0).abs() < 1e-3, "{a} {b}");
    }
}
