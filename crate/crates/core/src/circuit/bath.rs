use super::BathModes;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Charge-gauge bath after the Bogoliubov rotation that absorbs the
/// `Σ (a_i - a_i†)` cross terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeGaugeBath {
    /// `ω_k`, ascending.
    pub frequencies: Vec<f64>,
    /// `g_k ≥ 0`, coupling of `(N - ν)` to `(a_k + a_k†)` up to a rephasing.
    pub couplings: Vec<f64>,
    /// Renormalized charging energy `Ẽ_C`.
    pub e_c_tilde: f64,
    /// `exp(-½ Σ g_k²/ω_k²)`.
    pub josephson_suppression: f64,
}

impl ChargeGaugeBath {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `λ_k = g_k/ω_k`, the polaron displacement per unit charge.
    pub fn displacements(&self) -> Vec<f64> {
        self.frequencies.iter().zip(&self.couplings).map(|(w, g)| g / w).collect()
    }

    /// `Ẽ_J = E_J exp(-½ Σ λ_k²)`.
    pub fn dressed_josephson(&self, e_j: f64) -> f64 {
        e_j * self.josephson_suppression
    }
}

/// Rotates the open-line bath into the charge gauge.
///
/// The rotation requires the exact sum rule `Σ f²/Ω = Φ0²/(2L)`, so it is
/// only defined for an open-ended line.
pub fn charge_gauge_bath(bath: &BathModes, e_c: f64) -> Result<ChargeGaugeBath> {
    if bath.boundary != super::Boundary::OpenEnd {
        return Err(Error::WrongBoundary("charge gauge rotation needs an open-ended line".into()));
    }
    if !(e_c > 0.0 && e_c.is_finite()) {
        return Err(crate::error::invalid("e_c", "must be finite and positive"));
    }
    let n = bath.len();
    let w = DVector::from_iterator(n, bath.frequencies.iter().zip(&bath.couplings).map(|(o, f)| f / o.sqrt()));
    let mut m = DMatrix::from_diagonal(&DVector::from_iterator(n, bath.frequencies.iter().map(|o| o * o)));
    m += &w * w.transpose() * (16.0 * e_c);
    let eig = SymmetricEigen::try_new(m, 1e-15, 10_000).ok_or_else(|| Error::EigenNonConvergence {
        context: "charge gauge rotation".into(),
        report: format!("{n} modes"),
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let projections = eig.eigenvectors.transpose() * &w;
    let mut frequencies = Vec::with_capacity(n);
    let mut couplings = Vec::with_capacity(n);
    for (idx, &k) in order.iter().enumerate() {
        let w2 = eig.eigenvalues[k];
        if !(w2 > 0.0) {
            return Err(Error::NonPositiveFrequency { context: "charge gauge bath".into(), index: idx, value: w2 });
        }
        let omega = w2.sqrt();
        frequencies.push(omega);
        couplings.push((8.0 * e_c * projections[k] / omega.sqrt()).abs());
    }
    let shift: f64 = frequencies.iter().zip(&couplings).map(|(o, g)| g * g / o).sum();
    let e_c_tilde = e_c - shift / 4.0;
    let lambda_sq: f64 = frequencies.iter().zip(&couplings).map(|(o, g)| (g / o).powi(2)).sum();
    Ok(ChargeGaugeBath { frequencies, couplings, e_c_tilde, josephson_suppression: (-0.5 * lambda_sq).exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{line_normal_modes, Boundary, CircuitSpec};

    #[test]
    fn trace_is_preserved() {
        let s = CircuitSpec::unit(1.0, 0.7, 4.0, 20, Boundary::OpenEnd).unwrap();
        let bath = line_normal_modes(&s).unwrap();
        let cg = charge_gauge_bath(&bath, s.e_c).unwrap();
        let lhs: f64 = cg.frequencies.iter().map(|w| w * w).sum();
        let rhs: f64 = bath.frequencies.iter().map(|w| w * w).sum::<f64>() + 16.0 * s.e_c * bath.coupling_sum();
        assert!((lhs - rhs).abs() < 1e-10 * rhs);
    }

    #[test]
    fn charging_energy_follows_total_capacitance() {
        for (z, n) in [(0.3, 5), (1.0, 12), (2.5, 30)] {
            let s = CircuitSpec::unit(1.0, z, 4.0, n, Boundary::OpenEnd).unwrap();
            let cg = charge_gauge_bath(&line_normal_modes(&s).unwrap(), s.e_c).unwrap();
            let expect = 1.0 / (1.0 + n as f64 * s.capacitance_ratio());
            assert!((cg.e_c_tilde / s.e_c - expect).abs() < 1e-10, "{z} {n}");
        }
    }

    #[test]
    fn short_end_is_rejected() {
        let s = CircuitSpec::unit(1.0, 1.0, 4.0, 4, Boundary::ShortEnd).unwrap();
        let bath = line_normal_modes(&s).unwrap();
        assert!(matches!(charge_gauge_bath(&bath, 1.0), Err(Error::WrongBoundary(_))));
    }

    #[test]
    fn decoupled_bath_has_no_dressing() {
        let s = CircuitSpec::unit(1.0, 1.0, 4.0, 4, Boundary::OpenEnd).unwrap();
        let bath = line_normal_modes(&s).unwrap().decoupled();
        let cg = charge_gauge_bath(&bath, 1.0).unwrap();
        assert_eq!(cg.e_c_tilde, 1.0);
        assert_eq!(cg.josephson_suppression, 1.0);
        assert_eq!(cg.frequencies, bath.frequencies);
    }
}
