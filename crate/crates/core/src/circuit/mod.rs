//! Circuit description, lumped-element matrices, line normal modes and the
//! charge-gauge bath obtained by Bogoliubov rotation.
//!
//! Units: `ħ = 1`; all energies (and angular frequencies) share one unit in
//! which the junction charging energy is usually 1. Phases are dimensionless
//! with the reduced flux quantum `ħ/2e`, so `Φ0²/L = ħ R_q ω_c / (4π Z)`.

mod bath;
mod modes;
mod renorm;

pub use bath::{charge_gauge_bath, ChargeGaugeBath};
pub use modes::{build_matrices, line_mode_decomposition, line_normal_modes, BathModes, LineModes};
pub use renorm::{one_band_renormalization, ElasticRatio};

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Termination of the far end of the line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    /// Capacitive termination: the charge circuit, biased by a gate charge.
    OpenEnd,
    /// Inductive termination: the flux circuit, biased by an external flux.
    ShortEnd,
}

impl Boundary {
    /// Last diagonal entry of the inductance matrix.
    pub fn last_entry(self) -> f64 {
        match self {
            Boundary::OpenEnd => 1.0,
            Boundary::ShortEnd => 2.0,
        }
    }

    pub fn bias_name(self) -> &'static str {
        match self {
            Boundary::OpenEnd => "nu",
            Boundary::ShortEnd => "phi",
        }
    }

    pub fn dual(self) -> Self {
        match self {
            Boundary::OpenEnd => Boundary::ShortEnd,
            Boundary::ShortEnd => Boundary::OpenEnd,
        }
    }
}

/// One circuit instance: junction, line and bias.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub e_j: f64,
    pub e_c: f64,
    /// `Z / R_q`.
    pub z_ratio: f64,
    /// `ω_c = 2/sqrt(LC)`.
    pub omega_c: f64,
    pub n_modes: usize,
    pub boundary: Boundary,
    /// Gate charge `ν` (open end) or external flux `φ` in flux quanta (short end).
    pub bias: f64,
}

impl CircuitSpec {
    pub fn new(
        e_j: f64,
        e_c: f64,
        z_ratio: f64,
        omega_c: f64,
        n_modes: usize,
        boundary: Boundary,
        bias: f64,
    ) -> Result<Self> {
        let spec = CircuitSpec { e_j, e_c, z_ratio, omega_c, n_modes, boundary, bias };
        spec.validate()?;
        Ok(spec)
    }

    /// Unit-charging-energy circuit with zero bias.
    pub fn unit(e_j: f64, z_ratio: f64, omega_c: f64, n_modes: usize, boundary: Boundary) -> Result<Self> {
        Self::new(e_j, 1.0, z_ratio, omega_c, n_modes, boundary, 0.0)
    }

    /// Checks the physical ranges. The bias only has to be finite here; the
    /// Hamiltonians are defined (and periodic) for any bias.
    pub fn validate(&self) -> Result<()> {
        if !(self.e_j >= 0.0 && self.e_j.is_finite()) {
            return Err(invalid("e_j", format!("must be finite and >= 0, got {}", self.e_j)));
        }
        if !(self.e_c > 0.0 && self.e_c.is_finite()) {
            return Err(invalid("e_c", format!("must be finite and > 0, got {}", self.e_c)));
        }
        if !(self.z_ratio > 0.0 && self.z_ratio.is_finite()) {
            return Err(invalid("z_ratio", format!("must be finite and > 0, got {}", self.z_ratio)));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(invalid("omega_c", format!("must be finite and > 0, got {}", self.omega_c)));
        }
        if self.n_modes == 0 {
            return Err(invalid("n_modes", "must be >= 1"));
        }
        if !self.bias.is_finite() {
            return Err(invalid("bias", "must be finite"));
        }
        Ok(())
    }

    /// Whether the bias lies in the first (dual) Brillouin zone.
    pub fn bias_in_zone(&self) -> bool {
        self.bias.abs() <= 0.5
    }

    /// Low-energy mode spacing `Δ = π ω_c / (2 N_m)`.
    pub fn spacing(&self) -> f64 {
        PI * self.omega_c / (2.0 * self.n_modes as f64)
    }

    /// `Φ0²/L` in energy units.
    pub fn inductive_scale(&self) -> f64 {
        self.omega_c / (4.0 * PI * self.z_ratio)
    }

    /// `C / C_J`.
    pub fn capacitance_ratio(&self) -> f64 {
        8.0 * self.e_c / (PI * self.omega_c * self.z_ratio)
    }

    /// `L C` in units of `ħ²/energy²`.
    pub fn lc_product(&self) -> f64 {
        4.0 / (self.omega_c * self.omega_c)
    }

    /// `sqrt(L/C)` in units of `R_q`, recomputed from `L` and `C` separately.
    pub fn impedance_from_lc(&self) -> f64 {
        let (l, c) = self.inductance_capacitance();
        (l / c).sqrt() / Self::RESISTANCE_QUANTUM
    }

    /// Cutoff frequency recomputed from `L` and `C` separately.
    pub fn cutoff_from_lc(&self) -> f64 {
        let (l, c) = self.inductance_capacitance();
        2.0 / (l * c).sqrt()
    }

    /// `R_q = h/(2e)² = πħ/(2e²)` with `e = ħ = 1`.
    const RESISTANCE_QUANTUM: f64 = PI / 2.0;

    /// `(L, C)` with `e = ħ = 1` and `C_J = 1/(2 e_c)`.
    fn inductance_capacitance(&self) -> (f64, f64) {
        let c_j = 1.0 / (2.0 * self.e_c);
        let c = self.capacitance_ratio() * c_j;
        let l = self.lc_product() / c;
        (l, c)
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_e_j(mut self, e_j: f64) -> Self {
        self.e_j = e_j;
        self
    }

    pub fn with_z_ratio(mut self, z_ratio: f64) -> Self {
        self.z_ratio = z_ratio;
        self
    }

    pub fn with_n_modes(mut self, n_modes: usize) -> Self {
        self.n_modes = n_modes;
        self
    }

    /// Circuit with the other termination at the dual impedance `R_q²/Z`.
    pub fn dual(mut self) -> Self {
        self.z_ratio = 1.0 / self.z_ratio;
        self.boundary = self.boundary.dual();
        self
    }
}

/// `N_m = round(π ω_c / (2Δ))` and the relative rounding error.
pub fn modes_from_spacing(omega_c: f64, spacing: f64) -> Result<(usize, f64)> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(invalid("delta", format!("must be finite and > 0, got {spacing}")));
    }
    if !(omega_c > 0.0 && omega_c.is_finite()) {
        return Err(invalid("omega_c", format!("must be finite and > 0, got {omega_c}")));
    }
    let exact = PI * omega_c / (2.0 * spacing);
    let n = exact.round().max(1.0);
    Ok((n as usize, (n - exact).abs() / exact))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_line_parameters_are_consistent() {
        let spec = CircuitSpec::unit(1.0, 0.7, 4.0, 10, Boundary::OpenEnd).unwrap();
        assert!((spec.impedance_from_lc() - 0.7).abs() < 1e-14);
        assert!((spec.cutoff_from_lc() - 4.0).abs() < 1e-14);
        assert!((spec.spacing() - PI * 4.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CircuitSpec::unit(-1.0, 1.0, 4.0, 3, Boundary::OpenEnd).is_err());
        assert!(CircuitSpec::unit(1.0, 0.0, 4.0, 3, Boundary::OpenEnd).is_err());
        assert!(CircuitSpec::unit(1.0, 1.0, 0.0, 3, Boundary::OpenEnd).is_err());
        assert!(CircuitSpec::unit(1.0, 1.0, 4.0, 0, Boundary::OpenEnd).is_err());
        assert!(CircuitSpec::new(1.0, 1.0, 1.0, 4.0, 3, Boundary::OpenEnd, f64::NAN).is_err());
    }

    #[test]
    fn spacing_to_modes() {
        let (n, err) = modes_from_spacing(4.0, 0.66).unwrap();
        assert_eq!(n, 10);
        let exact = PI * 4.0 / (2.0 * 0.66);
        assert!((exact - 9.52).abs() < 0.01);
        assert!((err - (10.0 - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn dual_swaps_impedance_and_termination() {
        let spec = CircuitSpec::unit(1.0, 2.0, 4.0, 5, Boundary::OpenEnd).unwrap().dual();
        assert_eq!(spec.boundary, Boundary::ShortEnd);
        assert!((spec.z_ratio - 0.5).abs() < 1e-15);
    }
}
