use crate::circuit::CircuitSpec;
use crate::error::{invalid, Result};
use crate::linalg::SolverOptions;
use crate::polaron::{assemble, solve, Cutoffs};
use serde::{Deserialize, Serialize};

/// Default Lorentzian half-width in units of `E_C`.
pub const DEFAULT_LINEWIDTH: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    /// `E_n - E_G`.
    pub energy: f64,
    /// `Σ_k |⟨G| a_k |E_n⟩|²`.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction {
    pub spec: CircuitSpec,
    pub cutoffs: Cutoffs,
    pub gamma: f64,
    pub bias: f64,
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    pub peaks: Vec<SpectralPeak>,
    pub normalized: bool,
}

impl SpectralFunction {
    /// Divides by the largest value so the maximum is 1.
    pub fn normalize(&mut self) {
        let max = self.values.iter().copied().fold(0.0_f64, f64::max);
        if max > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= max);
        }
        self.normalized = true;
    }
}

/// Sum of unit-height Lorentzians weighted by the peak weights.
pub fn lorentzian_sum(omega: &[f64], peaks: &[SpectralPeak], gamma: f64) -> Vec<f64> {
    let g2 = gamma * gamma;
    omega
        .iter()
        .map(|&w| peaks.iter().map(|p| p.weight * g2 / (g2 + (w - p.energy).powi(2))).sum())
        .collect()
}

/// Photonic spectral function at zero bias from the lowest `n_states` eigenpairs.
pub fn spectral_function(
    spec: &CircuitSpec,
    gamma: f64,
    omega: &[f64],
    n_states: usize,
    cutoffs: &Cutoffs,
    opts: &SolverOptions,
) -> Result<SpectralFunction> {
    if spec.bias != 0.0 {
        return Err(invalid("bias", "the spectral function is defined at zero bias"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("gamma", format!("must be finite and > 0, got {gamma}")));
    }
    if n_states == 0 {
        return Err(invalid("n_states", "must be >= 1"));
    }
    let h = assemble(spec, cutoffs)?;
    let eig = solve(&h, n_states, opts)?;
    let vectors = eig.vectors.as_ref().expect("solver returns vectors");
    let weights = h.creation_weights(vectors);
    let ground = eig.energies[0];
    let peaks: Vec<SpectralPeak> =
        eig.energies.iter().zip(weights).map(|(&e, w)| SpectralPeak { energy: e - ground, weight: w }).collect();
    Ok(SpectralFunction {
        spec: *spec,
        cutoffs: *cutoffs,
        gamma,
        bias: 0.0,
        omega: omega.to_vec(),
        values: lorentzian_sum(omega, &peaks, gamma),
        peaks,
        normalized: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{charge_gauge_bath, line_normal_modes, Boundary};

    #[test]
    fn free_junction_peaks_at_mode_frequencies() {
        let spec = CircuitSpec::unit(0.0, 1.0, 4.0, 3, Boundary::OpenEnd).unwrap();
        let bath = charge_gauge_bath(&line_normal_modes(&spec).unwrap(), 1.0).unwrap();
        let omega: Vec<f64> = bath.frequencies.clone();
        let d = spectral_function(&spec, 1e-3, &omega, 12, &Cutoffs::with_energy(10.0), &SolverOptions::default()).unwrap();
        for &w in &bath.frequencies {
            let p = d.peaks.iter().find(|p| (p.energy - w).abs() < 1e-9).expect("peak at mode");
            assert!((p.weight - 1.0).abs() < 1e-9, "{}", p.weight);
        }
        for p in &d.peaks {
            assert!(p.weight < 1e-12 || bath.frequencies.iter().any(|w| (p.energy - w).abs() < 1e-9));
        }
        assert!(d.values.iter().all(|v| *v >= 1.0 - 1e-6));
    }

    #[test]
    fn narrow_lines_reach_peak_weight() {
        let peaks = [SpectralPeak { energy: 1.0, weight: 0.7 }, SpectralPeak { energy: 2.0, weight: 0.2 }];
        let v = lorentzian_sum(&[1.0, 2.0], &peaks, 1e-6);
        assert!((v[0] - 0.7).abs() < 1e-10 && (v[1] - 0.2).abs() < 1e-10);
    }

    #[test]
    fn linear_in_weights() {
        let omega: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let peaks = [SpectralPeak { energy: 1.0, weight: 0.3 }, SpectralPeak { energy: 2.5, weight: 0.4 }];
        let mut twice = peaks;
        twice[1].weight *= 2.0;
        let a: f64 = lorentzian_sum(&omega, &peaks, 0.1).iter().sum();
        let b: f64 = lorentzian_sum(&omega, &twice, 0.1).iter().sum();
        let single: f64 = lorentzian_sum(&omega, &peaks[1..], 0.1).iter().sum();
        assert!((b - a - single).abs() < 1e-12);
        assert!(lorentzian_sum(&omega, &peaks, 0.1).iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn biased_request_rejected() {
        let spec = CircuitSpec::unit(0.0, 1.0, 4.0, 1, Boundary::OpenEnd).unwrap().with_bias(0.1);
        assert!(spectral_function(&spec, 0.1, &[0.0], 2, &Cutoffs::with_energy(4.0), &SolverOptions::default()).is_err());
    }
}
