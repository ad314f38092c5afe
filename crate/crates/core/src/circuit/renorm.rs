use super::{charge_gauge_bath, line_normal_modes, Boundary, CircuitSpec};
use crate::error::Result;
use crate::junction::{extract_phase_slip_amplitude, PhaseSlipMethod};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Elastically renormalized one-band ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ElasticRatio {
    /// `Ẽ_J / Ẽ_C` of the charge circuit.
    Direct { e_j_tilde: f64, e_c_tilde: f64, ratio: f64 },
    /// `Ũ_0 / Ẽ_L` of the flux circuit. `flagged` is set when `Ẽ_L ≤ 0`.
    Dual { u0_tilde: f64, e_l_tilde: f64, ratio: f64, flagged: bool },
}

impl ElasticRatio {
    pub fn ratio(&self) -> f64 {
        match *self {
            ElasticRatio::Direct { ratio, .. } | ElasticRatio::Dual { ratio, .. } => ratio,
        }
    }

    pub fn is_flagged(&self) -> bool {
        matches!(self, ElasticRatio::Dual { flagged: true, .. })
    }
}

/// One-band renormalization diagnostic, with `U_0` read off the lowest transmon band.
pub fn one_band_renormalization(spec: &CircuitSpec, method: PhaseSlipMethod) -> Result<ElasticRatio> {
    let bath = line_normal_modes(spec)?;
    match spec.boundary {
        Boundary::OpenEnd => {
            let cg = charge_gauge_bath(&bath, spec.e_c)?;
            let e_j_tilde = cg.dressed_josephson(spec.e_j);
            Ok(ElasticRatio::Direct { e_j_tilde, e_c_tilde: cg.e_c_tilde, ratio: e_j_tilde / cg.e_c_tilde })
        }
        Boundary::ShortEnd => {
            let u0 = extract_phase_slip_amplitude(spec.e_c, spec.e_j, method)?;
            Ok(dual_ratio(u0, bath.inductive_energy(), bath.coupling_sum(), bath.coupling_sum_sq()))
        }
    }
}

fn dual_ratio(u0: f64, e_l: f64, sum: f64, sum_sq: f64) -> ElasticRatio {
    let e_l_tilde = e_l - 2.0 * sum;
    let u0_tilde = u0 * (-2.0 * PI * PI * sum_sq).exp();
    ElasticRatio::Dual { u0_tilde, e_l_tilde, ratio: u0_tilde / e_l_tilde, flagged: !(e_l_tilde > 0.0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coupling_is_identity() {
        let r = dual_ratio(0.3, 0.8, 0.0, 0.0);
        assert!((r.ratio() - 0.3 / 0.8).abs() < 1e-15);
        assert!(!r.is_flagged());
        assert!(dual_ratio(0.3, 0.8, 0.5, 0.0).is_flagged());
    }

    #[test]
    fn short_line_residual_inductance() {
        let s = CircuitSpec::unit(1.0, 1.0, 4.0, 6, Boundary::ShortEnd).unwrap();
        let ElasticRatio::Dual { e_l_tilde, .. } = one_band_renormalization(&s, PhaseSlipMethod::HalfBandwidth).unwrap() else {
            panic!("expected dual ratio");
        };
        assert!((e_l_tilde - s.inductive_scale() / 7.0).abs() < 1e-10);
    }

    #[test]
    fn direct_ratios_cross_near_critical_impedance() {
        // Ẽ_J/Ẽ_C versus R_q/Z for several lengths; the spread is smallest at Z = R_q.
        let spread = |z: f64| {
            let vals: Vec<f64> = [4, 8, 16]
                .iter()
                .map(|&n| {
                    let s = CircuitSpec::unit(4.0, z, 4.0, n, Boundary::OpenEnd).unwrap();
                    one_band_renormalization(&s, PhaseSlipMethod::HalfBandwidth).unwrap().ratio().ln()
                })
                .collect();
            vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min)
        };
        let at = spread(1.0);
        assert!(at < spread(0.5) && at < spread(2.0), "{at} {} {}", spread(0.5), spread(2.0));
    }
}
