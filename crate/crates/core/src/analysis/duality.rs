use crate::error::{Error, Result};
use crate::numeric::{brent_root, Pchip};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityMap {
    /// `(E_J, μ)` for the charge circuit, ascending in `E_J`.
    pub charge: Vec<(f64, f64)>,
    /// `(Ē_J, μ̄)` for the flux circuit at the dual impedance.
    pub flux: Vec<(f64, f64)>,
    /// `(E_J, F(E_J))` at the charge samples inside the common mobility range.
    pub map: Vec<(f64, f64)>,
    /// `E_J*` with `μ(E_J*) = 1/2`, when bracketed by the samples.
    pub self_dual_point: Option<f64>,
}

impl DualityMap {
    /// `F(E_J)`, or `None` outside the common mobility range.
    pub fn apply(&self, e_j: f64) -> Result<Option<f64>> {
        let charge = curve(&self.charge, "charge")?;
        let flux = curve(&self.flux, "flux")?;
        Ok(map_point(&charge, &self.flux, &flux, e_j))
    }
}

fn curve(samples: &[(f64, f64)], what: &str) -> Result<Pchip<f64>> {
    let x: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotone(format!("{what} Josephson energies must increase strictly")));
    }
    let up = y.windows(2).all(|w| w[1] > w[0]);
    let down = y.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::NonMonotone(format!("{what} mobility is not monotone along the grid: {y:?}")));
    }
    Pchip::new(&x, &y)
}

fn range(samples: &[(f64, f64)]) -> (f64, f64) {
    samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.1), hi.max(s.1)))
}

fn map_point(charge: &Pchip<f64>, flux_samples: &[(f64, f64)], flux: &Pchip<f64>, e_j: f64) -> Option<f64> {
    let (lo, hi) = charge.domain();
    if e_j < lo || e_j > hi {
        return None;
    }
    let mu = charge.eval(e_j);
    if let Some(s) = flux_samples.iter().find(|s| s.1 == mu) {
        return Some(s.0);
    }
    let (m_lo, m_hi) = range(flux_samples);
    if mu < m_lo || mu > m_hi {
        return None;
    }
    let (a, b) = flux.domain();
    brent_root(|x| flux.eval(x) - mu, a, b, 1e-13).ok()
}

/// Duality map `F = μ̄⁻¹ ∘ μ` and the self-dual point from sampled mobilities.
pub fn extract_duality(charge: &[(f64, f64)], flux: &[(f64, f64)]) -> Result<DualityMap> {
    let c = curve(charge, "charge")?;
    let f = curve(flux, "flux")?;
    let (c_lo, c_hi) = range(charge);
    let (f_lo, f_hi) = range(flux);
    if c_hi < f_lo || f_hi < c_lo {
        return Err(Error::NoOverlap { charge_lo: c_lo, charge_hi: c_hi, flux_lo: f_lo, flux_hi: f_hi });
    }
    let map = charge.iter().filter_map(|s| map_point(&c, flux, &f, s.0).map(|v| (s.0, v))).collect();
    let (a, b) = c.domain();
    let self_dual_point = brent_root(|x| c.eval(x) - 0.5, a, b, 1e-12).ok();
    Ok(DualityMap { charge: charge.to_vec(), flux: flux.to_vec(), map, self_dual_point })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn charge_curve() -> Vec<(f64, f64)> {
        [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|&e: &f64| (e, (-e).exp())).collect()
    }

    #[test]
    fn identical_inputs_give_identity() {
        let c = charge_curve();
        let d = extract_duality(&c, &c).unwrap();
        assert_eq!(d.map.len(), c.len());
        for (x, y) in &d.map {
            assert_eq!(x, y);
        }
        let star = d.self_dual_point.unwrap();
        assert!((Pchip::new(&[0.25, 0.5, 1.0, 2.0, 4.0], &c.iter().map(|s| s.1).collect::<Vec<_>>()).unwrap().eval(star) - 0.5).abs() < 1e-10);
        assert!((d.apply(1.5).unwrap().unwrap() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn dual_curves_map_consistently() {
        let c = charge_curve();
        // μ̄(Ē_J) = 1 - exp(-Ē_J / 2): F(E_J) solves 1 - exp(-F/2) = exp(-E_J)
        let f: Vec<(f64, f64)> = (1..=30).map(|i| 0.25 * i as f64).map(|e| (e, 1.0 - (-e / 2.0).exp())).collect();
        let d = extract_duality(&c, &f).unwrap();
        for (e, v) in &d.map {
            let exact = -2.0 * (1.0 - (-e).exp()).ln();
            assert!((v - exact).abs() < 2e-2 * exact.max(1.0), "{e} {v} {exact}");
        }
        assert!((d.self_dual_point.unwrap() - 2f64.ln()).abs() < 0.02);
    }

    #[test]
    fn non_monotone_rejected() {
        let c = vec![(0.0, 0.9), (1.0, 0.5), (2.0, 0.6)];
        assert!(matches!(extract_duality(&c, &charge_curve()), Err(Error::NonMonotone(_))));
    }

    #[test]
    fn disjoint_ranges_rejected() {
        let c = vec![(0.0, 0.9), (1.0, 0.8)];
        let f = vec![(0.0, 0.1), (1.0, 0.2)];
        assert!(matches!(extract_duality(&c, &f), Err(Error::NoOverlap { .. })));
    }
}
