use super::bands::BandStructure;
use super::cft::{cft_energy, cft_levels};
use crate::error::{Error, Result};
use crate::numeric::minimize_bounded;
use serde::{Deserialize, Serialize};

/// rms residual (in `ħΔ`) above which a fit pinned to a bound is flagged.
pub const FLAG_RESIDUAL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilityFit {
    pub mu: f64,
    /// rms of the fitted band residual, in units of the rescale reference.
    pub rms_residual: f64,
    pub band_index: usize,
    pub grid_size: usize,
    /// rms residual of each available band against the critical level set at `mu`.
    pub band_residuals: Vec<f64>,
    pub at_bound: bool,
    pub flagged: bool,
}

/// Least-squares fit of the lowest band to `(λ(μ, ξ))²`. Both sides are
/// measured from their minimum over the grid. Requires rescaled bands.
pub fn fit_mobility(bands: &BandStructure) -> Result<MobilityFit> {
    if bands.rescale_reference.is_none() {
        return Err(Error::MissingReference("bands must be rescaled before fitting".into()));
    }
    let points: Vec<(f64, &[f64])> = bands
        .bias
        .iter()
        .zip(&bands.energies)
        .enumerate()
        .filter(|(j, (_, row))| !bands.failed.contains(j) && row.first().is_some_and(|e| e.is_finite()))
        .map(|(_, (&b, row))| (b, row.as_slice()))
        .collect();
    if points.is_empty() {
        return Err(Error::Domain("no usable bias points to fit".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let target: Vec<f64> = points.iter().map(|p| p.1[0]).collect();
    let t_min = target.iter().copied().fold(f64::INFINITY, f64::min);

    let model = |mu: f64| -> Vec<f64> { xs.iter().map(|&x| cft_energy(mu, x, 0, 0).expect("in domain")).collect() };
    let objective = |mu: f64| {
        let m = model(mu);
        let m_min = m.iter().copied().fold(f64::INFINITY, f64::min);
        m.iter().zip(&target).map(|(a, b)| ((a - m_min) - (b - t_min)).powi(2)).sum::<f64>()
    };
    let (mu, s) = minimize_bounded(objective, 0.0, 1.0, 200, 1e-10);
    let rms = (s / xs.len() as f64).sqrt();

    let n_bands = points.iter().map(|p| p.1.len()).min().unwrap_or(0);
    let levels: Vec<Vec<f64>> = xs.iter().map(|&x| cft_levels(mu, x, n_bands)).collect::<Result<_>>()?;
    let c_min = levels.iter().map(|l| l[0]).fold(f64::INFINITY, f64::min);
    let band_residuals = (0..n_bands)
        .map(|s| {
            let sq: f64 = points.iter().zip(&levels).map(|(p, l)| ((p.1[s] - t_min) - (l[s] - c_min)).powi(2)).sum();
            (sq / xs.len() as f64).sqrt()
        })
        .collect();
    let at_bound = mu <= 1e-6 || mu >= 1.0 - 1e-6;
    Ok(MobilityFit {
        mu,
        rms_residual: rms,
        band_index: 0,
        grid_size: xs.len(),
        band_residuals,
        at_bound,
        flagged: at_bound && rms > FLAG_RESIDUAL,
    })
}
