//! Band sweeps over the bias, rescaling and critical-band fits, the duality
//! map between the two circuits, and the photonic spectral function.

mod bands;
mod cft;
mod duality;
mod fit;
mod spectral;

pub use bands::{
    anticrossings, band_sweep, default_bias_grid, reference_level, rescale_bands, BandStructure, SweepPolicy,
};
pub use cft::{cft_energy, cft_lambda, cft_levels, partition_counts};
pub use duality::{extract_duality, DualityMap};
pub use fit::{fit_mobility, MobilityFit, FLAG_RESIDUAL};
pub use spectral::{lorentzian_sum, spectral_function, SpectralFunction, SpectralPeak, DEFAULT_LINEWIDTH};
