//! Joint Ricean fading / TWDP shadowing channel: parameters, SNR density and sampler.

mod coeffs;
pub mod literal;
mod mixture;
mod params;
mod sampler;

pub use coeffs::{
    precompute, twdp_power_density, JftsCoefficients, NumericsConfig, SeriesBlock, ShadowGrid, PHASE_WEIGHTS,
};
pub use mixture::{DensityForm, SnrDensity};
pub use params::{db_to_linear, linear_to_db, params_from_db, JftsParams};
pub use sampler::{sample_snr, stream_rng, GainSampler, SnrSampleStream, CHUNK};

use crate::error::Result;

/// f_γ(γ) at average SNR `gamma_bar`.
///
/// Builds the density each call; hold a [`SnrDensity`] for repeated evaluation.
pub fn pdf(gamma: f64, gamma_bar: f64, coeffs: &JftsCoefficients) -> Result<f64> {
    coeffs.density(gamma_bar)?.pdf(gamma)
}

/// P(a ≤ γ < b) at average SNR `gamma_bar`; `b` may be +∞.
pub fn interval_probability(a: f64, b: f64, gamma_bar: f64, coeffs: &JftsCoefficients) -> Result<f64> {
    coeffs.density(gamma_bar)?.interval(a, b)
}
