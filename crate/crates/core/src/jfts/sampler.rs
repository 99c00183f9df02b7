use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::JftsParams;
use crate::error::{Error, Result};

/// Samples per independent random sub-stream.
pub const CHUNK: usize = 1 << 16;

/// Instantaneous SNR samples drawn from the Ricean×TWDP channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrSampleStream {
    pub seed: u64,
    pub count: usize,
    pub gamma_bar: f64,
    pub samples: Vec<f64>,
}

/// Per-sample generator for the unit-mean fading and shadowing power gains.
#[derive(Debug, Clone, Copy)]
pub struct GainSampler {
    los: f64,
    sigma_f: f64,
    v1: f64,
    v2: f64,
    sigma_s: f64,
}

impl GainSampler {
    pub fn new(p: &JftsParams) -> Self {
        let spec = p.sh / (1.0 + p.sh);
        let a = (spec * (1.0 + p.delta)).sqrt();
        let b = (spec * (1.0 - p.delta)).sqrt();
        Self {
            los: (p.k / (1.0 + p.k)).sqrt(),
            sigma_f: (0.5 / (1.0 + p.k)).sqrt(),
            v1: 0.5 * (a + b),
            v2: 0.5 * (a - b),
            sigma_s: (0.5 / (1.0 + p.sh)).sqrt(),
        }
    }

    /// Ricean power gain with one fixed specular component.
    pub fn fading<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let re = self.los + self.sigma_f * x;
        let im = self.sigma_f * y;
        re * re + im * im
    }

    /// TWDP power gain: two specular waves with independent uniform phases plus diffuse scatter.
    pub fn shadowing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let tau = std::f64::consts::TAU;
        let (s1, c1) = (tau * rng.random::<f64>()).sin_cos();
        let (s2, c2) = (tau * rng.random::<f64>()).sin_cos();
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let re = self.v1 * c1 + self.v2 * c2 + self.sigma_s * x;
        let im = self.v1 * s1 + self.v2 * s2 + self.sigma_s * y;
        re * re + im * im
    }

    pub fn gain<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.fading(rng) * self.shadowing(rng)
    }
}

/// Random generator for sub-stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `count` SNR samples; chunks of [`CHUNK`] use their own sub-stream, so the
/// output does not depend on the thread count.
pub fn sample_snr(params: &JftsParams, gamma_bar: f64, count: usize, seed: u64) -> Result<SnrSampleStream> {
    if count == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    if !(gamma_bar > 0.0 && gamma_bar.is_finite()) {
        return Err(Error::invalid(format!("gamma_bar must be positive, got {gamma_bar}")));
    }
    let g = GainSampler::new(params);
    let mut samples = vec![0.0; count];
    samples.par_chunks_mut(CHUNK).enumerate().for_each(|(i, chunk)| {
        let mut rng = stream_rng(seed, i as u64);
        for s in chunk.iter_mut() {
            *s = gamma_bar * g.gain(&mut rng);
        }
    });
    Ok(SnrSampleStream {
        seed,
        count,
        gamma_bar,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jfts::params_from_db;

    #[test]
    fn deterministic() {
        let p = params_from_db(13.0, 12.0, 0.9).unwrap();
        let a = sample_snr(&p, 10.0, 200_000, 7).unwrap();
        let b = sample_snr(&p, 10.0, 200_000, 7).unwrap();
        assert!(a
            .samples
            .iter()
            .zip(&b.samples)
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = sample_snr(&p, 10.0, 200_000, 8).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn hardened_channel() {
        // the two specular waves still beat against each other unless Δ = 0
        let p = params_from_db(60.0, 60.0, 0.0).unwrap();
        let s = sample_snr(&p, 100.0, 100_000, 1).unwrap();
        let n = s.samples.len() as f64;
        let mean = s.samples.iter().sum::<f64>() / n;
        let var = s.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(var / 1e4 <= 0.05, "{var}");
    }

    #[test]
    fn unit_mean_gain() {
        for (k, sh, d) in [(13.0, 12.0, 0.9), (4.0, -6.0, 0.3), (7.0, -1.0, 0.5)] {
            let p = params_from_db(k, sh, d).unwrap();
            let s = sample_snr(&p, 1.0, 1_000_000, 3).unwrap();
            let n = s.samples.len() as f64;
            let mean = s.samples.iter().sum::<f64>() / n;
            let var = s.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!((mean - 1.0).abs() <= 3.0 * (var / n).sqrt(), "{k}: {mean}");
        }
    }

    #[test]
    fn rejects_empty() {
        let p = params_from_db(10.0, 6.0, 0.7).unwrap();
        assert!(sample_snr(&p, 1.0, 0, 1).is_err());
    }
}
