use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power ratio in dB to linear.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Shape parameters of the joint Ricean-fading / TWDP-shadowing channel.
///
/// `k` and `sh` are linear power ratios; the dB values they were built from are
/// kept for reporting. `p1`/`p2` default to the split that makes the envelope
/// mean square Ω = 4·P1·P2·(1+K)(1+S_h) equal to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JftsParams {
    pub k: f64,
    pub sh: f64,
    pub delta: f64,
    pub p1: f64,
    pub p2: f64,
    pub k_db: Option<f64>,
    pub sh_db: Option<f64>,
}

impl JftsParams {
    /// Linear-unit constructor with the unit-mean-gain P1/P2 split.
    pub fn new(k: f64, sh: f64, delta: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::invalid(format!("K must be finite and >= 0, got {k}")));
        }
        if !(sh >= 0.0 && sh.is_finite()) {
            return Err(Error::invalid(format!("S_h must be finite and >= 0, got {sh}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::invalid(format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(Self {
            k,
            sh,
            delta,
            p1: 1.0 / (2.0 * (1.0 + k)),
            p2: 1.0 / (2.0 * (1.0 + sh)),
            k_db: None,
            sh_db: None,
        })
    }

    pub fn from_db(k_db: f64, sh_db: f64, delta: f64) -> Result<Self> {
        if !k_db.is_finite() || !sh_db.is_finite() {
            return Err(Error::invalid("K_dB and Sh_dB must be finite"));
        }
        let mut p = Self::new(db_to_linear(k_db), db_to_linear(sh_db), delta)?;
        p.k_db = Some(k_db);
        p.sh_db = Some(sh_db);
        Ok(p)
    }

    /// Overrides the diffuse and shadowed mean-squared voltages.
    pub fn with_powers(mut self, p1: f64, p2: f64) -> Result<Self> {
        if !(p1 > 0.0 && p1.is_finite() && p2 > 0.0 && p2.is_finite()) {
            return Err(Error::invalid(format!("P1 and P2 must be positive, got {p1}, {p2}")));
        }
        self.p1 = p1;
        self.p2 = p2;
        Ok(self)
    }

    /// Ω = 4·P1·P2·(1+K)·(1+S_h)
    pub fn omega(&self) -> f64 {
        4.0 * self.p1 * self.p2 * (1.0 + self.k) * (1.0 + self.sh)
    }

    pub fn k_db(&self) -> f64 {
        self.k_db.unwrap_or_else(|| linear_to_db(self.k))
    }

    pub fn sh_db(&self) -> f64 {
        self.sh_db.unwrap_or_else(|| linear_to_db(self.sh))
    }
}

/// Free-function form of [`JftsParams::from_db`].
pub fn params_from_db(k_db: f64, sh_db: f64, delta: f64) -> Result<JftsParams> {
    JftsParams::from_db(k_db, sh_db, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig3_same_room() {
        let p = params_from_db(10.0, 10.5, 0.75).unwrap();
        assert!((p.k - 10.0).abs() < 1e-12);
        assert!((p.sh - 11.220_184_5).abs() < 1e-6);
        assert!((p.omega() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_db_forces_product() {
        let p = params_from_db(0.0, 0.0, 0.0).unwrap();
        assert_eq!(p.k, 1.0);
        assert_eq!(p.sh, 1.0);
        assert!((p.p1 * p.p2 - 1.0 / 16.0).abs() < 1e-16);
    }

    #[test]
    fn three_walls() {
        let p = params_from_db(4.0, -6.0, 0.3).unwrap();
        assert!((p.k - 2.511_886).abs() < 1e-6);
        assert!((p.sh - 0.251_189).abs() < 1e-6);
        assert_eq!(p.sh_db(), -6.0);
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(params_from_db(10.0, 6.0, 1.2).is_err());
        assert!(params_from_db(10.0, 6.0, -0.1).is_err());
        assert!(JftsParams::new(1.0, 1.0, 0.5).unwrap().with_powers(0.0, 1.0).is_err());
    }
}
