use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::mixture::{DensityForm, SnrDensity};
use super::params::JftsParams;
use crate::error::{Error, Result};
use crate::specfun::{self, QuadratureRule};

/// Newton-Cotes weights of the four-term two-wave phase average.
pub const PHASE_WEIGHTS: [f64; 4] = [751.0 / 17280.0, 3577.0 / 17280.0, 49.0 / 640.0, 2989.0 / 17280.0];

/// Numerical knobs for the density series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericsConfig {
    /// Gauss-Hermite order of the coefficient block.
    pub m: usize,
    /// Last index of the Bessel/Poisson series in t.
    pub t_max: usize,
    /// |Z - 1| above this is reported as a warning.
    pub norm_tol: f64,
    /// Trapezoid step of the shadow-gain grid, in natural-log units.
    pub shadow_log_step: f64,
    /// Trapezoid intervals on [0, π] for the two-wave phase average.
    pub phase_points: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            m: 20,
            t_max: 64,
            norm_tol: 1e-3,
            shadow_log_step: 0.15,
            phase_points: 48,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > 64 {
            return Err(Error::invalid(format!(
                "quadrature order m must be in 1..=64, got {}",
                self.m
            )));
        }
        if self.t_max > 170 {
            return Err(Error::invalid(format!("t_max must be <= 170, got {}", self.t_max)));
        }
        if !(self.norm_tol > 0.0) {
            return Err(Error::invalid("norm_tol must be positive"));
        }
        if !(self.shadow_log_step > 0.0 && self.shadow_log_step <= 1.0) {
            return Err(Error::invalid("shadow_log_step must lie in (0, 1]"));
        }
        if self.phase_points < 2 {
            return Err(Error::invalid("phase_points must be >= 2"));
        }
        Ok(())
    }
}

/// The coefficient block of the series density, exactly as defined in terms of
/// (K, S_h, Δ, P1, P2) and the Gauss-Hermite rule. Terms that depend on γ̄
/// (D_{1t}, D_{2t}) are produced on demand.
#[derive(Debug, Clone)]
pub struct SeriesBlock {
    /// T_i = cos((i-1)π/7)
    pub t: [f64; 4],
    pub a: [f64; 4],
    /// b_i = a_i·I₀(1)
    pub b: [f64; 4],
    pub c1: [f64; 4],
    pub c2: [f64; 4],
    pub c3: [f64; 4],
    pub c4: [f64; 4],
    /// R_h, indexed by Gauss-Hermite node
    pub r: Vec<f64>,
    /// B_h
    pub b_h: Vec<f64>,
    /// A_{i,h}, row-major [i][h]
    pub a_ih: Vec<f64>,
    pub omega: f64,
    pub t_max: usize,
}

impl SeriesBlock {
    fn new(p: &JftsParams, rule: &QuadratureRule, t_max: usize) -> Result<Self> {
        let omega = p.omega();
        let t: [f64; 4] = std::array::from_fn(|i| (i as f64 * PI / 7.0).cos());
        let i0_1 = specfun::bessel_i0(1.0);
        let b = PHASE_WEIGHTS.map(|a| a * i0_1);
        let c1 = t.map(|ti| (p.sh * p.delta * ti).exp());
        let c2 = t.map(|ti| (-p.sh * p.delta * ti).exp());
        let scale = p.k * p.sh * omega / (p.p1 * p.p2);
        let c3 = t.map(|ti| scale * (1.0 - p.delta * ti));
        let c4 = t.map(|ti| scale * (1.0 + p.delta * ti));

        let m = rule.order;
        let mut r = Vec::with_capacity(m);
        let mut b_h = Vec::with_capacity(m);
        for (h, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let rh = w / x.abs() * (x * x - x * x / (2.0 * p.p1)).exp();
            let bh = omega / (2.0 * p.p2 * x * x);
            if !rh.is_finite() || !bh.is_finite() {
                return Err(Error::NumericalOverflow { i: 0, h, t: 0 });
            }
            r.push(rh);
            b_h.push(bh);
        }
        let mut a_ih = Vec::with_capacity(4 * m);
        for (i, bi) in b.iter().enumerate() {
            for (h, rh) in r.iter().enumerate() {
                let v = bi * rh * omega / (p.p1 * p.p2) * (-p.k - p.sh).exp();
                if !v.is_finite() {
                    return Err(Error::NumericalOverflow { i, h, t: 0 });
                }
                a_ih.push(v);
            }
        }
        for i in 0..4 {
            if ![c1[i], c2[i], c3[i], c4[i]].iter().all(|v| v.is_finite()) {
                return Err(Error::NumericalOverflow { i, h: 0, t: 0 });
            }
        }
        Ok(Self {
            t,
            a: PHASE_WEIGHTS,
            b,
            c1,
            c2,
            c3,
            c4,
            r,
            b_h,
            a_ih,
            omega,
            t_max,
        })
    }

    pub fn order(&self) -> usize {
        self.r.len()
    }

    pub fn a_ih(&self, i: usize, h: usize) -> f64 {
        self.a_ih[i * self.order() + h]
    }

    /// ln Σ_{u=1}^{t_max+1} (u-1)!·(γ̄/B_h)^u
    pub fn ln_inner_sum(&self, h: usize, gamma_bar: f64) -> f64 {
        let l = (gamma_bar / self.b_h[h]).ln();
        specfun::log_sum_exp((1..=self.t_max + 1).map(|u| specfun::ln_factorial(u - 1) + u as f64 * l))
    }

    /// ln D_{1t}; -∞/+∞ propagate when C_{3i} = 0.
    pub fn ln_d1(&self, i: usize, h: usize, t: usize, gamma_bar: f64) -> f64 {
        gamma_bar.ln() + 2.0 * specfun::ln_factorial(t) - self.a_ih(i, h).ln()
            + t as f64 * (gamma_bar / self.c3[i]).ln()
            + self.ln_inner_sum(h, gamma_bar)
    }

    pub fn ln_d2(&self, i: usize, h: usize, t: usize, gamma_bar: f64) -> f64 {
        gamma_bar.ln() + 2.0 * specfun::ln_factorial(t) - self.a_ih(i, h).ln()
            + t as f64 * (gamma_bar / self.c4[i]).ln()
            + self.ln_inner_sum(h, gamma_bar)
    }

    /// ln[A_{i,h}(D_{1t}C_{1i}C_{3i}^t + D_{2t}C_{2i}C_{4i}^t)].
    ///
    /// A_{i,h} and the C_{3i}^t, C_{4i}^t factors cancel against D_{1t}, D_{2t},
    /// leaving γ̄^{t+1}(t!)²·Σ_u(...)·(C_{1i}+C_{2i}); the cancelled form stays
    /// finite at Δ = 1 where C_{3,1} = 0.
    pub fn ln_kernel_coefficient(&self, i: usize, h: usize, t: usize, gamma_bar: f64) -> f64 {
        (t as f64 + 1.0) * gamma_bar.ln()
            + 2.0 * specfun::ln_factorial(t)
            + self.ln_inner_sum(h, gamma_bar)
            + (self.c1[i] + self.c2[i]).ln()
    }
}

/// Discretised shadow gain: nodes y_n with probability weights W_n.
#[derive(Debug, Clone)]
pub struct ShadowGrid {
    pub gains: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Unit-mean TWDP power-gain density, averaged over the phase difference of the
/// two specular waves with the trapezoid rule on [0, π].
pub fn twdp_power_density(y: f64, sh: f64, delta: f64, phase_points: usize) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    let s = 1.0 / (1.0 + sh);
    let n = phase_points;
    let mut acc = 0.0;
    for j in 0..=n {
        let theta = j as f64 * PI / n as f64;
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        let kt = sh * (1.0 + delta * theta.cos());
        let z = 2.0 * (kt * y / s).sqrt();
        // e^{-(y/s + K_θ)}·I₀(z) = e^{-(√(y/s) - √K_θ)²}·e^{-z}I₀(z)
        let gap = (y / s).sqrt() - kt.sqrt();
        acc += w * (-gap * gap).exp() * specfun::bessel_i0e(z);
    }
    acc / (n as f64 * s)
}

impl ShadowGrid {
    fn new(p: &JftsParams, cfg: &NumericsConfig) -> Self {
        let s = 1.0 / (1.0 + p.sh);
        let k_hi = p.sh * (1.0 + p.delta);
        let y_lo = 1e-14 * s;
        let y_hi = s * (k_hi.sqrt() + 6.5).powi(2);
        let h = cfg.shadow_log_step;
        let v_lo = y_lo.ln();
        let n = ((y_hi.ln() - v_lo) / h).ceil() as usize + 1;
        let mut gains = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for k in 0..n {
            let y = (v_lo + k as f64 * h).exp();
            let w = twdp_power_density(y, p.sh, p.delta, cfg.phase_points) * y * h;
            if w > 1e-20 {
                gains.push(y);
                weights.push(w);
            }
        }
        Self { gains, weights }
    }
}

/// Precomputed coefficients for one parameter set.
///
/// The density is a finite mixture of gamma kernels: for each shadow-gain node
/// y_n, the fading power is Ricean with factor K, i.e. a Poisson(K) mixture of
/// Gamma(t+1) variables with rate (1+K)/(y_n·γ̄). The coefficient block of the
/// literal series is kept alongside for comparison.
#[derive(Debug, Clone)]
pub struct JftsCoefficients {
    pub params: JftsParams,
    pub cfg: NumericsConfig,
    pub rule: QuadratureRule,
    pub series: SeriesBlock,
    pub shadow: ShadowGrid,
    /// Poisson(K) masses for t = 0..=t_max
    pub fading_masses: Vec<f64>,
    /// Normalisation constant of the truncated mixture.
    pub z: f64,
    pub warnings: Vec<String>,
}

/// Builds every coefficient table for `params`.
pub fn precompute(params: &JftsParams, cfg: &NumericsConfig) -> Result<JftsCoefficients> {
    cfg.validate()?;
    let rule = specfun::hermite_rule(cfg.m)?;
    let series = SeriesBlock::new(params, &rule, cfg.t_max)?;
    let shadow = ShadowGrid::new(params, cfg);

    let mut fading_masses = vec![0.0; cfg.t_max + 1];
    specfun::poisson_terms(params.k, &mut fading_masses);
    let z = shadow.weights.iter().sum::<f64>() * fading_masses.iter().sum::<f64>();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::NumericalOverflow {
            i: 0,
            h: 0,
            t: cfg.t_max,
        });
    }

    let mut coeffs = JftsCoefficients {
        params: *params,
        cfg: *cfg,
        rule,
        series,
        shadow,
        fading_masses,
        z,
        warnings: Vec::new(),
    };
    if (z - 1.0).abs() > cfg.norm_tol {
        coeffs.warnings.push(format!(
            "normalisation constant Z = {z:.9} deviates from 1 by more than {}",
            cfg.norm_tol
        ));
    }
    let density = coeffs.density(1.0)?;
    let frac = density.top_term_fraction(5.0);
    if frac >= 1e-12 {
        coeffs.warnings.push(format!(
            "series truncated at t_max = {}: last term carries {frac:.3e} of the density at 5·γ̄",
            cfg.t_max
        ));
    }
    Ok(coeffs)
}

impl JftsCoefficients {
    /// Normalised SNR density at average SNR `gamma_bar` (linear).
    pub fn density(&self, gamma_bar: f64) -> Result<SnrDensity> {
        SnrDensity::composite(self, gamma_bar)
    }

    /// The literal coefficient-block series, renormalised, at `gamma_bar`.
    pub fn literal_density(&self, gamma_bar: f64) -> Result<SnrDensity> {
        SnrDensity::literal(self, gamma_bar)
    }

    pub fn density_form(&self, form: DensityForm, gamma_bar: f64) -> Result<SnrDensity> {
        match form {
            DensityForm::Composite => self.density(gamma_bar),
            DensityForm::Literal => self.literal_density(gamma_bar),
        }
    }
}
