use serde::{Deserialize, Serialize};

use super::coeffs::JftsCoefficients;
use crate::error::{Error, Result};
use crate::specfun::{self, log_sum_exp};

/// Which series a [`SnrDensity`] was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityForm {
    /// Ricean×TWDP product law (shadow-gain grid × Poisson series).
    Composite,
    /// The coefficient-block series taken term by term, renormalised.
    Literal,
}

const MAX_TERMS: usize = 171;

#[derive(Debug, Clone)]
struct Group {
    rate: f64,
    weight: f64,
    profile: usize,
}

#[derive(Debug, Clone)]
struct Profile {
    mass: Vec<f64>,
    /// suffix[v] = Σ_{t ≥ v} mass[t]
    suffix: Vec<f64>,
    /// inv_suffix[v] = Σ_{t ≥ v+1} mass[t]/t
    inv_suffix: Vec<f64>,
}

impl Profile {
    fn new(mass: Vec<f64>) -> Self {
        let n = mass.len();
        let mut suffix = vec![0.0; n + 1];
        for t in (0..n).rev() {
            suffix[t] = suffix[t + 1] + mass[t];
        }
        let mut inv_suffix = vec![0.0; n];
        for v in (0..n.saturating_sub(1)).rev() {
            inv_suffix[v] = inv_suffix[v + 1] + mass[v + 1] / (v + 1) as f64;
        }
        Self {
            mass,
            suffix,
            inv_suffix,
        }
    }
}

/// Normalised SNR density at one average SNR.
///
/// Represented as Σ_g w_g Σ_t π_g[t]·Gamma(t+1, β_g) with Σ w_g Σ_t π_g[t] = 1,
/// so every interval integral reduces to regularised upper incomplete gammas.
#[derive(Debug, Clone)]
pub struct SnrDensity {
    pub gamma_bar: f64,
    pub form: DensityForm,
    /// Normalisation constant the raw series was divided by.
    pub z: f64,
    groups: Vec<Group>,
    profiles: Vec<Profile>,
}

fn check_gamma_bar(gamma_bar: f64) -> Result<()> {
    if !(gamma_bar > 0.0 && gamma_bar.is_finite()) {
        return Err(Error::invalid(format!(
            "gamma_bar must be positive and finite, got {gamma_bar}"
        )));
    }
    Ok(())
}

impl SnrDensity {
    pub(crate) fn composite(c: &JftsCoefficients, gamma_bar: f64) -> Result<Self> {
        check_gamma_bar(gamma_bar)?;
        let scale = (1.0 + c.params.k) / gamma_bar;
        let groups = c
            .shadow
            .gains
            .iter()
            .zip(&c.shadow.weights)
            .map(|(&y, &w)| Group {
                rate: scale / y,
                weight: w / c.z,
                profile: 0,
            })
            .collect();
        Ok(Self {
            gamma_bar,
            form: DensityForm::Composite,
            z: c.z,
            groups,
            profiles: vec![Profile::new(c.fading_masses.clone())],
        })
    }

    pub(crate) fn literal(c: &JftsCoefficients, gamma_bar: f64) -> Result<Self> {
        check_gamma_bar(gamma_bar)?;
        let s = &c.series;
        let ln_c: f64 = (0..4).map(|i| s.c1[i] + s.c2[i]).sum::<f64>().ln();
        let mut ln_masses = Vec::with_capacity(s.order());
        for h in 0..s.order() {
            let ln_beta = (s.b_h[h] / gamma_bar).ln();
            let ln_su = s.ln_inner_sum(h, gamma_bar);
            let row: Vec<f64> = (0..=s.t_max)
                .map(|t| ln_c + ln_su + specfun::ln_factorial(t) - (t as f64 + 1.0) * ln_beta)
                .collect();
            ln_masses.push(row);
        }
        let ln_z = log_sum_exp(ln_masses.iter().flatten().copied());
        if !ln_z.is_finite() {
            return Err(Error::NumericalOverflow { i: 0, h: 0, t: s.t_max });
        }
        let mut groups = Vec::new();
        let mut profiles = Vec::new();
        for (h, row) in ln_masses.iter().enumerate() {
            let ln_mh = log_sum_exp(row.iter().copied());
            let mass: Vec<f64> = row.iter().map(|l| (l - ln_mh).exp()).collect();
            groups.push(Group {
                rate: s.b_h[h] / gamma_bar,
                weight: (ln_mh - ln_z).exp(),
                profile: profiles.len(),
            });
            profiles.push(Profile::new(mass));
        }
        Ok(Self {
            gamma_bar,
            form: DensityForm::Literal,
            z: ln_z.exp(),
            groups,
            profiles,
        })
    }

    fn terms(&self) -> usize {
        self.profiles[0].mass.len()
    }

    /// f_γ(γ)
    pub fn pdf(&self, gamma: f64) -> Result<f64> {
        if !(gamma >= 0.0) {
            return Err(Error::invalid(format!("gamma must be nonnegative, got {gamma}")));
        }
        Ok(self.pdf_unchecked(gamma))
    }

    pub(crate) fn pdf_unchecked(&self, gamma: f64) -> f64 {
        if gamma.is_infinite() {
            return 0.0;
        }
        let n = self.terms();
        let mut pois = [0.0; MAX_TERMS];
        let mut acc = 0.0;
        for g in &self.groups {
            specfun::poisson_terms(g.rate * gamma, &mut pois[..n]);
            let prof = &self.profiles[g.profile].mass;
            let s: f64 = prof.iter().zip(&pois[..n]).map(|(a, b)| a * b).sum();
            acc += g.weight * g.rate * s;
        }
        acc
    }

    /// P(γ ≥ a)
    pub fn ccdf(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return self.total();
        }
        if a.is_infinite() {
            return 0.0;
        }
        let n = self.terms();
        let mut pois = [0.0; MAX_TERMS];
        let mut acc = 0.0;
        for g in &self.groups {
            specfun::poisson_terms(g.rate * a, &mut pois[..n]);
            let suf = &self.profiles[g.profile].suffix;
            let s: f64 = pois[..n].iter().zip(suf).map(|(p, q)| p * q).sum();
            acc += g.weight * s;
        }
        acc
    }

    /// P(γ < b), accurate in the lower tail.
    pub fn cdf(&self, b: f64) -> f64 {
        if b <= 0.0 {
            return 0.0;
        }
        if b.is_infinite() {
            return self.total();
        }
        let n = self.terms();
        let mut acc = 0.0;
        let mut lower = [0.0; MAX_TERMS];
        for g in &self.groups {
            let x = g.rate * b;
            let prof = &self.profiles[g.profile].mass;
            if x > n as f64 {
                let mut pois = [0.0; MAX_TERMS];
                specfun::poisson_terms(x, &mut pois[..n]);
                let suf = &self.profiles[g.profile].suffix;
                let q: f64 = pois[..n].iter().zip(suf).map(|(p, s)| p * s).sum();
                acc += g.weight * (self.profiles[g.profile].suffix[0] - q);
                continue;
            }
            lower_gamma_regularised(x, &mut lower[..n]);
            let s: f64 = prof.iter().zip(&lower[..n]).map(|(a, b)| a * b).sum();
            acc += g.weight * s;
        }
        acc
    }

    /// P(a ≤ γ < b)
    pub fn interval(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0) || b.is_nan() || a > b {
            return Err(Error::invalid(format!("interval requires 0 <= a <= b, got [{a}, {b}]")));
        }
        if a == b {
            return Ok(0.0);
        }
        let upper = self.ccdf(a);
        let p = if upper < 0.5 {
            upper - self.ccdf(b)
        } else {
            self.cdf(b) - self.cdf(a)
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// Total mass (1 up to rounding).
    pub fn total(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.weight * self.profiles[g.profile].suffix[0])
            .sum()
    }

    /// ∫_a^∞ e^{-cγ} f_γ(γ) dγ for c ≥ 0.
    pub fn exp_tail(&self, a: f64, c: f64) -> f64 {
        if a.is_infinite() {
            return 0.0;
        }
        let a = a.max(0.0);
        let n = self.terms();
        let mut pois = [0.0; MAX_TERMS];
        let mut acc = 0.0;
        for g in &self.groups {
            let rho = g.rate / (g.rate + c);
            let prof = &self.profiles[g.profile].mass;
            // Σ_t π[t]ρ^{t+1}Q(t+1, x) = Σ_v pois(v; x)·Σ_{t≥v} π[t]ρ^{t+1}
            let x = (g.rate + c) * a;
            specfun::poisson_terms(x, &mut pois[..n]);
            let mut rho_pow = [0.0; MAX_TERMS];
            let mut r = rho;
            for rp in rho_pow.iter_mut().take(n) {
                *rp = r;
                r *= rho;
            }
            let mut suffix = 0.0;
            let mut s = 0.0;
            for t in (0..n).rev() {
                suffix += prof[t] * rho_pow[t];
                s += pois[t] * suffix;
            }
            acc += g.weight * s;
        }
        acc
    }

    /// ∫_a^∞ f_γ(γ)/γ dγ; infinite at a = 0 whenever the density is positive there.
    pub fn inverse_tail(&self, a: f64) -> f64 {
        if a.is_infinite() {
            return 0.0;
        }
        let n = self.terms();
        let mut pois = [0.0; MAX_TERMS];
        let mut acc = 0.0;
        for g in &self.groups {
            let p = &self.profiles[g.profile];
            let x = g.rate * a;
            let head = if p.mass[0] > 0.0 {
                if x <= 0.0 {
                    return f64::INFINITY;
                }
                p.mass[0] * g.rate * specfun::exp_integral_e1(x).unwrap_or(0.0)
            } else {
                0.0
            };
            specfun::poisson_terms(x, &mut pois[..n]);
            let s: f64 = pois[..n].iter().zip(&p.inv_suffix).map(|(q, w)| q * w).sum();
            acc += g.weight * (head + g.rate * s);
        }
        acc
    }

    /// E[γ]
    pub fn mean(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| {
                let prof = &self.profiles[g.profile].mass;
                let m: f64 = prof.iter().enumerate().map(|(t, p)| p * (t as f64 + 1.0)).sum();
                g.weight * m / g.rate
            })
            .sum()
    }

    /// Share of f_γ(x·γ̄) contributed by the highest retained series index.
    pub fn top_term_fraction(&self, x: f64) -> f64 {
        let gamma = x * self.gamma_bar;
        let n = self.terms();
        let mut pois = [0.0; MAX_TERMS];
        let mut top = 0.0;
        let mut all = 0.0;
        for g in &self.groups {
            specfun::poisson_terms(g.rate * gamma, &mut pois[..n]);
            let prof = &self.profiles[g.profile].mass;
            let s: f64 = prof.iter().zip(&pois[..n]).map(|(a, b)| a * b).sum();
            all += g.weight * g.rate * s;
            top += g.weight * g.rate * prof[n - 1] * pois[n - 1];
        }
        if all > 0.0 {
            top / all
        } else {
            0.0
        }
    }

    /// Number of gamma-kernel groups (shadow nodes or quadrature nodes).
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }
}

/// out[t] = P(t+1, x), the regularised lower incomplete gamma, for x ≲ out.len().
fn lower_gamma_regularised(x: f64, out: &mut [f64]) {
    let n = out.len();
    if x == 0.0 {
        out.fill(0.0);
        return;
    }
    // P(t+1, x) = Σ_{v > t} pois(v; x); sum the tail beyond n-1 first
    let ln_x = x.ln();
    let ln_top = -x + n as f64 * ln_x - specfun::ln_factorial(n);
    let mut term = ln_top.exp();
    let mut tail = 0.0;
    let mut v = n as f64;
    while term > 0.0 {
        tail += term;
        v += 1.0;
        term *= x / v;
        if term < 1e-17 * tail {
            break;
        }
    }
    // walk down: pois(t) = pois(t+1)·(t+1)/x, in logs to survive underflow
    let mut ln_p = ln_top;
    for t in (0..n).rev() {
        out[t] = tail;
        ln_p += ((t + 1) as f64).ln() - ln_x;
        tail += ln_p.exp();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jfts::{params_from_db, precompute, NumericsConfig};

    fn dens(k: f64, s: f64, d: f64, gb_db: f64) -> SnrDensity {
        let c = precompute(&params_from_db(k, s, d).unwrap(), &NumericsConfig::default()).unwrap();
        c.density(10f64.powf(gb_db / 10.0)).unwrap()
    }

    #[test]
    fn cdf_and_ccdf_agree() {
        let d = dens(10.0, 6.0, 0.7, 20.0);
        for a in [1e-3, 0.5, 10.0, 100.0, 400.0, 2000.0] {
            let s = d.cdf(a) + d.ccdf(a);
            assert!((s - 1.0).abs() < 1e-12, "a={a} sum={s}");
        }
        assert_eq!(d.interval(3.0, 3.0).unwrap(), 0.0);
        assert!(d.interval(4.0, 3.0).is_err());
    }

    #[test]
    fn lower_gamma_matches_complement() {
        let mut out = [0.0; 20];
        for x in [1e-8, 0.3, 4.0, 19.0] {
            lower_gamma_regularised(x, &mut out);
            let mut pois = [0.0; 20];
            specfun::poisson_terms(x, &mut pois);
            let mut q = 0.0;
            for t in 0..20 {
                q += pois[t];
                assert!((out[t] + q - 1.0).abs() < 1e-13, "x={x} t={t}");
            }
        }
    }

    #[test]
    fn exp_tail_reduces_to_ccdf() {
        let d = dens(7.0, -1.0, 0.5, 10.0);
        for a in [0.0, 1.0, 10.0, 50.0] {
            assert!((d.exp_tail(a, 0.0) - d.ccdf(a)).abs() < 1e-14);
        }
    }

    #[test]
    fn mean_near_gamma_bar() {
        for (k, s, dl) in [(13.0, 12.0, 0.9), (4.0, -6.0, 0.3)] {
            let d = dens(k, s, dl, 20.0);
            assert!((d.mean() / 100.0 - 1.0).abs() < 1e-6, "{}", d.mean());
        }
    }

    #[test]
    fn literal_form_builds() {
        let c = precompute(&params_from_db(13.0, 12.0, 0.9).unwrap(), &NumericsConfig::default()).unwrap();
        let d = c.literal_density(100.0).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-12);
        assert!(d.pdf(50.0).unwrap() >= 0.0);
    }
}
