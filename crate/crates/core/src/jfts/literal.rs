//! Term-by-term evaluation of the printed series and Lambert-W closed forms.
//!
//! Solvers never use these values; they are evaluated once at a solution and
//! compared against the defining constraint so disagreements can be reported.

use super::coeffs::SeriesBlock;
use crate::specfun::{self, log_sum_exp};

const LN_02: f64 = -1.609_437_912_434_100_3;

/// Result of summing a Lambert-W series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub value: f64,
    /// Terms whose W argument fell below -1/e and were skipped.
    pub domain_failures: usize,
}

/// ln G[i][h][t] where G = A_{i,h}(D_{1t}C_{1i}C_{3i}^t + D_{2t}C_{2i}C_{4i}^t).
fn ln_g_table(s: &SeriesBlock, gamma_bar: f64) -> Vec<f64> {
    let m = s.order();
    let n = s.t_max + 1;
    let mut out = vec![0.0; 4 * m * n];
    for h in 0..m {
        let ln_su = s.ln_inner_sum(h, gamma_bar);
        for i in 0..4 {
            let ln_c = (s.c1[i] + s.c2[i]).ln();
            for t in 0..n {
                out[(i * m + h) * n + t] =
                    (t as f64 + 1.0) * gamma_bar.ln() + 2.0 * specfun::ln_factorial(t) + ln_su + ln_c;
            }
        }
    }
    out
}

/// ln Q(t+1, x) with Q the regularised upper incomplete gamma.
fn ln_q(t: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let lx = x.ln();
    log_sum_exp((0..=t).map(|v| -x + v as f64 * lx - specfun::ln_factorial(v)))
}

/// Tail BER series Σ ε/(t!)²·Γ(t+1, ξ_h γ_l) with constant power `power`.
pub fn ber_tail_series(s: &SeriesBlock, gamma_bar: f64, s_bar: f64, power: f64, m: f64, gamma_l: f64) -> f64 {
    let ln_g = ln_g_table(s, gamma_bar);
    let n = s.t_max + 1;
    let mut terms = Vec::with_capacity(ln_g.len());
    for i in 0..4 {
        for h in 0..s.order() {
            let den = s.b_h[h] * s_bar * (m - 1.0) + 1.6 * gamma_bar * power;
            let xi = den / (s_bar * gamma_bar * (m - 1.0));
            for t in 0..n {
                let tf = t as f64 + 1.0;
                let ln_eps = LN_02 + ln_g[(i * s.order() + h) * n + t] + tf * (s_bar * (m - 1.0)).ln() - tf * den.ln();
                terms.push(ln_eps - specfun::ln_factorial(t) + ln_q(t, xi * gamma_l));
            }
        }
    }
    log_sum_exp(terms).exp()
}

/// Constant on-power from the series Σ S̄·A/((t!)²B^{t+1})·Γ(t+1, B γ₀/γ̄)·(D₁C₁C₃^t + D₂C₂C₄^t).
pub fn cpow_power_series(s: &SeriesBlock, gamma_bar: f64, s_bar: f64, gamma0: f64) -> f64 {
    let ln_g = ln_g_table(s, gamma_bar);
    let n = s.t_max + 1;
    let mut terms = Vec::with_capacity(ln_g.len());
    for i in 0..4 {
        for h in 0..s.order() {
            let b = s.b_h[h];
            for t in 0..n {
                terms.push(
                    s_bar.ln() + ln_g[(i * s.order() + h) * n + t]
                        - specfun::ln_factorial(t)
                        - (t as f64 + 1.0) * b.ln()
                        + ln_q(t, b * gamma0 / gamma_bar),
                );
            }
        }
    }
    log_sum_exp(terms).exp()
}

/// Boundary γ_l = Σ (u/ξ̃_h)·W[ξ̂_h²·(t!(u-1)!·target/ε̂)^{1/u}], u from 1.
pub fn boundary_closed_form(
    s: &SeriesBlock,
    gamma_bar: f64,
    s_bar: f64,
    power: f64,
    m: f64,
    target: f64,
) -> ClosedForm {
    if !(target > 0.0) || m <= 1.0 {
        return ClosedForm {
            value: f64::NAN,
            domain_failures: 0,
        };
    }
    let ln_g = ln_g_table(s, gamma_bar);
    let n = s.t_max + 1;
    let mut value = 0.0;
    let mut failures = 0;
    for i in 0..4 {
        for h in 0..s.order() {
            let den = s.b_h[h] * s_bar * (m - 1.0) + 1.6 * gamma_bar * power;
            let xi_hat = den / (s_bar * gamma_bar * (m - 1.0));
            for t in 0..n {
                let tf = t as f64 + 1.0;
                let ln_eps = LN_02 + ln_g[(i * s.order() + h) * n + t] + tf * (s_bar * (m - 1.0)).ln() - tf * den.ln();
                for u in 1..=t {
                    let uf = u as f64;
                    let ln_arg = 2.0 * xi_hat.ln()
                        + (specfun::ln_factorial(t) + specfun::ln_factorial(u - 1) - ln_eps + target.ln()) / uf;
                    match specfun::lambert_w0_exp(ln_arg) {
                        Ok(w) => value += -uf * w / xi_hat,
                        Err(_) => failures += 1,
                    }
                }
            }
        }
    }
    ClosedForm {
        value,
        domain_failures: failures,
    }
}

/// Sums k·W[-e^{ln_mag}] - B_h over the series; `ln_mag(i, h, t, u, k)` gives ln|argument|.
fn negative_w_sum(s: &SeriesBlock, ln_mag: impl Fn(usize, usize, usize, usize, f64) -> f64) -> ClosedForm {
    let mut value = 0.0;
    let mut failures = 0;
    for i in 0..4 {
        for h in 0..s.order() {
            for t in 0..=s.t_max {
                for u in 0..=t {
                    let k = (t + 1 - u) as f64;
                    let mag = ln_mag(i, h, t, u, k).exp();
                    match specfun::lambert_w0(-mag) {
                        Ok(w) => value += k * w - s.b_h[h],
                        Err(_) => failures += 1,
                    }
                }
            }
        }
    }
    ClosedForm {
        value,
        domain_failures: failures,
    }
}

/// Constant-rate channel-inversion power at SNR `gamma` from its Lambert-W form.
pub fn crate_power_closed_form(s: &SeriesBlock, gamma_bar: f64, s_bar: f64, gamma: f64, tber: f64) -> ClosedForm {
    let ln_g = ln_g_table(s, gamma_bar);
    let n = s.t_max + 1;
    let m = s.order();
    let sum = negative_w_sum(s, |i, h, t, u, k| {
        let bg = s.b_h[h] * gamma / gamma_bar;
        let ln_zeta = specfun::ln_factorial(t) + specfun::ln_factorial(u) + tber.ln() + u as f64 * gamma_bar.ln()
            - k * s_bar.ln()
            + bg
            - u as f64 * gamma.ln()
            - LN_02
            - ln_g[(i * m + h) * n + t];
        bg / k + gamma.ln() - ln_zeta / k - s_bar.ln() - gamma_bar.ln() - k.ln()
    });
    ClosedForm {
        value: s_bar / (1.6 * gamma_bar) * sum.value,
        domain_failures: sum.domain_failures,
    }
}

/// Per-region power at boundary `gamma_l` for constellation size `m_l` from its Lambert-W form.
pub fn apow_power_closed_form(
    s: &SeriesBlock,
    gamma_bar: f64,
    s_bar: f64,
    gamma_l: f64,
    m_l: f64,
    tber: f64,
) -> ClosedForm {
    let ln_g = ln_g_table(s, gamma_bar);
    let n = s.t_max + 1;
    let m = s.order();
    let sum = negative_w_sum(s, |i, h, t, u, k| {
        let ln_zeta = specfun::ln_factorial(t) + specfun::ln_factorial(u) + tber.ln() + u as f64 * gamma_bar.ln()
            - k * s_bar.ln()
            - LN_02
            - ln_g[(i * m + h) * n + t];
        s.b_h[h] * gamma_l / (gamma_bar * k) - ln_zeta / k - (t as f64 + 1.0) * gamma_l.ln() - gamma_bar.ln() - k.ln()
    });
    ClosedForm {
        value: s_bar * (m_l - 1.0) / (1.6 * gamma_bar) * sum.value,
        domain_failures: sum.domain_failures,
    }
}
