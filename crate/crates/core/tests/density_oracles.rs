//! Density, sampler and BER-tail checks against oracles written here, independent
//! of the mixture representation used by the library.

use std::f64::consts::PI;

use jfts_core::ber::{expected_ber_tail, inst_ber, LinkBudget};
use jfts_core::jfts::{
    interval_probability, pdf, precompute, sample_snr, JftsCoefficients, JftsParams, NumericsConfig,
};
use jfts_core::scenario;

fn coeffs(p: &JftsParams) -> JftsCoefficients {
    precompute(p, &NumericsConfig::default()).unwrap()
}

/// e^{-z}·I₀(z) from the integral (1/π)∫₀^π e^{z(cos t - 1)} dt, or its asymptotic
/// series once the integrand gets too narrow for a fixed trapezoid.
fn i0e(z: f64) -> f64 {
    if z > 400.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..8 {
            let odd = (2 * k - 1) as f64;
            term *= odd * odd / (k as f64 * 8.0 * z);
            sum += term;
        }
        return sum / (2.0 * PI * z).sqrt();
    }
    let n = (48.0 + 24.0 * z.sqrt()) as usize;
    let h = PI / n as f64;
    let mut acc = 0.0;
    for j in 0..=n {
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        acc += w * (z * ((j as f64 * h).cos() - 1.0)).exp();
    }
    acc * h / PI
}

/// Unit-mean Ricean power density with factor k.
fn ricean(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = ((1.0 + k) * x).sqrt();
    let gap = a - k.sqrt();
    (1.0 + k) * (-gap * gap).exp() * i0e(2.0 * a * k.sqrt())
}

/// Unit-mean TWDP power density, averaged over the specular phase difference.
fn twdp(y: f64, sh: f64, delta: f64) -> f64 {
    let n = 128;
    let mut acc = 0.0;
    for j in 0..=n {
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        let kt = sh * (1.0 + delta * (j as f64 * PI / n as f64).cos());
        acc += w * ricean_general(y, sh, kt);
    }
    acc / n as f64
}

/// Power density of |v + d|² where |v|² = kt/(1+sh) and E|d|² = 1/(1+sh).
fn ricean_general(y: f64, sh: f64, kt: f64) -> f64 {
    let s = 1.0 / (1.0 + sh);
    let gap = (y / s).sqrt() - kt.sqrt();
    let z = 2.0 * (kt * y / s).sqrt();
    (-gap * gap).exp() * i0e(z) / s
}

/// Composite Simpson rule on [a, b] with n (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for j in 1..n {
        acc += f(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Product-density oracle on a log grid of shadow gains.
struct ProductOracle {
    k: f64,
    u: Vec<f64>,
    fy: Vec<f64>,
    h: f64,
}

impl ProductOracle {
    fn new(p: &JftsParams) -> Self {
        let s = 1.0 / (1.0 + p.sh);
        let hi = s * ((p.sh * (1.0 + p.delta)).sqrt() + 9.0).powi(2);
        let (lo, hi) = ((1e-12f64).ln(), hi.ln());
        let n = 4000;
        let h = (hi - lo) / n as f64;
        let u: Vec<f64> = (0..=n).map(|j| lo + j as f64 * h).collect();
        let fy = u.iter().map(|&v| twdp(v.exp(), p.sh, p.delta)).collect();
        Self { k: p.k, u, fy, h }
    }

    /// f(γ) = ∫ f_X(γ/(γ̄y)) f_Y(y) / (γ̄y) dy, integrated in ln y.
    fn density(&self, gamma: f64, gamma_bar: f64) -> f64 {
        let n = self.u.len() - 1;
        let mut acc = 0.0;
        for j in 0..=n {
            let y = self.u[j].exp();
            let w = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * ricean(gamma / (gamma_bar * y), self.k) * self.fy[j] / gamma_bar;
        }
        acc * self.h / 3.0
    }
}

#[test]
fn oracle_building_blocks_are_densities() {
    for k in [0.5, 10.0, 40.0] {
        let mass = simpson(|u: f64| ricean(u.exp(), k) * u.exp(), -30.0, 4.0, 6000);
        let mean = simpson(|u: f64| ricean(u.exp(), k) * (2.0 * u).exp(), -30.0, 4.0, 6000);
        assert!((mass - 1.0).abs() < 1e-8, "k={k}: {mass}");
        assert!((mean - 1.0).abs() < 1e-8, "k={k}: {mean}");
    }
    let m = simpson(|u: f64| twdp(u.exp(), 15.85, 0.9) * u.exp(), -30.0, 2.0, 4000);
    assert!((m - 1.0).abs() < 1e-7, "{m}");
    // I₀(1) by its power series
    let series: f64 = (0..20)
        .map(|k| 0.25f64.powi(k) / (1..=k).map(f64::from).product::<f64>().powi(2))
        .sum();
    assert!((i0e(1.0) * 1f64.exp() - series).abs() < 1e-14);
    assert!((i0e(399.0) - i0e(401.0)).abs() / i0e(400.0) < 6e-3);
}

#[test]
fn pdf_matches_product_integral() {
    let gamma_bar = 10.0;
    for sc in scenario::all_presets() {
        let c = coeffs(&sc.params);
        let oracle = ProductOracle::new(&sc.params);
        for ratio in [0.02, 0.2, 0.6, 1.0, 1.5, 3.0, 6.0] {
            let g = ratio * gamma_bar;
            let want = oracle.density(g, gamma_bar);
            let got = pdf(g, gamma_bar, &c).unwrap();
            assert!(
                (got - want).abs() <= 1e-4 * want + 1e-9,
                "{} at γ={g}: pdf {got:.8e}, oracle {want:.8e}",
                sc.name
            );
        }
    }
}

#[test]
fn interval_matches_quadrature_of_pdf() {
    let sc = scenario::preset("one-wall").unwrap();
    let c = coeffs(&sc.params);
    let gb = 100.0f64;
    // integrate pdf in ln γ
    let f = |u: f64| pdf(u.exp(), gb, &c).unwrap() * u.exp();
    let upper = simpson(f, gb.ln(), (60.0 * gb).ln(), 4000);
    let got = interval_probability(gb, f64::INFINITY, gb, &c).unwrap();
    assert!((got - upper).abs() < 1e-6, "{got} vs {upper}");
    let total = simpson(f, (1e-10 * gb).ln(), (60.0 * gb).ln(), 8000);
    assert!((total - 1.0).abs() < 1e-6, "{total}");
    let mid = simpson(f, (0.3 * gb).ln(), (2.0 * gb).ln(), 2000);
    assert!((interval_probability(0.3 * gb, 2.0 * gb, gb, &c).unwrap() - mid).abs() < 1e-8);
    assert_eq!(interval_probability(5.0, 5.0, gb, &c).unwrap(), 0.0);
    assert!(interval_probability(6.0, 5.0, gb, &c).is_err());
}

#[test]
fn density_mean_is_gamma_bar() {
    for sc in scenario::all_presets() {
        let c = coeffs(&sc.params);
        let gb = 20.0f64;
        let mean = simpson(
            |u: f64| pdf(u.exp(), gb, &c).unwrap() * (2.0 * u).exp(),
            (1e-10 * gb).ln(),
            (80.0 * gb).ln(),
            8000,
        );
        assert!((mean / gb - 1.0).abs() < 0.02, "{}: mean {mean}", sc.name);
    }
}

#[test]
fn cdf_is_monotone_and_continuous() {
    let sc = scenario::preset("two-walls").unwrap();
    let c = coeffs(&sc.params);
    let d = c.density(10.0).unwrap();
    let mut prev = 0.0;
    for j in 0..=2000 {
        let g = 10f64.powf(-4.0 + j as f64 * 7.0 / 2000.0);
        let v = d.cdf(g);
        assert!(v >= prev - 1e-15, "cdf decreases at {g}");
        let eps = g * 1e-9;
        assert!((d.cdf(g + eps) - v).abs() < 1e-6);
        prev = v;
    }
    assert!((prev - 1.0).abs() < 1e-6);
}

#[test]
fn sampler_mean_gain_is_unity() {
    let n = 1_000_000;
    for sc in scenario::wall_presets() {
        let s = sample_snr(&sc.params, 1.0, n, 11).unwrap().samples;
        let mean = s.iter().sum::<f64>() / n as f64;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se, "{}: mean {mean}, se {se}", sc.name);
    }
}

#[test]
fn ber_tail_matches_monte_carlo() {
    let sc = scenario::preset("same-room").unwrap();
    let c = coeffs(&sc.params);
    let link = LinkBudget::from_db(20.0, 1e-3).unwrap();
    let n = 10_000_000;
    let s = sample_snr(&sc.params, link.gamma_bar, n, 7).unwrap().samples;
    let vals: Vec<f64> = s.iter().map(|&g| inst_ber(g, 4.0, 1.0).unwrap()).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let closed = expected_ber_tail(0.0, 4.0, link.s_bar, &link, &c).unwrap();
    assert!((closed - mean).abs() <= 3.0 * se, "closed {closed}, mc {mean} ± {se}");
}

#[test]
fn ber_tail_limits() {
    let sc = scenario::preset("three-walls").unwrap();
    let c = coeffs(&sc.params);
    let link = LinkBudget::from_db(15.0, 1e-3).unwrap();
    let gb = link.gamma_bar;
    assert!(expected_ber_tail(1e6 * gb, 4.0, link.s_bar, &link, &c).unwrap() <= 1e-12);
    for gl in [0.0, 0.3 * gb, 2.0 * gb] {
        let zero = expected_ber_tail(gl, 64.0, 0.0, &link, &c).unwrap();
        let p = interval_probability(gl, f64::INFINITY, gb, &c).unwrap();
        assert!((zero - 0.2 * p).abs() <= 1e-14 + 1e-12 * p, "{zero} vs {}", 0.2 * p);
    }
}
