//! Special functions used by the density series, the BER expectations and the
//! closed-form policy expressions.
//!
//! Everything here is a pure function of its arguments.

use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / E;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Nodes and weights of an `order`-point Gauss-Hermite rule for the weight e^{-x²}.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Σ w_h f(r_h)
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss-Hermite rule of order `m` (1 ≤ m ≤ 64).
///
/// Nodes start from the eigenvalues of the symmetric tridiagonal Jacobi matrix
/// (off-diagonal √(k/2)), are polished by Newton steps on the orthonormal
/// Hermite recurrence, and the weights follow
/// w = 2^{m-1} m! √π / (m² H_{m-1}(r)²), written in orthonormal form as
/// 1 / (m · p_{m-1}(r)²).
pub fn hermite_rule(m: usize) -> Result<QuadratureRule> {
    if !(1..=64).contains(&m) {
        return Err(Error::invalid(format!(
            "Gauss-Hermite order must be in 1..=64, got {m}"
        )));
    }
    let mut diag = vec![0.0; m];
    let mut off: Vec<f64> = (1..=m).map(|k| (k as f64 / 2.0).sqrt()).collect();
    off[m - 1] = 0.0;
    tridiagonal_eigenvalues(&mut diag, &mut off)?;
    diag.sort_by(f64::total_cmp);

    let mut nodes: Vec<f64> = diag
        .iter()
        .map(|&x0| {
            let mut x = x0;
            for _ in 0..8 {
                let (pm, pm1) = orthonormal_hermite(m, x);
                let dx = pm / ((2.0 * m as f64).sqrt() * pm1);
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            x
        })
        .collect();

    // enforce exact symmetry
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let r = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -r;
        nodes[j] = r;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }

    let weights = nodes
        .iter()
        .map(|&x| {
            let (_, pm1) = orthonormal_hermite(m, x);
            1.0 / (m as f64 * pm1 * pm1)
        })
        .collect();

    Ok(QuadratureRule {
        order: m,
        nodes,
        weights,
    })
}

/// Returns (p_m(x), p_{m-1}(x)) for the orthonormal Hermite polynomials.
fn orthonormal_hermite(m: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for k in 0..m {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Implicit QL on a symmetric tridiagonal matrix. `off[i]` couples rows i and
/// i+1 and the last entry is ignored. Eigenvalues overwrite `diag`.
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Convergence {
                    what: "tridiagonal QL".into(),
                    iterations: iter,
                });
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

/// Principal branch W₀ of the Lambert W function: w·e^w = x, w ≥ -1.
///
/// Halley iteration from a piecewise initial guess. Arguments below -1/e have
/// no real solution and return [`Error::Domain`]; the lower branch is never
/// substituted.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("lambert_w0 of NaN".into()));
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let q = x + INV_E;
    if q < 0.0 {
        if q > -4.0 * f64::EPSILON {
            return Ok(-1.0);
        }
        return Err(Error::Domain(format!("lambert_w0 argument {x} is below -1/e")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let mut w = if q < 0.3 {
        let p = (2.0 * E * q).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    if w <= -1.0 {
        return Ok(-1.0);
    }

    let ln_x = if x > E { x.ln() } else { 0.0 };
    for _ in 0..64 {
        let dw = if x > E {
            // log form avoids overflowing w·e^w near the top of the range
            let f = w + w.ln() - ln_x;
            let fp = 1.0 + 1.0 / w;
            let fpp = -1.0 / (w * w);
            f / (fp - f * fpp / (2.0 * fp))
        } else {
            let ew = w.exp();
            let f = w * ew - x;
            let wp1 = w + 1.0;
            if wp1 <= 0.0 {
                break;
            }
            f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        };
        w -= dw;
        if dw.abs() <= 1e-14 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// W₀(e^{ln_x}) for arguments too large to represent directly.
pub fn lambert_w0_exp(ln_x: f64) -> Result<f64> {
    if ln_x.is_nan() {
        return Err(Error::Domain("lambert_w0_exp of NaN".into()));
    }
    if ln_x < 700.0 {
        return lambert_w0(ln_x.exp());
    }
    if ln_x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let mut w = ln_x - ln_x.ln();
    for _ in 0..64 {
        let f = w + w.ln() - ln_x;
        let dw = f / (1.0 + 1.0 / w);
        w -= dw;
        if dw.abs() <= 1e-15 * w {
            break;
        }
    }
    Ok(w)
}

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(257);
        let mut acc = 0.0;
        t.push(0.0);
        for k in 1..=256 {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// ln(n!)
pub fn ln_factorial(n: usize) -> f64 {
    let table = ln_factorial_table();
    if n < table.len() {
        return table[n];
    }
    // Stirling with two correction terms; n > 256 here
    let x = n as f64 + 1.0;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
}

/// n! in floating point; correctly rounded up to 34!, overflows past 170!.
pub fn factorial(n: usize) -> Result<f64> {
    if n > 170 {
        return Err(Error::Domain(format!("{n}! overflows f64")));
    }
    if n <= 34 {
        // exact integer product, one rounding on conversion
        return Ok((1..=n as u128).product::<u128>() as f64);
    }
    Ok((1..=n).fold(1.0, |acc, k| acc * k as f64))
}

/// Γ(n, g) = (n-1)!·e^{-g}·Σ_{v=0}^{n-1} g^v/v! for integer n ≥ 1.
pub fn upper_gamma_int(n: usize, g: f64) -> Result<f64> {
    if n == 0 || n > 171 {
        return Err(Error::invalid(format!(
            "upper_gamma_int order must be in 1..=171, got {n}"
        )));
    }
    if !(g >= 0.0) {
        return Err(Error::invalid(format!(
            "upper_gamma_int argument must be nonnegative, got {g}"
        )));
    }
    if g == 0.0 {
        return factorial(n - 1);
    }
    if g == f64::INFINITY {
        return Ok(0.0);
    }
    let ln_top = ln_factorial(n - 1);
    if g < n as f64 {
        // (n-1)!·(1 - P(n, g)), P from its convergent series; keeps Γ(n, g) ≤ (n-1)!
        let mut term = (-g + n as f64 * g.ln() - ln_factorial(n)).exp();
        let mut p: f64 = 0.0;
        let mut k = n as f64;
        while term > 1e-18 * p.max(1e-300) {
            p += term;
            k += 1.0;
            term *= g / k;
        }
        return Ok(factorial(n - 1)? * (1.0 - p));
    }
    let ln_g = g.ln();
    let logs: Vec<f64> = (0..n).map(|v| -g + v as f64 * ln_g - ln_factorial(v)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    Ok((ln_top + top + sum.ln()).exp())
}

/// Fills `out[t] = e^{-x} x^t / t!` for t = 0..out.len().
///
/// Small x recurs upward from e^{-x}. Once x passes the last index the terms
/// increase with t, so the last one is taken from logs and the rest recur
/// downward; terms below the f64 range come out as zero.
pub fn poisson_terms(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    let n = out.len();
    let last = n - 1;
    let ln_top = if x > last as f64 {
        -x + last as f64 * x.ln() - ln_factorial(last)
    } else {
        0.0
    };
    if ln_top < -745.0 {
        out.fill(0.0);
    } else if x < 600.0 {
        let mut term = (-x).exp();
        out[0] = term;
        for t in 1..n {
            term *= x * reciprocal(t);
            out[t] = term;
        }
    } else {
        let mut term = ln_top.exp();
        let inv_x = 1.0 / x;
        out[last] = term;
        for t in (0..last).rev() {
            term *= (t + 1) as f64 * inv_x;
            out[t] = term;
        }
    }
}

fn reciprocal(t: usize) -> f64 {
    if t < RECIPROCALS.len() {
        RECIPROCALS[t]
    } else {
        1.0 / t as f64
    }
}

const RECIPROCALS: [f64; 172] = {
    let mut r = [0.0; 172];
    let mut t = 1;
    while t < 172 {
        r[t] = 1.0 / t as f64;
        t += 1;
    }
    r
};

/// Modified Bessel function I₀(x). Accurate to ~1e-15 relative for |x| ≤ 50.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 30.0 {
        i0_series(ax)
    } else {
        bessel_i0e(ax) * ax.exp()
    }
}

/// Exponentially scaled I₀: e^{-|x|}·I₀(x).
pub fn bessel_i0e(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 30.0 {
        return i0_series(ax) * (-ax).exp();
    }
    // asymptotic: 1/√(2πx) Σ ((2k-1)!!)² / (k! 8^k x^k)
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0).powi(2) / (kf * 8.0 * ax);
        if next > term {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum / (2.0 * PI * ax).sqrt()
}

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Exponential integral E₁(x) = ∫_x^∞ e^{-s}/s ds for x > 0.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("E1 requires x > 0, got {x}")));
    }
    if x > 700.0 {
        return Ok(0.0);
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let c = term / kf;
            sum += c;
            if c.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok(-EULER_GAMMA - x.ln() - sum)
    } else {
        // modified Lentz on the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                return Ok(h * (-x).exp());
            }
        }
        Err(Error::Convergence {
            what: "E1 continued fraction".into(),
            iterations: 500,
        })
    }
}

/// Numerically stable log(Σ exp(v)).
pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top == f64::INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}
