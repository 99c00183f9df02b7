//! Acceptance checks shared by the `verify` subcommand and the acceptance test target.
//!
//! Each check returns a [`CheckReport`]; a check passes only if every
//! sub-condition holds and it finishes inside its time budget.

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::ase::{
    ase_analytic, csv_rows, mc_evaluate, point_seed, sweep, McOptions, Scenario, SweepConfig, DEFAULT_SEED,
};
use crate::ber::{expected_ber_tail, inst_ber, LinkBudget, ModulationSet};
use crate::error::Result;
use crate::jfts::{precompute, sample_snr, stream_rng, DensityForm, JftsCoefficients, NumericsConfig, SnrDensity};
use crate::policies::{solve, PolicyKind, SolverOptions};
use crate::quad;
use crate::scenario::{all_presets, wall_presets};
use crate::specfun::{hermite_rule, lambert_w0, upper_gamma_int};

/// Run size of the sampling checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// 10⁶ samples where the criteria ask for them.
    Full,
    /// 10⁵ samples everywhere.
    Quick,
}

impl Mode {
    pub fn samples(self) -> usize {
        match self {
            Mode::Full => 1_000_000,
            Mode::Quick => 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub elapsed: Duration,
    pub budget: Duration,
    pub lines: Vec<String>,
}

impl CheckReport {
    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        format!(
            "{} [{}] {} ({:.1} s of {} s)",
            self.status(),
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.summary())?;
        for l in &self.lines {
            writeln!(f, "    {l}")?;
        }
        Ok(())
    }
}

struct Check {
    id: u32,
    title: &'static str,
    budget: Duration,
    start: Instant,
    ok: bool,
    lines: Vec<String>,
}

impl Check {
    fn new(id: u32, title: &'static str, budget_s: u64) -> Self {
        Self {
            id,
            title,
            budget: Duration::from_secs(budget_s),
            start: Instant::now(),
            ok: true,
            lines: Vec::new(),
        }
    }

    fn expect(&mut self, cond: bool, line: String) {
        if !cond {
            self.ok = false;
            self.lines.push(format!("FAIL {line}"));
        }
    }

    fn info(&mut self, line: String) {
        self.lines.push(line);
    }

    fn finish(mut self) -> CheckReport {
        let elapsed = self.start.elapsed();
        if elapsed > self.budget {
            self.ok = false;
            self.lines.push(format!(
                "FAIL runtime {:.1} s over budget {} s",
                elapsed.as_secs_f64(),
                self.budget.as_secs()
            ));
        }
        CheckReport {
            id: self.id,
            title: self.title,
            passed: self.ok,
            elapsed,
            budget: self.budget,
            lines: self.lines,
        }
    }

    fn fail_on_err<T>(&mut self, what: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.expect(false, format!("{what}: {e}"));
                None
            }
        }
    }
}

fn coefficients(s: &Scenario) -> Result<JftsCoefficients> {
    precompute(&s.params, &NumericsConfig::default())
}

const WALL_SNR_DB: [f64; 3] = [10.0, 20.0, 30.0];
const WALL_TBER: [f64; 2] = [1e-3, 1e-6];

/// Special-function closure.
pub fn special_functions() -> CheckReport {
    let mut c = Check::new(1, "special-function closure", 5);

    let mut rng = stream_rng(DEFAULT_SEED, 1);
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let x = match k % 3 {
            0 => -std::f64::consts::E.recip() * rng.random::<f64>(),
            1 => rng.random::<f64>() * 10.0,
            _ => 10f64.powf(rng.random_range(-12.0..300.0)),
        };
        match lambert_w0(x) {
            Ok(w) => {
                let r = (w * w.exp() - x).abs() / x.abs().max(1.0);
                worst = worst.max(r);
            }
            Err(e) => c.expect(false, format!("lambert_w0({x:e}) failed: {e}")),
        }
    }
    c.expect(worst <= 1e-12, format!("Lambert-W worst residual {worst:.3e} > 1e-12"));
    c.info(format!("Lambert-W: 10^4 residuals, worst {worst:.3e}"));

    for m in [2usize, 10, 20] {
        let Some(rule) = c.fail_on_err("hermite_rule", hermite_rule(m)) else {
            continue;
        };
        let mut worst: f64 = 0.0;
        for k in 0..2 * m {
            // ∫x^k e^{-x²} = Γ((k+1)/2) for even k, 0 for odd k; odd moments are
            // compared against ∫|x|^k e^{-x²} = Γ((k+1)/2)
            let scale = half_integer_gamma((k as f64 + 1.0) / 2.0);
            let exact = if k % 2 == 0 { scale } else { 0.0 };
            let got = rule.integrate(|x| x.powi(k as i32));
            worst = worst.max((got - exact).abs() / scale);
        }
        c.expect(
            worst <= 1e-12,
            format!("Gauss-Hermite m = {m}: worst moment error {worst:.3e}"),
        );
        c.info(format!(
            "Gauss-Hermite m = {m}: degrees 0..{} worst relative error {worst:.3e}",
            2 * m - 1
        ));
    }

    let mut exact: u128 = 1;
    for n in 1..=31usize {
        if n > 1 {
            exact *= (n - 1) as u128;
        }
        match upper_gamma_int(n, 0.0) {
            Ok(v) => c.expect(v == exact as f64, format!("Γ({n}, 0) = {v:e}, expected {exact}")),
            Err(e) => c.expect(false, format!("Γ({n}, 0): {e}")),
        }
    }
    c.info("Γ(n, 0) = (n-1)! exactly for n = 1..31".into());
    c.finish()
}

/// Γ(x) for x a positive integer or half-integer.
fn half_integer_gamma(x: f64) -> f64 {
    let (mut v, mut y) = if x.fract() == 0.0 {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while y < x {
        v *= y;
        y += 1.0;
    }
    v
}

/// Density integrates to one and is nonnegative.
pub fn density_sanity() -> CheckReport {
    let mut c = Check::new(2, "density normalisation and positivity", 30);
    for s in all_presets() {
        let Some(co) = c.fail_on_err(&s.name, coefficients(&s)) else {
            continue;
        };
        for db in [0.0, 10.0, 20.0, 30.0] {
            let gb = 10f64.powf(db / 10.0);
            let Some(d) = c.fail_on_err(&s.name, co.density(gb)) else {
                continue;
            };
            let total = quad::integrate_scaled(|g| d.pdf(g).unwrap_or(f64::NAN), 0.0, f64::INFINITY, gb, 1e-10);
            c.expect(
                (total - 1.0).abs() <= 1e-6,
                format!("{} at {db} dB: ∫f = {total:.12}", s.name),
            );
            let negative = (0..=600)
                .map(|k| gb * 10f64.powf(-8.0 + k as f64 * 0.02))
                .filter(|&g| !(d.pdf(g).unwrap_or(-1.0) >= 0.0))
                .count();
            c.expect(
                negative == 0,
                format!("{} at {db} dB: {negative} grid points with negative pdf", s.name),
            );
            c.info(format!(
                "{:<16} {db:>4} dB  |∫f - 1| = {:.2e}",
                s.name,
                (total - 1.0).abs()
            ));
        }
    }
    c.finish()
}

/// Kolmogorov-Smirnov distance between sorted samples and a CDF.
///
/// The CDF is evaluated at every `stride`-th order statistic. Between two
/// evaluated points both functions are monotone, so the returned value is an
/// upper bound on the exact distance that is tight to 1/n·stride.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64, stride: usize) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    let stride = stride.max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let nf = n as f64;
    let vals: Vec<f64> = idx.iter().map(|&i| cdf(sorted[i])).collect();
    let mut d: f64 = 0.0;
    for (k, &i) in idx.iter().enumerate() {
        d = d
            .max((vals[k] - i as f64 / nf).abs())
            .max(((i + 1) as f64 / nf - vals[k]).abs());
        if k + 1 < idx.len() {
            let j = idx[k + 1];
            // for x in [x_i, x_j): F(x) ∈ [F(x_i), F(x_j)], F_n(x) ∈ [(i+1)/n, j/n]
            d = d.max(vals[k + 1] - (i + 1) as f64 / nf).max(j as f64 / nf - vals[k]);
        }
    }
    d
}

/// Sampler agrees with the analytic CDF.
pub fn sampler_vs_analytic(mode: Mode) -> CheckReport {
    let mut c = Check::new(3, "sampler against analytic CDF", 60);
    let n = mode.samples();
    let gb = 10.0;
    for (k, s) in all_presets().iter().enumerate() {
        let Some(co) = c.fail_on_err(&s.name, coefficients(s)) else {
            continue;
        };
        let Some(mut stream) = c.fail_on_err(
            &s.name,
            sample_snr(&s.params, gb, n, point_seed(DEFAULT_SEED, k as u64)),
        ) else {
            continue;
        };
        stream.samples.sort_by(f64::total_cmp);
        let Some(d) = c.fail_on_err(&s.name, co.density(gb)) else {
            continue;
        };
        let ks = ks_distance(&stream.samples, |x| d.cdf(x), 100);
        let literal: Option<SnrDensity> = co.density_form(DensityForm::Literal, gb).ok();
        let ks_lit = literal.map(|l| ks_distance(&stream.samples, |x| l.cdf(x) / l.total(), 100));
        c.expect(
            ks <= 0.05,
            format!(
                "{}: KS = {ks:.4} > 0.05; the closed-form density does not describe the sampled channel (density fidelity question open)",
                s.name
            ),
        );
        let lit = ks_lit.map_or("unavailable".to_string(), |v| format!("{v:.4}"));
        c.info(format!(
            "{:<16} n = {n}  KS composite = {ks:.5}  KS literal series = {lit}",
            s.name
        ));
        if let Some(v) = ks_lit {
            if v > 0.05 {
                c.info(format!(
                    "{:<16} density fidelity: the literal coefficient series sits {v:.3} from the sampled channel",
                    s.name
                ));
            }
        }
    }
    c.finish()
}

/// expected_ber_tail against direct quadrature on a 5×5 (γ_l, S) grid per preset.
///
/// γ̄ = 20 dB and M = 16; S/S̄ = 0 reduces the tail to 0.2·P(γ ≥ γ_l).
pub fn ber_tail_oracle() -> CheckReport {
    let mut c = Check::new(4, "average BER tail against quadrature", 60);
    let m = 16.0;
    let link = LinkBudget::from_db(20.0, 1e-3).expect("valid link");
    for s in all_presets() {
        let Some(co) = c.fail_on_err(&s.name, coefficients(&s)) else {
            continue;
        };
        let Some(d) = c.fail_on_err(&s.name, co.density(link.gamma_bar)) else {
            continue;
        };
        let mut worst: f64 = 0.0;
        for frac in [0.0, 0.1, 0.5, 1.0, 2.0] {
            let gl = frac * link.gamma_bar;
            for ratio in [0.0, 0.25, 1.0, 2.0, 4.0] {
                let Some(closed) = c.fail_on_err(&s.name, expected_ber_tail(gl, m, ratio * link.s_bar, &link, &co))
                else {
                    continue;
                };
                let numeric = quad::integrate_scaled(
                    |g| inst_ber(g, m, ratio).unwrap_or(f64::NAN) * d.pdf(g).unwrap_or(f64::NAN),
                    gl,
                    f64::INFINITY,
                    link.gamma_bar,
                    1e-9 * closed,
                );
                let rel = ((closed - numeric) / numeric).abs();
                worst = worst.max(rel);
                c.expect(
                    rel <= 1e-4,
                    format!(
                        "{} γ_l = {gl:.4e}, S/S̄ = {ratio}: closed {closed:.6e} vs quadrature {numeric:.6e}",
                        s.name
                    ),
                );
            }
        }
        c.info(format!(
            "{:<16} γ̄ = 20 dB, M = 16: worst relative difference {worst:.2e}",
            s.name
        ));
    }
    c.finish()
}

/// One cell of the constraint grid.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub scenario: String,
    pub gamma_bar_db: f64,
    pub tber: f64,
    pub kind: PolicyKind,
    pub ase: f64,
    pub mc_ase: f64,
    pub mc_ase_stderr: f64,
    pub mc_power: f64,
    pub mc_power_stderr: f64,
    pub mc_ber: f64,
    pub ber_residual: Option<f64>,
}

/// Solves and simulates every cell of the 4 scenarios × 3 SNRs × 2 targets × 4 policies grid.
pub fn constraint_grid(samples: usize) -> Result<Vec<CellResult>> {
    let mods = ModulationSet::default();
    let opts = SolverOptions {
        closed_form_checks: false,
        ..Default::default()
    };
    let mut out = Vec::new();
    let mut cell = 0u64;
    for s in wall_presets() {
        let co = coefficients(&s)?;
        for db in WALL_SNR_DB {
            for t in WALL_TBER {
                let link = LinkBudget::from_db(db, t)?;
                for kind in PolicyKind::ALL {
                    let plan = solve(kind, &link, &mods, &co, &opts)?;
                    let ase = ase_analytic(&plan, &co, &link)?;
                    let mc = mc_evaluate(
                        &plan,
                        &s.params,
                        &link,
                        samples,
                        point_seed(DEFAULT_SEED, cell),
                        &McOptions::default(),
                    )?;
                    cell += 1;
                    let res = &plan.diagnostics.residuals;
                    let ber_residual = res
                        .get("boundary_ber")
                        .or_else(|| res.get("instantaneous_ber"))
                        .copied();
                    out.push(CellResult {
                        scenario: s.name.clone(),
                        gamma_bar_db: db,
                        tber: t,
                        kind,
                        ase,
                        mc_ase: mc.ase,
                        mc_ase_stderr: mc.ase_stderr,
                        mc_power: mc.mean_power / link.s_bar,
                        mc_power_stderr: mc.mean_power_stderr / link.s_bar,
                        mc_ber: mc.mean_ber,
                        ber_residual,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Constraint residuals and analytic-vs-MC ASE on the shared grid.
///
/// Full mode applies the stated tolerances at 10⁶ samples. Quick mode runs
/// 10⁵ samples, where the 1 % power and 10 % BER bands are narrower than the
/// MC error for rare-transmission cells; there those two checks fall back to
/// four standard errors and say so.
pub fn constraints_and_ase(mode: Mode) -> (CheckReport, CheckReport) {
    let mut c5 = Check::new(5, "constraint residuals", 600);
    let mut c6 = Check::new(6, "analytic against Monte Carlo ASE", 600);
    let n = mode.samples();
    let cells = match constraint_grid(n) {
        Ok(v) => v,
        Err(e) => {
            c5.expect(false, format!("grid failed: {e}"));
            c6.expect(false, format!("grid failed: {e}"));
            return (c5.finish(), c6.finish());
        }
    };
    let mut worst_power: f64 = 0.0;
    let mut worst_ber: f64 = 0.0;
    let mut worst_aber: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for r in &cells {
        let tag = format!("{} {} dB TBER {:e} {}", r.scenario, r.gamma_bar_db, r.tber, r.kind);
        let dp = (r.mc_power - 1.0).abs();
        worst_power = worst_power.max(dp);
        let power_ok = match mode {
            Mode::Full => dp <= 0.01,
            Mode::Quick => dp <= 0.01 || dp <= 4.0 * r.mc_power_stderr,
        };
        c5.expect(
            power_ok,
            format!("{tag}: MC mean power {:.5} (±{:.5})", r.mc_power, r.mc_power_stderr),
        );
        if r.kind == PolicyKind::ArateCpowAber {
            let d = (r.mc_ber / r.tber - 1.0).abs();
            worst_aber = worst_aber.max(d);
            c5.expect(d <= 0.10, format!("{tag}: MC average BER {:.4e} vs target", r.mc_ber));
        } else {
            let b = r.ber_residual.unwrap_or(f64::INFINITY);
            worst_ber = worst_ber.max(b);
            c5.expect(b <= 1e-4, format!("{tag}: BER residual {b:.3e}"));
        }
        let z = (r.ase - r.mc_ase).abs() / r.mc_ase_stderr;
        let z = if r.ase == r.mc_ase { 0.0 } else { z };
        worst_z = worst_z.max(z);
        c6.expect(
            z <= 4.0,
            format!(
                "{tag}: analytic {:.5} vs MC {:.5} ± {:.5}",
                r.ase, r.mc_ase, r.mc_ase_stderr
            ),
        );
    }
    if mode == Mode::Quick {
        c5.info("quick mode: power band widened to 4 SE where the 10^5-sample error exceeds 1 %".into());
    }
    c5.info(format!(
        "{} cells, n = {n}: worst |power - S̄|/S̄ = {worst_power:.2e}, worst I-BER residual = {worst_ber:.2e}, worst |A-BER/TBER - 1| = {worst_aber:.3}",
        cells.len()
    ));
    c6.info(format!(
        "{} cells, n = {n}: worst |analytic - MC| = {worst_z:.2} SE",
        cells.len()
    ));
    let (mut r5, mut r6) = (c5.finish(), c6.finish());
    // the two criteria share one grid run and one budget
    r6.elapsed = r5.elapsed;
    r5.lines.retain(|l| !l.starts_with("FAIL runtime"));
    r6.lines.retain(|l| !l.starts_with("FAIL runtime"));
    let over = r5.elapsed > r5.budget;
    if over {
        let line = format!(
            "FAIL runtime {:.1} s over budget {} s",
            r5.elapsed.as_secs_f64(),
            r5.budget.as_secs()
        );
        r5.lines.push(line.clone());
        r6.lines.push(line);
    }
    r5.passed = !r5.lines.iter().any(|l| l.starts_with("FAIL"));
    r6.passed = !r6.lines.iter().any(|l| l.starts_with("FAIL"));
    (r5, r6)
}

/// Orderings at 20 dB / 1e-3 and across the two targets.
pub fn orderings() -> CheckReport {
    let mut c = Check::new(7, "policy, scenario and target orderings", 120);
    let mods = ModulationSet::default();
    let opts = SolverOptions {
        closed_form_checks: false,
        ..Default::default()
    };
    let link = LinkBudget::from_db(20.0, 1e-3).expect("valid link");

    let mut by_scenario: Vec<(String, Vec<f64>)> = Vec::new();
    for s in all_presets() {
        let Some(co) = c.fail_on_err(&s.name, coefficients(&s)) else {
            continue;
        };
        let mut ases = Vec::new();
        for kind in PolicyKind::ALL {
            let v = solve(kind, &link, &mods, &co, &opts).and_then(|p| ase_analytic(&p, &co, &link));
            ases.push(c.fail_on_err(&format!("{} {kind}", s.name), v).unwrap_or(f64::NAN));
        }
        let apow = ases[3];
        let best = ases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        c.expect(
            apow >= best,
            format!("(a) {}: arate-apow-iber {apow:.5} is not the maximum {best:.5}", s.name),
        );
        c.info(format!(
            "{:<16} ASE {}",
            s.name,
            PolicyKind::ALL
                .iter()
                .zip(&ases)
                .map(|(k, a)| format!("{k} {a:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        by_scenario.push((s.name.clone(), ases));
    }

    let walls: Vec<&(String, Vec<f64>)> = crate::scenario::WALL_SCENARIOS
        .iter()
        .filter_map(|n| by_scenario.iter().find(|s| s.0 == *n))
        .collect();
    for (j, kind) in PolicyKind::ALL.iter().enumerate() {
        for w in walls.windows(2) {
            c.expect(
                w[0].1[j] >= w[1].1[j],
                format!(
                    "(b) {kind}: ASE {} {:.5} < {} {:.5}",
                    w[0].0, w[0].1[j], w[1].0, w[1].1[j]
                ),
            );
        }
    }

    let grid: Vec<f64> = (0..=8).map(|k| 5.0 * k as f64).collect();
    let cfg = SweepConfig::default();
    let mut compared = 0;
    for s in all_presets() {
        let Some(co) = c.fail_on_err(&s.name, coefficients(&s)) else {
            continue;
        };
        for kind in PolicyKind::ALL {
            let hi = sweep(kind, &s, &co, 1e-3, &grid, &cfg);
            let lo = sweep(kind, &s, &co, 1e-6, &grid, &cfg);
            let (Some(hi), Some(lo)) = (c.fail_on_err("sweep", hi), c.fail_on_err("sweep", lo)) else {
                continue;
            };
            for (a, b) in hi.points.iter().zip(&lo.points) {
                compared += 1;
                c.expect(
                    a.ase >= b.ase,
                    format!(
                        "(c) {} {kind} {} dB: ASE at 1e-3 {:.5} < ASE at 1e-6 {:.5}",
                        s.name, a.gamma_bar_db, a.ase, b.ase
                    ),
                );
            }
        }
    }
    c.info(format!("(c) {compared} points compared on 0:40:5 dB"));
    c.finish()
}

/// Sweep CSV for the determinism check.
pub fn determinism_sweep(seed: u64) -> Result<String> {
    let s = crate::scenario::preset("same-room")?;
    let co = coefficients(&s)?;
    let cfg = SweepConfig {
        mc_samples: Some(20_000),
        seed,
        ..Default::default()
    };
    let grid: Vec<f64> = (0..=8).map(|k| 5.0 * k as f64).collect();
    let mut out = String::new();
    for kind in PolicyKind::ALL {
        out.push_str(&csv_rows(&sweep(kind, &s, &co, 1e-3, &grid, &cfg)?));
    }
    Ok(out)
}

/// Repeated seeded sweeps are byte-identical.
pub fn determinism() -> CheckReport {
    let mut c = Check::new(8, "seeded sweep determinism", 60);
    let a = determinism_sweep(DEFAULT_SEED);
    let b = determinism_sweep(DEFAULT_SEED);
    if let (Some(a), Some(b)) = (c.fail_on_err("first sweep", a), c.fail_on_err("second sweep", b)) {
        c.expect(a == b, "two sweeps with the same seed differ".into());
        c.info(format!("{} bytes, identical = {}", a.len(), a == b));
        let other = determinism_sweep(DEFAULT_SEED ^ 1);
        if let Some(o) = c.fail_on_err("reseeded sweep", other) {
            c.expect(o != a, "changing the seed did not change the MC columns".into());
        }
    }
    c.finish()
}

/// Runs all eight checks in order.
pub fn run_all(mode: Mode) -> Vec<CheckReport> {
    let (r5, r6) = constraints_and_ase(mode);
    vec![
        special_functions(),
        density_sanity(),
        sampler_vs_analytic(mode),
        ber_tail_oracle(),
        r5,
        r6,
        orderings(),
        determinism(),
    ]
}
