//! Average spectral efficiency: closed form, Monte Carlo estimate and γ̄ sweeps.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ber::{LinkBudget, ModulationSet};
use crate::error::{Error, Result};
use crate::jfts::{db_to_linear, sample_snr, stream_rng, JftsCoefficients, JftsParams, SnrDensity, CHUNK};
use crate::policies::{self, PolicyKind, PolicyPlan, SolverOptions};

/// Exact CSV header of a sweep.
pub const CSV_HEADER: &str = "policy,scenario,tber,gamma_bar_db,ase_analytic,ase_mc,ase_mc_stderr,mean_power,mean_ber";

/// Sub-stream offset for Bernoulli bit draws, disjoint from the SNR streams.
const BERNOULLI_STREAM: u64 = 1 << 40;

/// Σ_l p_l·P(γ_l ≤ γ < γ_{l+1}) for a plan against an already-built density.
pub fn ase_of(plan: &PolicyPlan, d: &SnrDensity) -> f64 {
    plan.regions
        .iter()
        .map(|r| r.bits as f64 * d.interval(r.lower, r.upper).unwrap_or(0.0))
        .sum()
}

/// Closed-form ASE in bits/s/Hz.
pub fn ase_analytic(plan: &PolicyPlan, coeffs: &JftsCoefficients, link: &LinkBudget) -> Result<f64> {
    if (plan.link.gamma_bar - link.gamma_bar).abs() > 1e-12 * link.gamma_bar {
        return Err(Error::invalid("plan was solved for a different average SNR"));
    }
    let d = coeffs.density(link.gamma_bar)?;
    Ok(ase_of(plan, &d))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct McOptions {
    /// Draw bit errors instead of accumulating their expectation.
    pub bernoulli: bool,
}

/// Monte Carlo estimates for one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub count: usize,
    pub seed: u64,
    pub ase: f64,
    pub ase_stderr: f64,
    pub mean_power: f64,
    pub mean_power_stderr: f64,
    /// Bit errors per transmitted bit.
    pub mean_ber: f64,
    pub mean_ber_stderr: f64,
    /// (bits, probability); bits = 0 is the no-transmission state.
    pub occupancy: Vec<(u32, f64)>,
    pub occupancy_stderr: Vec<f64>,
    /// Errors per transmitted bit inside each transmitting region, same order as the plan.
    pub region_ber: Vec<f64>,
}

/// Assigns sampled SNRs to regions and accumulates bits, power and bit errors.
pub fn mc_evaluate(
    plan: &PolicyPlan,
    params: &JftsParams,
    link: &LinkBudget,
    count: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<McReport> {
    if count < 10_000 {
        return Err(Error::invalid(format!(
            "Monte Carlo needs at least 10^4 samples, got {count}"
        )));
    }
    let stream = sample_snr(params, link.gamma_bar, count, seed)?;
    let nreg = plan.regions.len();
    let s_bar = link.s_bar;

    // per-sample (region index or nreg for off, bits, power, errors)
    let per: Vec<(usize, f64, f64, f64)> = stream
        .samples
        .par_chunks(CHUNK)
        .enumerate()
        .flat_map_iter(|(ci, chunk)| {
            let mut rng = opts.bernoulli.then(|| stream_rng(seed, BERNOULLI_STREAM + ci as u64));
            chunk
                .iter()
                .map(|&g| {
                    let idx = plan.regions.partition_point(|r| r.lower <= g);
                    if idx == 0 || g >= plan.regions[idx - 1].upper {
                        return (nreg, 0.0, 0.0, 0.0);
                    }
                    let r = &plan.regions[idx - 1];
                    let s = r.power.at(g);
                    let ber = 0.2 * (-1.6 * g * s / (s_bar * (r.size() - 1.0))).exp();
                    let bits = r.bits as f64;
                    let errs = match rng.as_mut() {
                        Some(rng) => draw_errors(rng, r.bits, ber),
                        None => bits * ber,
                    };
                    (idx - 1, bits, s, errs)
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let n = count as f64;
    let mut occ = vec![0usize; nreg + 1];
    let (mut sb, mut sp, mut se) = (0.0, 0.0, 0.0);
    let (mut sb2, mut sp2) = (0.0, 0.0);
    let mut reg_bits = vec![0.0; nreg];
    let mut reg_errs = vec![0.0; nreg];
    for &(i, b, p, e) in &per {
        occ[i] += 1;
        sb += b;
        sb2 += b * b;
        sp += p;
        sp2 += p * p;
        se += e;
        if i < nreg {
            reg_bits[i] += b;
            reg_errs[i] += e;
        }
    }
    let mean_b = sb / n;
    let mean_p = sp / n;
    let var = |s2: f64, m: f64| ((s2 / n - m * m) * n / (n - 1.0)).max(0.0);
    let ber = if sb > 0.0 { se / sb } else { 0.0 };
    // delta method for the ratio Σe/Σb
    let ber_se = if sb > 0.0 {
        let ss: f64 = per.iter().map(|&(_, b, _, e)| (e - ber * b).powi(2)).sum();
        ss.sqrt() / sb
    } else {
        0.0
    };

    let mut occupancy = vec![(0u32, occ[nreg] as f64 / n)];
    occupancy.extend(plan.regions.iter().zip(&occ).map(|(r, &c)| (r.bits, c as f64 / n)));
    let occupancy_stderr = occupancy.iter().map(|&(_, p)| (p * (1.0 - p) / n).sqrt()).collect();
    let region_ber = reg_bits
        .iter()
        .zip(&reg_errs)
        .map(|(&b, &e)| if b > 0.0 { e / b } else { 0.0 })
        .collect();

    Ok(McReport {
        count,
        seed,
        ase: mean_b,
        ase_stderr: (var(sb2, mean_b) / n).sqrt(),
        mean_power: mean_p,
        mean_power_stderr: (var(sp2, mean_p) / n).sqrt(),
        mean_ber: ber,
        mean_ber_stderr: ber_se,
        occupancy,
        occupancy_stderr,
        region_ber,
    })
}

fn draw_errors<R: Rng>(rng: &mut R, bits: u32, ber: f64) -> f64 {
    Binomial::new(bits as u64, ber.clamp(0.0, 1.0)).map_or(0.0, |b| b.sample(rng) as f64)
}

/// Named channel parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub params: JftsParams,
}

/// Summary of the Monte Carlo run at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPoint {
    pub ase: f64,
    pub ase_stderr: f64,
    pub mean_power: f64,
    pub mean_ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsePoint {
    pub gamma_bar_db: f64,
    pub ase: f64,
    /// Set when the solver failed and the point was recorded as ASE 0.
    pub infeasible: Option<String>,
    pub mc: Option<McPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AseCurve {
    pub kind: PolicyKind,
    pub scenario: String,
    pub tber: f64,
    pub points: Vec<AsePoint>,
}

impl AseCurve {
    /// Points at which the analytic ASE drops by more than `tol` as γ̄ grows.
    pub fn monotonicity_violations(&self, tol: f64) -> Vec<f64> {
        self.points
            .windows(2)
            .filter(|w| w[1].ase < w[0].ase - tol)
            .map(|w| w[1].gamma_bar_db)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub mods: ModulationSet,
    pub solver: SolverOptions,
    /// Monte Carlo samples per point; `None` leaves the MC columns empty.
    pub mc_samples: Option<usize>,
    pub seed: u64,
    pub mc: McOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            mods: ModulationSet::default(),
            solver: SolverOptions {
                closed_form_checks: false,
                ..Default::default()
            },
            mc_samples: None,
            seed: DEFAULT_SEED,
            mc: McOptions::default(),
        }
    }
}

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5EED_2019;

/// Deterministic per-point seed.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Solves and evaluates one policy over a γ̄ grid (dB). Points run in parallel.
pub fn sweep(
    kind: PolicyKind,
    scenario: &Scenario,
    coeffs: &JftsCoefficients,
    tber: f64,
    grid_db: &[f64],
    cfg: &SweepConfig,
) -> Result<AseCurve> {
    if grid_db.is_empty() {
        return Err(Error::invalid("empty SNR grid"));
    }
    if grid_db.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("SNR grid must be strictly increasing"));
    }
    let points = grid_db
        .par_iter()
        .enumerate()
        .map(|(i, &db)| -> Result<AsePoint> {
            let link = LinkBudget::new(db_to_linear(db), tber)?;
            let d = coeffs.density(link.gamma_bar)?;
            let plan = match policies::solve(kind, &link, &cfg.mods, coeffs, &cfg.solver) {
                Ok(p) => p,
                Err(Error::Infeasible(msg)) | Err(Error::Convergence { what: msg, .. }) => {
                    return Ok(AsePoint {
                        gamma_bar_db: db,
                        ase: 0.0,
                        infeasible: Some(msg),
                        mc: None,
                    });
                }
                Err(e) => return Err(e),
            };
            let mc = match cfg.mc_samples {
                Some(n) => {
                    let r = mc_evaluate(
                        &plan,
                        &scenario.params,
                        &link,
                        n,
                        point_seed(cfg.seed, i as u64),
                        &cfg.mc,
                    )?;
                    Some(McPoint {
                        ase: r.ase,
                        ase_stderr: r.ase_stderr,
                        mean_power: r.mean_power,
                        mean_ber: r.mean_ber,
                    })
                }
                None => None,
            };
            Ok(AsePoint {
                gamma_bar_db: db,
                ase: ase_of(&plan, &d),
                infeasible: None,
                mc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AseCurve {
        kind,
        scenario: scenario.name.clone(),
        tber,
        points,
    })
}

/// CSV rows (no header) for one curve.
pub fn csv_rows(curve: &AseCurve) -> String {
    let mut out = String::new();
    for p in &curve.points {
        let (mc_ase, mc_se, pw, ber) = match p.mc {
            Some(m) => (fmt(m.ase), fmt(m.ase_stderr), fmt(m.mean_power), fmt(m.mean_ber)),
            None => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{:e},{},{},{mc_ase},{mc_se},{pw},{ber}\n",
            curve.kind,
            curve.scenario,
            curve.tber,
            p.gamma_bar_db,
            fmt(p.ase)
        ));
    }
    out
}

fn fmt(x: f64) -> String {
    format!("{x:.10e}")
}
