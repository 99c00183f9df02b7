//! Rate and power adaptation policies and their solvers.

mod arate_apow;
mod cpow;
mod crate_apow;
mod root;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ber::{constellation_size, LinkBudget, ModulationSet};
use crate::error::{Error, Result};
use crate::jfts::JftsCoefficients;

pub use arate_apow::solve_arate_apow_iber;
pub use cpow::{average_ber, solve_arate_cpow_aber, solve_arate_cpow_iber};
pub use crate_apow::solve_crate_apow_iber;

/// Relative tolerance for comparing a printed closed form with the solved root.
pub const CLOSED_FORM_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Adaptive rate, constant power, instantaneous BER target.
    ArateCpowIber,
    /// Adaptive rate, constant power, average BER target.
    ArateCpowAber,
    /// Fixed constellation, channel-inversion power, instantaneous BER target.
    CrateApowIber,
    /// Adaptive rate and power, instantaneous BER target.
    ArateApowIber,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::ArateCpowIber,
        PolicyKind::ArateCpowAber,
        PolicyKind::CrateApowIber,
        PolicyKind::ArateApowIber,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::ArateCpowIber => "arate-cpow-iber",
            PolicyKind::ArateCpowAber => "arate-cpow-aber",
            PolicyKind::CrateApowIber => "crate-apow-iber",
            PolicyKind::ArateApowIber => "arate-apow-iber",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|k| k.name()).collect()
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown policy '{s}'; valid: {}", Self::names().join(", "))))
    }
}

/// Transmit power as a function of SNR inside one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", content = "value", rename_all = "kebab-case")]
pub enum PowerLaw {
    /// S(γ) = S
    Constant(f64),
    /// S(γ) = a/γ
    Inverse(f64),
}

impl PowerLaw {
    pub fn at(&self, gamma: f64) -> f64 {
        match *self {
            PowerLaw::Constant(s) => s,
            PowerLaw::Inverse(a) => a / gamma,
        }
    }
}

/// SNR interval [lower, upper) served by one constellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub bits: u32,
    pub lower: f64,
    pub upper: f64,
    pub power: PowerLaw,
}

impl Region {
    pub fn size(&self) -> f64 {
        constellation_size(self.bits)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub residuals: BTreeMap<String, f64>,
    pub iterations: usize,
    pub formula_mismatch_flags: Vec<String>,
    pub lambert_domain_failures: usize,
    pub notes: Vec<String>,
}

/// How the average-BER constraint weights regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BerWeighting {
    /// Errors per transmitted bit.
    #[default]
    BitWeighted,
    /// Errors per transmitted symbol-time.
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Evaluate the printed closed forms at the solution and flag disagreements.
    pub closed_form_checks: bool,
    pub max_iterations: usize,
    pub ber_weighting: BerWeighting,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            closed_form_checks: true,
            max_iterations: 200,
            ber_weighting: BerWeighting::BitWeighted,
        }
    }
}

/// A solved adaptation plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyPlan {
    pub kind: PolicyKind,
    pub link: LinkBudget,
    /// Transmitting regions in increasing SNR order; nothing is sent below the first.
    pub regions: Vec<Region>,
    pub lambda: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl PolicyPlan {
    /// Plan that never transmits.
    pub fn always_off(kind: PolicyKind, link: LinkBudget) -> Self {
        Self {
            kind,
            link,
            regions: Vec::new(),
            lambda: None,
            diagnostics: Diagnostics::default(),
        }
    }

    /// γ₀; +∞ when nothing is ever sent.
    pub fn cutoff(&self) -> f64 {
        self.regions.first().map_or(f64::INFINITY, |r| r.lower)
    }

    pub fn boundaries(&self) -> Vec<f64> {
        self.regions.iter().map(|r| r.lower).collect()
    }

    pub fn max_bits(&self) -> u32 {
        self.regions.iter().map(|r| r.bits).max().unwrap_or(0)
    }

    /// Region serving SNR `gamma`, if any.
    pub fn region_at(&self, gamma: f64) -> Option<&Region> {
        let idx = self.regions.partition_point(|r| r.lower <= gamma);
        if idx == 0 {
            return None;
        }
        let r = &self.regions[idx - 1];
        (gamma < r.upper).then_some(r)
    }

    /// S(γ): zero below the cutoff.
    pub fn power(&self, gamma: f64) -> f64 {
        self.region_at(gamma).map_or(0.0, |r| r.power.at(gamma))
    }

    /// Structural checks: ordered, contiguous regions with nonnegative power.
    pub fn check(&self) -> Result<()> {
        for w in self.regions.windows(2) {
            if !(w[1].lower > w[0].lower) || w[0].upper != w[1].lower {
                return Err(Error::Infeasible(format!(
                    "{}: region boundaries not strictly increasing ({} then {})",
                    self.kind, w[0].lower, w[1].lower
                )));
            }
        }
        for r in &self.regions {
            let p = r.power.at(r.lower.max(f64::MIN_POSITIVE));
            if !(p >= 0.0) {
                return Err(Error::Infeasible(format!(
                    "{}: negative power {p} in {}-bit region",
                    self.kind, r.bits
                )));
            }
        }
        Ok(())
    }

    pub fn document(&self) -> PlanDocument {
        let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
        PlanDocument {
            kind: self.kind,
            gamma_bar_db: self.link.gamma_bar_db(),
            tber: self.link.tber,
            s_bar: self.link.s_bar,
            cutoff: finite(self.cutoff()),
            boundaries: self.boundaries(),
            bits: self.regions.iter().map(|r| r.bits).collect(),
            powers: self.regions.iter().map(|r| r.power.at(r.lower)).collect(),
            power_laws: self.regions.iter().map(|r| r.power).collect(),
            lambda: self.lambda,
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Pretty-printed JSON plan document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.document()).expect("plan document serialises")
    }
}

/// Serialised form of a plan. `powers` holds S at each region's lower boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub kind: PolicyKind,
    pub gamma_bar_db: f64,
    pub tber: f64,
    pub s_bar: f64,
    pub cutoff: Option<f64>,
    pub boundaries: Vec<f64>,
    pub bits: Vec<u32>,
    pub powers: Vec<f64>,
    pub power_laws: Vec<PowerLaw>,
    pub lambda: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// Solves `kind` for one link.
pub fn solve(
    kind: PolicyKind,
    link: &LinkBudget,
    mods: &ModulationSet,
    coeffs: &JftsCoefficients,
    opts: &SolverOptions,
) -> Result<PolicyPlan> {
    let plan = match kind {
        PolicyKind::ArateCpowIber => solve_arate_cpow_iber(link, mods, coeffs, opts),
        PolicyKind::ArateCpowAber => solve_arate_cpow_aber(link, mods, coeffs, opts),
        PolicyKind::CrateApowIber => solve_crate_apow_iber(link, mods, coeffs, opts),
        PolicyKind::ArateApowIber => solve_arate_apow_iber(link, mods, coeffs, opts),
    }?;
    plan.check()?;
    Ok(plan)
}

/// S(γ) of a solved plan.
pub fn power_profile(plan: &PolicyPlan, gamma: f64) -> f64 {
    plan.power(gamma)
}

/// Builds contiguous regions from lower edges; the last region is open-ended.
pub fn regions_from(bits: &[u32], lowers: &[f64], power: impl Fn(usize) -> PowerLaw) -> Vec<Region> {
    (0..bits.len())
        .map(|j| Region {
            bits: bits[j],
            lower: lowers[j],
            upper: lowers.get(j + 1).copied().unwrap_or(f64::INFINITY),
            power: power(j),
        })
        .collect()
}

/// |a - b|/|b|, with exact zero when both vanish.
pub(crate) fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

pub(crate) fn compare_closed_form(diag: &mut Diagnostics, what: String, printed: f64, root: f64, failures: usize) {
    diag.lambert_domain_failures += failures;
    let d = rel_diff(printed, root);
    if !(d <= CLOSED_FORM_TOL) {
        diag.formula_mismatch_flags.push(format!(
            "{what}: closed form gives {printed:.6e}, defining constraint gives {root:.6e}"
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        let e = "bogus".parse::<PolicyKind>().unwrap_err().to_string();
        assert!(e.contains("arate-apow-iber"));
    }

    #[test]
    fn power_profile_of_hand_plan() {
        let link = LinkBudget::new(100.0, 1e-3).unwrap();
        let mut plan = PolicyPlan::always_off(PolicyKind::CrateApowIber, link);
        assert_eq!(plan.power(50.0), 0.0);
        assert!(plan.cutoff().is_infinite());
        plan.regions = regions_from(&[8], &[4.0], |_| PowerLaw::Inverse(40.0));
        assert_eq!(plan.power(3.9), 0.0);
        assert_eq!(plan.power(8.0), 0.5 * plan.power(4.0));
        plan.regions = regions_from(&[2, 4], &[1.0, 3.0], |j| PowerLaw::Constant([2.0, 2.0][j]));
        assert_eq!(plan.power(2.0), 2.0);
        assert_eq!(plan.power(1e9), 2.0);
        assert_eq!(plan.region_at(3.0).unwrap().bits, 4);
        plan.check().unwrap();
        let doc = plan.to_json();
        assert!(doc.contains("\"boundaries\"") && doc.contains("\"lambda\": null"));
    }
}
