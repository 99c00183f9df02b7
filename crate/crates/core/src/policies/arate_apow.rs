use super::crate_apow::inverse_power_quadrature;
use super::root::{bisect_log, bracket_or_slack, Bracket};
use super::{
    compare_closed_form, regions_from, rel_diff, Diagnostics, PolicyKind, PolicyPlan, PowerLaw, SolverOptions,
};
use crate::ber::{ber_exponent, constellation_size, inst_ber, LinkBudget, ModulationSet};
use crate::error::{Error, Result};
use crate::jfts::{literal, JftsCoefficients, SnrDensity};

/// Boundary spacing γ_l/κ = (M_l - M_{l-1})/(p_l - p_{l-1}), with the off mode as M = 1, p = 0.
fn spacings(bits: &[u32]) -> Vec<f64> {
    let mut prev = (1.0, 0.0);
    bits.iter()
        .map(|&b| {
            let cur = (constellation_size(b), b as f64);
            let s = (cur.0 - prev.0) / (cur.1 - prev.1);
            prev = cur;
            s
        })
        .collect()
}

fn average_power(d: &SnrDensity, bits: &[u32], lowers: &[f64], c: f64) -> f64 {
    let tails: Vec<f64> = lowers.iter().map(|&g| d.inverse_tail(g)).chain([0.0]).collect();
    bits.iter()
        .enumerate()
        .map(|(l, &b)| (constellation_size(b) - 1.0) * c * (tails[l] - tails[l + 1]))
        .sum()
}

/// Adaptive rate and power with the BER held at TBER for every SNR.
///
/// Inside region l the power inverts the channel, S(γ) = (M_l-1)·c·S̄/γ with
/// c = ln(0.2/TBER)/1.6. Maximising Σ p_l·P_l under the average-power constraint
/// puts the boundaries at γ_l = κ·(M_l - M_{l-1})/(p_l - p_{l-1}), i.e. the
/// spacing condition S_{l-1}(γ_l) - S_l(γ_l) = (p_l - p_{l-1})/λ with
/// λ = -κ/(c·S̄). κ is bisected until the average power is S̄.
pub fn solve_arate_apow_iber(
    link: &LinkBudget,
    mods: &ModulationSet,
    coeffs: &JftsCoefficients,
    opts: &SolverOptions,
) -> Result<PolicyPlan> {
    let d = coeffs.density(link.gamma_bar)?;
    let bits: Vec<u32> = mods.transmitting().collect();
    let sp = spacings(&bits);
    if sp.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Infeasible(format!(
            "boundary spacings {sp:?} are not increasing; the modulation set is not convex in (bits, M)"
        )));
    }
    let c = ber_exponent(link.tber);
    let lowers_for = |kappa: f64| sp.iter().map(|s| kappa * s).collect::<Vec<f64>>();
    let mut excess = |kappa: f64| average_power(&d, &bits, &lowers_for(kappa), c) - 1.0;
    let (kappa, iters, bracket_note) = match bracket_or_slack(&mut excess, 1.0, 10.0, 12, "power multiplier")? {
        Bracket::Root(lo, hi) => {
            let (kappa, iters) = bisect_log(&mut excess, lo, hi, 1e-13, 400, "power multiplier bisection")?;
            (kappa, iters, format!("multiplier bracket [{lo:.4e}, {hi:.4e}] in kappa = -lambda*c*S_bar"))
        }
        Bracket::Slack { floor, value } => (
            floor,
            0,
            format!(
                "average-power constraint slack: with kappa at the bracket floor {floor:.3e} the plan uses only {:.6}·S̄",
                value + 1.0
            ),
        ),
    };

    let lowers = lowers_for(kappa);
    let s_bar = link.s_bar;
    let coef = |l: usize| (constellation_size(bits[l]) - 1.0) * c * s_bar;
    let lambda = -kappa / (c * s_bar);
    let mut plan = PolicyPlan {
        kind: PolicyKind::ArateApowIber,
        link: *link,
        regions: regions_from(&bits, &lowers, |l| PowerLaw::Inverse(coef(l))),
        lambda: Some(lambda),
        diagnostics: Diagnostics {
            iterations: iters,
            ..Default::default()
        },
    };

    let quad_power: f64 = plan
        .regions
        .iter()
        .map(|r| match r.power {
            PowerLaw::Inverse(a) => inverse_power_quadrature(&d, a, r.lower, r.upper),
            PowerLaw::Constant(_) => unreachable!(),
        })
        .sum();
    let boundary = plan
        .regions
        .iter()
        .map(|r| {
            rel_diff(
                inst_ber(r.lower, r.size(), r.power.at(r.lower) / s_bar).unwrap_or(f64::NAN),
                link.tber,
            )
        })
        .fold(0.0, f64::max);
    let mut kt: f64 = 0.0;
    for l in 0..bits.len() {
        let g = lowers[l];
        let (s_prev, p_prev) = if l == 0 {
            (0.0, 0.0)
        } else {
            (coef(l - 1) / g, bits[l - 1] as f64)
        };
        let rhs = (bits[l] as f64 - p_prev) / lambda;
        kt = kt.max(rel_diff(s_prev - coef(l) / g, rhs));
    }
    let diag = &mut plan.diagnostics;
    diag.residuals.insert(
        "average_power".into(),
        rel_diff(s_bar * average_power(&d, &bits, &lowers, c), s_bar),
    );
    diag.residuals
        .insert("average_power_quadrature".into(), rel_diff(quad_power, s_bar));
    diag.residuals.insert("boundary_ber".into(), boundary);
    diag.residuals.insert("kuhn_tucker".into(), kt);
    diag.notes.push(bracket_note);
    if opts.closed_form_checks {
        for (l, r) in plan.regions.iter().enumerate() {
            let cf =
                literal::apow_power_closed_form(&coeffs.series, link.gamma_bar, s_bar, r.lower, r.size(), link.tber);
            compare_closed_form(
                diag,
                format!("power at lower boundary of {}-bit mode", r.bits),
                cf.value,
                coef(l) / r.lower,
                cf.domain_failures,
            );
        }
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jfts::{params_from_db, precompute, NumericsConfig};

    #[test]
    fn default_spacing_doubles() {
        let s = spacings(&[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(s, vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0]);
        // 2^b is convex in b, so chord slopes grow for any increasing bit list
        assert_eq!(spacings(&[2, 4, 5]), vec![1.5, 6.0, 16.0]);
    }

    #[test]
    fn constraints_met() {
        let c = precompute(&params_from_db(13.0, 12.0, 0.9).unwrap(), &NumericsConfig::default()).unwrap();
        let link = LinkBudget::from_db(20.0, 1e-3).unwrap();
        let opts = SolverOptions {
            closed_form_checks: false,
            ..Default::default()
        };
        let plan = solve_arate_apow_iber(&link, &ModulationSet::default(), &c, &opts).unwrap();
        let r = &plan.diagnostics.residuals;
        assert!(r["average_power"] < 1e-10, "{r:?}");
        assert!(r["average_power_quadrature"] < 1e-6, "{r:?}");
        assert!(r["kuhn_tucker"] < 1e-12, "{r:?}");
        assert!(plan.lambda.unwrap() < 0.0);
    }
}
