use super::root::{bisect_log, bracket_or_slack, Bracket};
use super::{
    compare_closed_form, regions_from, rel_diff, Diagnostics, PolicyKind, PolicyPlan, PowerLaw, SolverOptions,
};
use crate::ber::{ber_exponent, constellation_size, inst_ber, LinkBudget, ModulationSet};
use crate::error::Result;
use crate::jfts::{literal, JftsCoefficients, SnrDensity};
use crate::quad;

/// ∫_{γ₀}^∞ (a/γ)·f(γ) dγ by adaptive quadrature.
pub(crate) fn inverse_power_quadrature(d: &SnrDensity, a: f64, lower: f64, upper: f64) -> f64 {
    quad::integrate_scaled(
        |g| a / g * d.pdf_unchecked(g),
        lower,
        upper,
        d.gamma_bar,
        1e-12 * a / d.gamma_bar,
    )
}

/// Largest constellation at every SNR above the cutoff, with channel-inversion
/// power S(γ) = (M-1)·ln(0.2/TBER)·S̄/(1.6γ) so the BER is TBER throughout.
pub fn solve_crate_apow_iber(
    link: &LinkBudget,
    mods: &ModulationSet,
    coeffs: &JftsCoefficients,
    opts: &SolverOptions,
) -> Result<PolicyPlan> {
    let d = coeffs.density(link.gamma_bar)?;
    let bits = mods.max_bits();
    let m = constellation_size(bits);
    let coef = (m - 1.0) * ber_exponent(link.tber) * link.s_bar;
    let mut excess = |g0: f64| coef * d.inverse_tail(g0) / link.s_bar - 1.0;
    let (g0, iters, bracket_note) = match bracket_or_slack(&mut excess, link.gamma_bar, 10.0, 12, "cutoff power integral")? {
        Bracket::Root(lo, hi) => {
            let (g0, iters) = bisect_log(&mut excess, lo, hi, 1e-13, 400, "cutoff bisection")?;
            (g0, iters, format!("cutoff bracket [{lo:.4e}, {hi:.4e}]"))
        }
        Bracket::Slack { floor, value } => (
            floor,
            0,
            format!(
                "average-power constraint slack: inverting the channel at every SNR above {floor:.3e} uses only {:.6}·S̄; cutoff pinned at the bracket floor",
                value + 1.0
            ),
        ),
    };

    let mut plan = PolicyPlan {
        kind: PolicyKind::CrateApowIber,
        link: *link,
        regions: regions_from(&[bits], &[g0], |_| PowerLaw::Inverse(coef)),
        lambda: None,
        diagnostics: Diagnostics {
            iterations: iters,
            ..Default::default()
        },
    };
    let diag = &mut plan.diagnostics;
    diag.residuals
        .insert("average_power".into(), rel_diff(coef * d.inverse_tail(g0), link.s_bar));
    diag.residuals.insert(
        "average_power_quadrature".into(),
        rel_diff(inverse_power_quadrature(&d, coef, g0, f64::INFINITY), link.s_bar),
    );
    let grid: Vec<f64> = (0..8).map(|k| g0 * 2f64.powi(k)).collect();
    let ber_res = grid
        .iter()
        .map(|&g| rel_diff(inst_ber(g, m, coef / g / link.s_bar).unwrap_or(f64::NAN), link.tber))
        .fold(0.0, f64::max);
    diag.residuals.insert("instantaneous_ber".into(), ber_res);
    diag.notes.push(bracket_note);
    if opts.closed_form_checks {
        for &g in &grid[..3] {
            let cf = literal::crate_power_closed_form(&coeffs.series, link.gamma_bar, link.s_bar, g, link.tber);
            compare_closed_form(
                diag,
                format!("transmit power at SNR {g:.4e}"),
                cf.value,
                coef / g,
                cf.domain_failures,
            );
        }
    }
    Ok(plan)
}
