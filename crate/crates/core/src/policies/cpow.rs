use super::root::bisect_log;
use super::{
    compare_closed_form, regions_from, rel_diff, BerWeighting, Diagnostics, PolicyKind, PolicyPlan, PowerLaw,
    SolverOptions,
};
use crate::ber::{ber_exponent, constellation_size, inst_ber, LinkBudget, ModulationSet};
use crate::error::{Error, Result};
use crate::jfts::{literal, JftsCoefficients, SnrDensity};

/// Constant-power layout for a common instantaneous BER target at every boundary.
#[derive(Debug, Clone)]
struct Layout {
    /// S/S̄
    ratio: f64,
    lowers: Vec<f64>,
    iterations: usize,
}

/// Root of x = k1·P(γ ≥ x) on [0, k1].
///
/// Damped fixed-point iteration whose damping 1/(1 + k1·f(x)) makes each step a
/// Newton step on x - k1·P(γ ≥ x); iterates leaving the current bracket are
/// replaced by its midpoint.
fn cutoff_fixed_point(d: &SnrDensity, k1: f64, max_iter: usize) -> Result<(f64, usize)> {
    if k1 == 0.0 {
        return Ok((0.0, 0));
    }
    let (mut lo, mut hi) = (0.0, k1);
    let mut x = k1;
    for it in 1..=max_iter {
        let h = x - k1 * d.ccdf(x);
        if h == 0.0 {
            return Ok((x, it));
        }
        if h > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = 1.0 + k1 * d.pdf_unchecked(x);
        let mut next = x - h / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-13 * x || hi - lo <= 1e-15 * hi {
            return Ok((next, it));
        }
        x = next;
    }
    Err(Error::Convergence {
        what: "cutoff fixed point".into(),
        iterations: max_iter,
    })
}

fn layout(d: &SnrDensity, bits: &[u32], target: f64, max_iter: usize) -> Result<Layout> {
    let c = if target >= 0.2 { 0.0 } else { ber_exponent(target) };
    let m1 = constellation_size(bits[0]);
    let (x, iterations) = cutoff_fixed_point(d, (m1 - 1.0) * c, max_iter)?;
    let p = d.ccdf(x);
    if !(p > 0.0) {
        return Err(Error::Infeasible(format!(
            "cutoff {x:.3e} leaves no probability of transmission"
        )));
    }
    let lowers = bits.iter().map(|&b| (constellation_size(b) - 1.0) * c * p).collect();
    Ok(Layout {
        ratio: 1.0 / p,
        lowers,
        iterations,
    })
}

fn plan_from(kind: PolicyKind, link: &LinkBudget, bits: &[u32], lay: &Layout) -> PolicyPlan {
    let s = lay.ratio * link.s_bar;
    PolicyPlan {
        kind,
        link: *link,
        regions: regions_from(bits, &lay.lowers, |_| PowerLaw::Constant(s)),
        lambda: None,
        diagnostics: Diagnostics {
            iterations: lay.iterations,
            ..Default::default()
        },
    }
}

/// Σ_l w_l ∫_{region l} BER f / Σ_l w_l ∫_{region l} f with w_l = bits or 1.
pub fn average_ber(plan: &PolicyPlan, d: &SnrDensity, weighting: BerWeighting) -> f64 {
    let s_bar = plan.link.s_bar;
    let (mut num, mut den) = (0.0, 0.0);
    for r in &plan.regions {
        let w = match weighting {
            BerWeighting::BitWeighted => r.bits as f64,
            BerWeighting::Unweighted => 1.0,
        };
        let m = r.size();
        let prob = d.interval(r.lower, r.upper).unwrap_or(0.0);
        let errs = match r.power {
            PowerLaw::Constant(s) => {
                let c = 1.6 * s / (s_bar * (m - 1.0));
                0.2 * (d.exp_tail(r.lower, c) - d.exp_tail(r.upper, c))
            }
            // γ·S(γ) is constant, so the BER is too
            PowerLaw::Inverse(a) => 0.2 * (-1.6 * a / (s_bar * (m - 1.0))).exp() * prob,
        };
        num += w * errs;
        den += w * prob;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn boundary_residual(plan: &PolicyPlan, target: f64) -> f64 {
    plan.regions
        .iter()
        .map(|r| {
            let ratio = r.power.at(r.lower) / plan.link.s_bar;
            rel_diff(inst_ber(r.lower, r.size(), ratio).unwrap_or(f64::NAN), target)
        })
        .fold(0.0, f64::max)
}

fn power_residual(plan: &PolicyPlan, d: &SnrDensity) -> f64 {
    let s = plan.regions.first().map_or(0.0, |r| r.power.at(r.lower));
    rel_diff(s * d.ccdf(plan.cutoff()), plan.link.s_bar)
}

fn closed_form_checks(plan: &mut PolicyPlan, coeffs: &JftsCoefficients, target: f64) {
    let link = plan.link;
    let s = plan.regions[0].power.at(0.0);
    let mut diag = std::mem::take(&mut plan.diagnostics);
    for r in &plan.regions {
        let cf = literal::boundary_closed_form(&coeffs.series, link.gamma_bar, link.s_bar, s, r.size(), target);
        compare_closed_form(
            &mut diag,
            format!("boundary of {}-bit mode", r.bits),
            cf.value,
            r.lower,
            cf.domain_failures,
        );
    }
    let ps = literal::cpow_power_series(&coeffs.series, link.gamma_bar, link.s_bar, plan.cutoff());
    compare_closed_form(&mut diag, "constant transmit power".into(), ps, s, 0);
    plan.diagnostics = diag;
}

/// Adaptive rate, constant power, BER equal to the target at every region boundary.
pub fn solve_arate_cpow_iber(
    link: &LinkBudget,
    mods: &ModulationSet,
    coeffs: &JftsCoefficients,
    opts: &SolverOptions,
) -> Result<PolicyPlan> {
    let d = coeffs.density(link.gamma_bar)?;
    let bits: Vec<u32> = mods.transmitting().collect();
    let lay = match layout(&d, &bits, link.tber, opts.max_iterations) {
        Err(Error::Infeasible(msg)) => {
            let mut plan = PolicyPlan::always_off(PolicyKind::ArateCpowIber, *link);
            plan.diagnostics.notes.push(msg);
            return Ok(plan);
        }
        other => other?,
    };
    let mut plan = plan_from(PolicyKind::ArateCpowIber, link, &bits, &lay);
    let (pw, bb) = (power_residual(&plan, &d), boundary_residual(&plan, link.tber));
    plan.diagnostics.residuals.insert("average_power".into(), pw);
    plan.diagnostics.residuals.insert("boundary_ber".into(), bb);
    if opts.closed_form_checks {
        closed_form_checks(&mut plan, coeffs, link.tber);
    }
    Ok(plan)
}

/// Adaptive rate, constant power, average BER equal to the target.
///
/// Every boundary sits at a common instantaneous target T' = TBER - 1/λ;
/// T' is bisected (log scale) until the average BER meets TBER.
pub fn solve_arate_cpow_aber(
    link: &LinkBudget,
    mods: &ModulationSet,
    coeffs: &JftsCoefficients,
    opts: &SolverOptions,
) -> Result<PolicyPlan> {
    let kind = PolicyKind::ArateCpowAber;
    let d = coeffs.density(link.gamma_bar)?;
    let bits: Vec<u32> = mods.transmitting().collect();
    let tber = link.tber;
    let mut evals = 0usize;
    let mut excess = |tp: f64| -> f64 {
        evals += 1;
        match layout(&d, &bits, tp, opts.max_iterations) {
            Ok(lay) => average_ber(&plan_from(kind, link, &bits, &lay), &d, opts.ber_weighting) - tber,
            Err(_) => f64::NAN,
        }
    };

    // T' → 0.2 puts the top mode everywhere at S = S̄
    let top = excess(0.2);
    if !(top > 0.0) {
        let top_bits = *bits.last().unwrap();
        let mut plan = PolicyPlan {
            kind,
            link: *link,
            regions: regions_from(&[top_bits], &[0.0], |_| PowerLaw::Constant(link.s_bar)),
            lambda: None,
            diagnostics: Diagnostics::default(),
        };
        let avg = average_ber(&plan, &d, opts.ber_weighting);
        plan.diagnostics
            .residuals
            .insert("average_ber".into(), rel_diff(avg, tber));
        plan.diagnostics
            .residuals
            .insert("average_power".into(), power_residual(&plan, &d));
        plan.diagnostics.notes.push(format!(
            "average-BER constraint inactive: the top mode at every SNR already gives {avg:.4e} < {tber:.1e}"
        ));
        return Ok(plan);
    }

    let mut lo = tber * 1e-3;
    let mut expansions = 0;
    let mut flo = excess(lo);
    while !(flo < 0.0) {
        if expansions == 12 || flo.is_nan() {
            return Err(Error::Infeasible(format!(
                "average-BER bracket: no sign change with boundary target down to {lo:.3e}"
            )));
        }
        lo /= 10.0;
        flo = excess(lo);
        expansions += 1;
    }
    let hi = 0.2;
    let (tp, iters) = bisect_log(&mut |x| -excess(x), lo, hi, 1e-12, 400, "average-BER bisection")?;
    drop(excess);

    let lay = layout(&d, &bits, tp, opts.max_iterations)?;
    let mut plan = plan_from(kind, link, &bits, &lay);
    let lambda = 1.0 / (tber - tp);
    plan.lambda = lambda.is_finite().then_some(lambda);
    let avg = average_ber(&plan, &d, opts.ber_weighting);
    let (pw, bb) = (power_residual(&plan, &d), boundary_residual(&plan, tp));
    let diag = &mut plan.diagnostics;
    diag.iterations = iters;
    diag.residuals.insert("average_ber".into(), rel_diff(avg, tber));
    diag.residuals.insert("average_power".into(), pw);
    diag.residuals.insert("boundary_ber".into(), bb);
    diag.notes.push(format!(
        "boundary target bracket [{lo:.3e}, {hi}] after {expansions} expansions, {evals} evaluations; \
         target TBER - 1/lambda = {tp:.6e}"
    ));
    if tp > tber {
        diag.notes.push("lambda < 0: boundary target exceeds TBER".into());
    }
    if opts.closed_form_checks {
        closed_form_checks(&mut plan, coeffs, tp);
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jfts::{params_from_db, precompute, NumericsConfig};

    fn coeffs() -> JftsCoefficients {
        precompute(&params_from_db(13.0, 12.0, 0.9).unwrap(), &NumericsConfig::default()).unwrap()
    }

    #[test]
    fn fixed_point_satisfies_power_constraint() {
        let c = coeffs();
        let link = LinkBudget::from_db(20.0, 1e-3).unwrap();
        let opts = SolverOptions {
            closed_form_checks: false,
            ..Default::default()
        };
        let plan = solve_arate_cpow_iber(&link, &ModulationSet::default(), &c, &opts).unwrap();
        let r = &plan.diagnostics.residuals;
        assert!(r["average_power"] < 1e-10, "{r:?}");
        assert!(r["boundary_ber"] < 1e-12, "{r:?}");
        assert_eq!(plan.regions.len(), 8);
    }

    #[test]
    fn loose_target_transmits_everywhere() {
        let c = coeffs();
        let link = LinkBudget::from_db(20.0, 0.2 * (1.0 - 1e-9)).unwrap();
        let opts = SolverOptions {
            closed_form_checks: false,
            ..Default::default()
        };
        let plan = solve_arate_cpow_iber(&link, &ModulationSet::default(), &c, &opts).unwrap();
        assert!(plan.cutoff() < 1e-6);
        assert!((plan.regions[0].power.at(1.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn aber_relaxes_iber() {
        let c = coeffs();
        let link = LinkBudget::from_db(20.0, 1e-3).unwrap();
        let opts = SolverOptions {
            closed_form_checks: false,
            ..Default::default()
        };
        let mods = ModulationSet::default();
        let i = solve_arate_cpow_iber(&link, &mods, &c, &opts).unwrap();
        let a = solve_arate_cpow_aber(&link, &mods, &c, &opts).unwrap();
        assert!(a.diagnostics.residuals["average_ber"] < 1e-6, "{:?}", a.diagnostics);
        let d = c.density(link.gamma_bar).unwrap();
        assert!(average_ber(&i, &d, BerWeighting::BitWeighted) <= link.tber);
        for (x, y) in a.boundaries().iter().zip(i.boundaries()) {
            assert!(*x <= y);
        }
    }
}
