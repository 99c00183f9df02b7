use crate::error::{Error, Result};

/// Widens [lo, hi] geometrically by `factor` until f(lo) > 0 > f(hi) for a decreasing f.
/// Returns the bracket with its endpoint values.
pub(crate) fn bracket_decreasing(
    f: &mut impl FnMut(f64) -> f64,
    start: f64,
    factor: f64,
    max_expansions: usize,
    what: &str,
) -> Result<(f64, f64, f64, f64)> {
    let (mut lo, mut hi) = (start / factor, start);
    let mut flo = f(lo);
    let mut fhi = f(hi);
    let mut n = 0;
    while flo <= 0.0 {
        if n == max_expansions {
            return Err(Error::Infeasible(format!(
                "{what}: no sign change found below {lo:.3e}"
            )));
        }
        hi = lo;
        fhi = flo;
        lo /= factor;
        flo = f(lo);
        n += 1;
    }
    n = 0;
    while fhi >= 0.0 {
        if n == max_expansions {
            return Err(Error::Infeasible(format!(
                "{what}: no sign change found above {hi:.3e}"
            )));
        }
        lo = hi;
        flo = fhi;
        hi *= factor;
        fhi = f(hi);
        n += 1;
    }
    Ok((lo, hi, flo, fhi))
}

/// Outcome of a downward-first bracket search.
pub(crate) enum Bracket {
    /// f(lo) > 0 > f(hi)
    Root(f64, f64),
    /// f stayed ≤ 0 down to `floor`: the constraint behind f does not bind there.
    Slack { floor: f64, value: f64 },
}

/// Like [`bracket_decreasing`], but reports a slack constraint instead of failing
/// when f is still nonpositive after `max_expansions` steps down.
pub(crate) fn bracket_or_slack(
    f: &mut impl FnMut(f64) -> f64,
    start: f64,
    factor: f64,
    max_expansions: usize,
    what: &str,
) -> Result<Bracket> {
    let floor = start / factor.powi(max_expansions as i32 + 1);
    match bracket_decreasing(f, start, factor, max_expansions, what) {
        Ok((lo, hi, _, _)) => Ok(Bracket::Root(lo, hi)),
        Err(Error::Infeasible(_)) if f(floor) <= 0.0 => Ok(Bracket::Slack { floor, value: f(floor) }),
        Err(e) => Err(e),
    }
}

/// Bisection in log space for a decreasing f with f(lo) > 0 > f(hi).
/// Stops when the bracket is narrower than `rel_tol` (relative). Returns (root, iterations).
pub(crate) fn bisect_log(
    f: &mut impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
    what: &str,
) -> Result<(f64, usize)> {
    for it in 1..=max_iter {
        let mid = (lo * hi).sqrt();
        let v = f(mid);
        if v == 0.0 {
            return Ok((mid, it));
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 <= rel_tol {
            return Ok(((lo * hi).sqrt(), it));
        }
    }
    Err(Error::Convergence {
        what: what.to_string(),
        iterations: max_iter,
    })
}
