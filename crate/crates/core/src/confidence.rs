//! Bounded selective confidence intervals for the Gaussian selective z-test.
//!
//! For a truncation region `R` the selective interval inverts
//! `F(mu) = P_mu(Z <= t | Z ∈ R)` in the mean `mu`; `F` is decreasing in `mu`.
//! From a partial search the exact root `mu_c` of `F(mu) = c` is bracketed by
//! the roots of two ratios built from `R` and the unsearched set `Sᶜ`:
//!
//! ```text
//! lower: c = I_mu(R ∩ (-inf, t]) / I_mu(R ∪ (Sᶜ ∩ [t, inf)))
//! upper: c = I_mu((R ∪ Sᶜ) ∩ (-inf, t]) / I_mu(R ∪ (Sᶜ ∩ (-inf, t]))
//! ```

use serde::{Deserialize, Serialize};

use crate::distributions::{
    shifted_gaussian_log_mass, shifted_gaussian_mass, NullDistribution, LOG_RATIO_SWITCH,
};
use crate::error::{Error, Result};
use crate::inference::SearchState;
use crate::intervals::{Interval, IntervalUnion};

/// Largest bracket expansion exponent: steps are `t ± 2^k`.
const MAX_BRACKET_EXP: i32 = 60;
/// Bisection stops once the bracket is this narrow ...
const MU_TOL: f64 = 1e-6;
/// ... and the ratio at the midpoint is this close to the target.
const RATIO_TOL: f64 = 1e-8;
const MAX_BISECTIONS: usize = 400;

/// Bracket on the root `mu_c` of `P_mu(Z <= t | Z ∈ R) = c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiBounds {
    pub c: f64,
    pub mu_lower: f64,
    pub mu_upper: f64,
}

/// Outer and inner brackets on the exact selective confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectiveCi {
    /// Guaranteed to contain the exact interval.
    pub outer: (f64, f64),
    /// Guaranteed to be contained in the exact interval when non-empty.
    pub inner: (f64, f64),
}

fn below(t: f64) -> IntervalUnion {
    IntervalUnion::from_interval(Interval::at_most(t))
}

/// `I_mu(num ∩ (-inf, t]) / I_mu(den)`; `None` if the denominator has no mass.
fn shifted_ratio(mu: f64, num: &IntervalUnion, den: &IntervalUnion, t: f64) -> Option<f64> {
    let num = num.intersect(&below(t));
    let den_mass = shifted_gaussian_mass(mu, den);
    if den_mass > LOG_RATIO_SWITCH {
        return Some((shifted_gaussian_mass(mu, &num) / den_mass).min(1.0));
    }
    let ln_den = shifted_gaussian_log_mass(mu, den);
    if ln_den == f64::NEG_INFINITY {
        return None;
    }
    let r = (shifted_gaussian_log_mass(mu, &num) - ln_den).exp();
    r.is_finite().then_some(r.min(1.0))
}

/// `P_mu(Z <= t | Z ∈ R)` for `Z ~ N(mu, 1)`.
pub fn truncated_cdf_at(mu: f64, region: &IntervalUnion, t: f64) -> Result<f64> {
    shifted_ratio(mu, region, region, t).ok_or_else(|| {
        Error::DegenerateRegion(format!("region {region} has no mass under mean {mu}"))
    })
}

/// Solves `I_mu(num ∩ (-inf, t]) / I_mu(den) = c` for `mu` by exponential
/// bracketing from `t` followed by bisection. The ratio must be decreasing.
pub fn invert_mu(c: f64, num: &IntervalUnion, den: &IntervalUnion, t: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidProbability(c));
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite statistic {t}")));
    }
    let ratio = |mu: f64| shifted_ratio(mu, num, den, t);
    let at_t = ratio(t).ok_or_else(|| {
        Error::DegenerateRegion("denominator region has no mass at the statistic".into())
    })?;
    if at_t == c {
        return Ok(t);
    }
    // The ratio falls with mu: move right while it is above the target.
    let go_right = at_t > c;
    let mut inner = t;
    let mut outer = None;
    for k in 0..=MAX_BRACKET_EXP {
        let step = 2f64.powi(k);
        let mu = if go_right { t + step } else { t - step };
        match ratio(mu) {
            Some(r) if (go_right && r < c) || (!go_right && r > c) => {
                outer = Some(mu);
                break;
            }
            Some(r) if r == c => return Ok(mu),
            Some(_) => inner = mu,
            None => {}
        }
    }
    let outer = outer.ok_or(Error::UnboundedMu { target: c })?;
    let (mut lo, mut hi) = if go_right {
        (inner, outer)
    } else {
        (outer, inner)
    };
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = ratio(mid).ok_or_else(|| {
            Error::DegenerateRegion(format!("denominator region has no mass at mean {mid}"))
        })?;
        if hi - lo <= MU_TOL && (r - c).abs() <= RATIO_TOL {
            return Ok(mid);
        }
        if r > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Searched state rescaled so the statistic has unit null variance, with the
/// scale needed to map means back.
fn standardized(state: &SearchState) -> Result<(f64, f64, IntervalUnion, IntervalUnion)> {
    let scale = match state.dist() {
        NullDistribution::Gaussian { scale } => scale,
        NullDistribution::Chi { .. } => return Err(Error::UnsupportedDistribution),
    };
    let inv = 1.0 / scale;
    Ok((
        scale,
        state.t() * inv,
        state.searched().scale(inv),
        state.truncated().scale(inv),
    ))
}

/// Bracket on `mu_c` from a partial search. Means are reported on the scale
/// of the statistic.
pub fn ci_bounds(c: f64, state: &SearchState) -> Result<CiBounds> {
    let (scale, t, searched, truncated) = standardized(state)?;
    let free = searched.complement();
    let r = &truncated;
    let lower_den = r.union(&free.intersect(&IntervalUnion::from_interval(Interval::at_least(t))));
    let mu_lower = invert_mu(c, r, &lower_den, t)?;
    let upper_num = r.union(&free);
    let upper_den = r.union(&free.intersect(&below(t)));
    let mu_upper = invert_mu(c, &upper_num, &upper_den, t)?;
    Ok(CiBounds {
        c,
        mu_lower: mu_lower * scale,
        mu_upper: mu_upper * scale,
    })
}

/// Root `mu_c` for a known truncation region, on the scale of the statistic.
pub fn exact_mu(c: f64, region: &IntervalUnion, t: f64, dist: &NullDistribution) -> Result<f64> {
    let scale = match *dist {
        NullDistribution::Gaussian { scale } => scale,
        NullDistribution::Chi { .. } => return Err(Error::UnsupportedDistribution),
    };
    let region = region.scale(1.0 / scale);
    invert_mu(c, &region, &region, t / scale).map(|mu| mu * scale)
}

/// Outer and inner brackets on the `(1 - alpha)` selective confidence interval.
pub fn selective_ci(alpha: f64, state: &SearchState) -> Result<SelectiveCi> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidProbability(alpha));
    }
    let left = ci_bounds(1.0 - 0.5 * alpha, state)?;
    let right = ci_bounds(0.5 * alpha, state)?;
    Ok(SelectiveCi {
        outer: (left.mu_lower, right.mu_upper),
        inner: (left.mu_upper, right.mu_lower),
    })
}
