//! Null laws of the test statistic and their masses over interval unions.
//!
//! All masses are assembled from per-part log masses. Each part is evaluated in
//! whichever tail keeps the subtraction benign (survival function on the right,
//! distribution function on the left) and short parts are integrated directly,
//! so relative accuracy survives down to masses near `1e-300` and `log_mass`
//! stays finite far beyond that.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::{Interval, IntervalUnion};
use crate::special::{
    ln_add_exp, ln_gamma, ln_gamma_pq, ln_integrate_short, ln_norm_pdf, ln_norm_sf,
    ln_one_minus_exp,
};

/// Parts whose width times the local log-density slope is below this are
/// integrated by quadrature instead of by a difference of tail functions.
const SHORT_PART: f64 = 0.5;

/// Below this denominator mass, ratios switch to log space.
pub const LOG_RATIO_SWITCH: f64 = 1e-250;

/// Unconditional law of the test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NullDistribution {
    /// `N(0, scale^2)`.
    Gaussian { scale: f64 },
    /// Chi law with `dof` degrees of freedom.
    Chi { dof: f64 },
}

impl NullDistribution {
    pub fn gaussian(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gaussian scale must be positive, got {scale}"
            )));
        }
        Ok(Self::Gaussian { scale })
    }

    pub fn chi(dof: f64) -> Result<Self> {
        if !(dof.is_finite() && dof >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "chi degrees of freedom must be >= 1, got {dof}"
            )));
        }
        Ok(Self::Chi { dof })
    }

    pub const fn standard_normal() -> Self {
        Self::Gaussian { scale: 1.0 }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Self::Gaussian { .. })
    }

    /// Natural length scale of the statistic (the standard deviation for the
    /// Gaussian, 1 for the chi law).
    pub fn scale(&self) -> f64 {
        match *self {
            Self::Gaussian { scale } => scale,
            Self::Chi { .. } => 1.0,
        }
    }

    /// Support of the density.
    pub fn support(&self) -> Interval {
        match self {
            Self::Gaussian { .. } => Interval::real_line(),
            Self::Chi { .. } => Interval::at_least(0.0),
        }
    }

    /// Location of the density maximum.
    pub fn mode(&self) -> f64 {
        match *self {
            Self::Gaussian { .. } => 0.0,
            Self::Chi { dof } => (dof - 1.0).max(0.0).sqrt(),
        }
    }

    pub fn ln_density(&self, z: f64) -> f64 {
        match *self {
            Self::Gaussian { scale } => ln_norm_pdf(z / scale) - scale.ln(),
            Self::Chi { dof } => chi_ln_pdf(dof, z),
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        self.ln_density(z).exp()
    }

    /// `P(Z <= z)`.
    pub fn cdf(&self, z: f64) -> f64 {
        self.ln_part_mass(f64::NEG_INFINITY, z).exp()
    }

    /// `P(Z >= z)`.
    pub fn sf(&self, z: f64) -> f64 {
        self.ln_part_mass(z, f64::INFINITY).exp()
    }

    /// Probability of `b`.
    pub fn mass(&self, b: &IntervalUnion) -> f64 {
        b.parts()
            .iter()
            .map(|p| self.ln_part_mass(p.lo(), p.hi()).exp())
            .sum::<f64>()
            .min(1.0)
    }

    /// Natural log of the probability of `b`; `-inf` for the empty set.
    pub fn log_mass(&self, b: &IntervalUnion) -> f64 {
        b.parts()
            .iter()
            .map(|p| self.ln_part_mass(p.lo(), p.hi()))
            .fold(f64::NEG_INFINITY, ln_add_exp)
            .min(0.0)
    }

    /// `mass(num) / mass(den)`, switching to log space when the denominator is
    /// below [`LOG_RATIO_SWITCH`]. `None` when the denominator has zero mass.
    pub fn mass_ratio(&self, num: &IntervalUnion, den: &IntervalUnion) -> Option<f64> {
        let den_mass = self.mass(den);
        if den_mass > LOG_RATIO_SWITCH {
            return Some(self.mass(num) / den_mass);
        }
        let ln_den = self.log_mass(den);
        if ln_den == f64::NEG_INFINITY {
            return None;
        }
        Some((self.log_mass(num) - ln_den).exp())
    }

    /// Inverse distribution function by bisection.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidProbability(q));
        }
        let (mut lo, mut hi) = match *self {
            Self::Gaussian { scale } => (-40.0 * scale, 40.0 * scale),
            Self::Chi { .. } => {
                let mut hi = 1.0;
                while self.cdf(hi) < q {
                    hi *= 2.0;
                }
                (0.0, hi)
            }
        };
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Log mass of a single closed part `[lo, hi]`.
    fn ln_part_mass(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            Self::Gaussian { scale } => std_normal_ln_mass(lo / scale, hi / scale),
            Self::Chi { dof } => chi_ln_mass(dof, lo, hi),
        }
    }
}

fn chi_ln_pdf(dof: f64, z: f64) -> f64 {
    if z < 0.0 {
        return f64::NEG_INFINITY;
    }
    let norm = (0.5 * dof - 1.0) * std::f64::consts::LN_2 + ln_gamma(0.5 * dof);
    if z == 0.0 {
        return if dof == 1.0 {
            -norm
        } else if dof > 1.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    (dof - 1.0) * z.ln() - 0.5 * z * z - norm
}

/// Log mass of `[lo, hi]` under `N(0, 1)`.
fn std_normal_ln_mass(lo: f64, hi: f64) -> f64 {
    if !(lo < hi) {
        return f64::NEG_INFINITY;
    }
    if lo.is_finite() && hi.is_finite() && (hi - lo) * (1.0 + lo.abs().max(hi.abs())) <= SHORT_PART
    {
        return ln_integrate_short(lo, hi, ln_norm_pdf);
    }
    if lo >= 0.0 {
        let (l_lo, l_hi) = (ln_norm_sf(lo), ln_norm_sf(hi));
        l_lo + ln_one_minus_exp(l_hi - l_lo)
    } else if hi <= 0.0 {
        let (l_near, l_far) = (ln_norm_sf(-hi), ln_norm_sf(-lo));
        l_near + ln_one_minus_exp(l_far - l_near)
    } else {
        let outside = ln_add_exp(ln_norm_sf(-lo), ln_norm_sf(hi));
        ln_one_minus_exp(outside)
    }
}

/// Log mass of `[lo, hi]` under the chi law, via `P(dof/2, z^2/2)`.
fn chi_ln_mass(dof: f64, lo: f64, hi: f64) -> f64 {
    let lo = lo.max(0.0);
    if !(lo < hi) {
        return f64::NEG_INFINITY;
    }
    let slope = if lo > 0.0 {
        (dof - 1.0).abs() / lo + hi + 1.0
    } else {
        f64::INFINITY
    };
    if hi.is_finite() && (hi - lo) * slope <= SHORT_PART {
        return ln_integrate_short(lo, hi, |z| chi_ln_pdf(dof, z));
    }
    let a = 0.5 * dof;
    let (p_lo, q_lo) = ln_gamma_pq(a, 0.5 * lo * lo);
    let (p_hi, q_hi) = if hi.is_finite() {
        ln_gamma_pq(a, 0.5 * hi * hi)
    } else {
        (0.0, f64::NEG_INFINITY)
    };
    let x_lo = 0.5 * lo * lo;
    let x_hi = 0.5 * hi * hi;
    if x_lo >= a {
        q_lo + ln_one_minus_exp(q_hi - q_lo)
    } else if x_hi <= a {
        p_hi + ln_one_minus_exp(p_lo - p_hi)
    } else {
        ln_one_minus_exp(ln_add_exp(p_lo, q_hi))
    }
}

/// `∫_B phi(z - mu) dz`.
pub fn shifted_gaussian_mass(mu: f64, b: &IntervalUnion) -> f64 {
    NullDistribution::standard_normal().mass(&b.translate(-mu))
}

/// `ln ∫_B phi(z - mu) dz`.
pub fn shifted_gaussian_log_mass(mu: f64, b: &IntervalUnion) -> f64 {
    NullDistribution::standard_normal().log_mass(&b.translate(-mu))
}
