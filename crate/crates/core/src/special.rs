//! Log-space tail functions for the standard normal and gamma laws.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

/// `ln(sqrt(2 pi))`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

const MAX_ITER: usize = 500;
const CF_TINY: f64 = 1e-300;

/// Threshold above which the normal tail switches to the Mills-ratio fraction.
const MILLS_SWITCH: f64 = 8.0;

pub fn ln_gamma(a: f64) -> f64 {
    libm::lgamma(a)
}

/// `ln(1 - exp(x))` for `x <= 0`, accurate near both ends.
pub fn ln_one_minus_exp(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(exp(a) + exp(b))`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Standard normal log density.
pub fn ln_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Mills ratio `Q(x) / phi(x)` by the Laplace continued fraction (x >= ~5).
fn mills_ratio(x: f64) -> f64 {
    // x + 1/(x + 2/(x + 3/(x + ...))) evaluated with modified Lentz.
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..MAX_ITER {
        let an = n as f64;
        d = x + an * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = x + an / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Upper tail `Q(x) = P(N(0,1) > x)`.
pub fn norm_sf(x: f64) -> f64 {
    if x >= MILLS_SWITCH {
        ln_norm_sf(x).exp()
    } else {
        0.5 * libm::erfc(x / SQRT_2)
    }
}

/// `ln Q(x)` for all real `x`, finite down to the far right tail.
pub fn ln_norm_sf(x: f64) -> f64 {
    if x == f64::INFINITY {
        f64::NEG_INFINITY
    } else if x == f64::NEG_INFINITY {
        0.0
    } else if x >= MILLS_SWITCH {
        ln_norm_pdf(x) + mills_ratio(x).ln()
    } else if x > -1.0 {
        (0.5 * libm::erfc(x / SQRT_2)).ln()
    } else {
        (-norm_sf(-x)).ln_1p()
    }
}

/// `ln P(a, x)` and `ln Q(a, x)` for the regularized incomplete gamma pair.
///
/// Series below `x = a + 1`, Lentz continued fraction above.
pub fn ln_gamma_pq(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    if x == f64::INFINITY {
        return (0.0, f64::NEG_INFINITY);
    }
    let ln_prefix = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let ln_p = ln_prefix + sum.ln();
        (ln_p, ln_one_minus_exp(ln_p))
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / CF_TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < CF_TINY {
                d = CF_TINY;
            }
            c = b + an / c;
            if c.abs() < CF_TINY {
                c = CF_TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let ln_q = ln_prefix + h.ln();
        (ln_one_minus_exp(ln_q), ln_q)
    }
}

const GL_POINTS: usize = 16;

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule
    })
}

/// `ln ∫_lo^hi exp(ln_f(x)) dx` on a short finite interval.
pub fn ln_integrate_short(lo: f64, hi: f64, ln_f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let vals: Vec<(f64, f64)> = gauss_legendre()
        .iter()
        .map(|&(x, w)| (ln_f(mid + half * x), w))
        .collect();
    let m = vals.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = vals.iter().map(|&(lv, w)| w * (lv - m).exp()).sum();
    m + (s * half).ln()
}
