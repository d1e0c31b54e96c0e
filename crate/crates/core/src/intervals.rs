//! Canonical finite unions of closed real intervals.
//!
//! Every set handled by the line search (searched region, truncation region,
//! per-query over-conditioned regions) is an [`IntervalUnion`]. Endpoints are
//! treated as closed; the null laws are continuous, so boundary points carry no
//! mass and open/closed bookkeeping would change nothing downstream.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gap below which two neighbouring parts are merged.
pub const MERGE_EPS: f64 = 1e-12;

/// Relative coefficient tolerance used to classify degenerate quadratics.
pub const COEF_EPS: f64 = 1e-12;

#[inline]
fn merge_tol(x: f64) -> f64 {
    if x.is_finite() {
        MERGE_EPS * x.abs().max(1.0)
    } else {
        MERGE_EPS
    }
}

/// A closed interval `[lo, hi]` with possibly infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// `(-inf, +inf)`.
    pub const fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// `[lo, +inf)`.
    pub fn at_least(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
        }
    }

    /// `(-inf, hi]`.
    pub fn at_most(hi: f64) -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi,
        }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn contains(&self, z: f64) -> bool {
        self.lo <= z && z <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = if self.lo == f64::NEG_INFINITY {
            "(-inf".to_string()
        } else {
            format!("[{}", self.lo)
        };
        let hi = if self.hi == f64::INFINITY {
            "+inf)".to_string()
        } else {
            format!("{}]", self.hi)
        };
        write!(f, "{lo}, {hi}")
    }
}

/// Finite union of disjoint closed intervals in canonical form.
///
/// Parts are sorted by `lo`, pairwise disjoint and separated by gaps wider
/// than the merge tolerance. The empty list is the empty set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn real_line() -> Self {
        Self {
            parts: vec![Interval::real_line()],
        }
    }

    pub fn from_interval(iv: Interval) -> Self {
        Self { parts: vec![iv] }
    }

    /// Single interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Interval::new(lo, hi).map(Self::from_interval)
    }

    /// Validates every `(lo, hi)` pair and canonicalizes the result.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let parts = pairs
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::canonicalize(parts))
    }

    /// Sorts, merges overlaps and closes sub-tolerance gaps.
    pub fn canonicalize(mut parts: Vec<Interval>) -> Self {
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        let mut out: Vec<Interval> = Vec::with_capacity(parts.len());
        for iv in parts {
            match out.last_mut() {
                Some(last) if iv.lo - last.hi <= merge_tol(last.hi.max(iv.lo)) => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => out.push(iv),
            }
        }
        Self { parts: out }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn is_real_line(&self) -> bool {
        self.parts.len() == 1 && self.parts[0] == Interval::real_line()
    }

    /// Infimum of the set, `None` when empty.
    pub fn inf(&self) -> Option<f64> {
        self.parts.first().map(|p| p.lo)
    }

    /// Supremum of the set, `None` when empty.
    pub fn sup(&self) -> Option<f64> {
        self.parts.last().map(|p| p.hi)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut parts = Vec::with_capacity(self.len() + other.len());
        parts.extend_from_slice(&self.parts);
        parts.extend_from_slice(&other.parts);
        Self::canonicalize(parts)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (a, b) = (&self.parts, &other.parts);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].lo.max(b[j].lo);
            let hi = a[i].hi.min(b[j].hi);
            if lo <= hi {
                out.push(Interval { lo, hi });
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::canonicalize(out)
    }

    pub fn complement(&self) -> Self {
        if self.parts.is_empty() {
            return Self::real_line();
        }
        let mut out = Vec::with_capacity(self.parts.len() + 1);
        let mut cursor = f64::NEG_INFINITY;
        for (k, p) in self.parts.iter().enumerate() {
            if k == 0 {
                if p.lo > f64::NEG_INFINITY {
                    out.push(Interval {
                        lo: cursor,
                        hi: p.lo,
                    });
                }
            } else {
                out.push(Interval {
                    lo: cursor,
                    hi: p.lo,
                });
            }
            cursor = p.hi;
        }
        if cursor < f64::INFINITY {
            out.push(Interval {
                lo: cursor,
                hi: f64::INFINITY,
            });
        }
        Self::canonicalize(out)
    }

    /// `self ∩ complement(other)`.
    pub fn subtract(&self, other: &Self) -> Self {
        self.intersect(&other.complement())
    }

    /// Closed-endpoint membership test.
    pub fn contains(&self, z: f64) -> bool {
        self.part_containing(z).is_some()
    }

    pub fn part_containing(&self, z: f64) -> Option<&Interval> {
        if z.is_nan() {
            return None;
        }
        // first part whose hi >= z
        let k = self.parts.partition_point(|p| p.hi < z);
        self.parts.get(k).filter(|p| p.lo <= z)
    }

    /// True when `[lo, hi]` is a subset of the set.
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.part_containing(lo).is_some_and(|p| p.hi >= hi)
    }

    /// Shifts every endpoint by `delta`.
    pub fn translate(&self, delta: f64) -> Self {
        Self::canonicalize(
            self.parts
                .iter()
                .map(|p| Interval {
                    lo: p.lo + delta,
                    hi: p.hi + delta,
                })
                .collect(),
        )
    }

    /// Multiplies every endpoint by a positive factor.
    pub fn scale(&self, factor: f64) -> Self {
        assert!(factor > 0.0, "scale factor must be positive");
        Self::canonicalize(
            self.parts
                .iter()
                .map(|p| Interval {
                    lo: p.lo * factor,
                    hi: p.hi * factor,
                })
                .collect(),
        )
    }

    /// Returns the set with `z` absorbed into the nearest part when `z` misses
    /// the set by at most `tol * max(1, |z|)`; `None` when it misses by more.
    ///
    /// Oracles use this to repair root-finding round-off at the queried point.
    pub fn absorb_nearby(&self, z: f64, tol: f64) -> Option<Self> {
        if self.contains(z) {
            return Some(self.clone());
        }
        let slack = tol * z.abs().max(1.0);
        let k = self.parts.partition_point(|p| p.hi < z);
        let mut parts = self.parts.clone();
        if k > 0 && z - parts[k - 1].hi <= slack {
            parts[k - 1].hi = z;
        } else if k < parts.len() && parts[k].lo - z <= slack {
            parts[k].lo = z;
        } else {
            return None;
        }
        Some(Self::canonicalize(parts))
    }
}

impl From<Interval> for IntervalUnion {
    fn from(iv: Interval) -> Self {
        Self::from_interval(iv)
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "{{}}");
        }
        for (k, p) in self.parts.iter().enumerate() {
            if k > 0 {
                write!(f, " U ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Coefficients of `a2 * r^2 + a1 * r + a0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoeffs {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl QuadraticCoeffs {
    pub fn new(a2: f64, a1: f64, a0: f64) -> Result<Self> {
        if !(a2.is_finite() && a1.is_finite() && a0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite quadratic coefficients ({a2}, {a1}, {a0})"
            )));
        }
        Ok(Self { a2, a1, a0 })
    }

    /// `a1 * r + a0`.
    pub fn linear(a1: f64, a0: f64) -> Self {
        Self { a2: 0.0, a1, a0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.a2 * r + self.a1) * r + self.a0
    }
}

/// Solution set `{r : a2 r^2 + a1 r + a0 <= 0}`.
///
/// A coefficient counts as zero when its magnitude is below
/// `COEF_EPS * (1 + |a2| + |a1| + |a0|)`; a constant within that tolerance of
/// zero is treated as satisfied.
pub fn solve_quadratic_le(q: QuadraticCoeffs) -> IntervalUnion {
    let QuadraticCoeffs { a2, a1, a0 } = q;
    debug_assert!(a2.is_finite() && a1.is_finite() && a0.is_finite());
    let tol = COEF_EPS * (1.0 + a2.abs() + a1.abs() + a0.abs());

    if a2.abs() < tol {
        if a1.abs() < tol {
            return if a0 <= tol {
                IntervalUnion::real_line()
            } else {
                IntervalUnion::empty()
            };
        }
        let root = -a0 / a1;
        let iv = if a1 > 0.0 {
            Interval::at_most(root)
        } else {
            Interval::at_least(root)
        };
        return IntervalUnion::from_interval(iv);
    }

    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return if a2 > 0.0 {
            IntervalUnion::empty()
        } else {
            IntervalUnion::real_line()
        };
    }
    let sq = disc.sqrt();
    let q = -0.5 * (a1 + a1.signum() * sq);
    let (mut r1, mut r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / a2, a0 / q)
    };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    if a2 > 0.0 {
        IntervalUnion::from_interval(Interval { lo: r1, hi: r2 })
    } else {
        IntervalUnion::canonicalize(vec![Interval::at_most(r1), Interval::at_least(r2)])
    }
}
