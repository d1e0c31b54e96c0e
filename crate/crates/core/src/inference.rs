//! Bounded selective p-values from a partial line search.
//!
//! A [`SearchState`] tracks the searched set `S` and the truncated set
//! `R ⊆ S` (the searched points whose algorithm output matches the observed
//! one). From these alone the selective p-value is bracketed by
//!
//! ```text
//! L = I(R \ T) / I(R ∪ (Sᶜ ∩ T))
//! U = I((R ∪ Sᶜ) \ T) / I(R ∪ (Sᶜ \ T))
//! ```
//!
//! where `T` is the "inside" set of the observed statistic and `I` the null
//! mass. `L` only grows and `U` only shrinks as `S` is extended, and both meet
//! at the selective p-value once `S` covers the support.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::NullDistribution;
use crate::error::{Error, Result};
use crate::intervals::{Interval, IntervalUnion};

/// Cap on iterations when the termination rule never fires.
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Base offset used to step from a boundary into the unsearched set.
pub const STEP_EPS: f64 = 1e-6;

/// Which tail of the statistic counts as extreme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestSide {
    /// Extreme means `|Z| >= |t|`.
    TwoSided,
    /// Extreme means `Z < t`.
    LeftTailed,
    /// Extreme means `Z > t`.
    RightTailed,
}

impl FromStr for TestSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" | "two" => Ok(Self::TwoSided),
            "left" | "left-tailed" => Ok(Self::LeftTailed),
            "right" | "right-tailed" => Ok(Self::RightTailed),
            other => Err(Error::InvalidArgument(format!(
                "unknown test side `{other}`"
            ))),
        }
    }
}

/// Set of statistic values that are *not* extreme relative to `t`.
pub fn inside_set(t: f64, side: TestSide) -> IntervalUnion {
    let iv = match side {
        TestSide::TwoSided => Interval::new(-t.abs(), t.abs()).expect("ordered"),
        TestSide::LeftTailed => Interval::at_least(t),
        TestSide::RightTailed => Interval::at_most(t),
    };
    IntervalUnion::from_interval(iv)
}

/// One answer of a selection oracle at a line position.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResponse<O> {
    /// Algorithm output at the queried point.
    pub output_id: O,
    /// Over-conditioned region: all positions sharing the full sub-algorithm
    /// state with the queried one. Always contains the queried point.
    pub oc_region: IntervalUnion,
    /// Whether the algorithm output equals the observed output.
    pub matches_observed: bool,
}

/// Maps a line position to the algorithm output and its over-conditioned region.
///
/// Implementations must be piecewise constant: every point of a returned
/// region yields the same response.
pub trait SelectionOracle {
    type Output: Clone + PartialEq + fmt::Debug;

    fn query(&self, z: f64) -> Result<OracleResponse<Self::Output>>;
}

impl<T: SelectionOracle + ?Sized> SelectionOracle for &T {
    type Output = T::Output;

    fn query(&self, z: f64) -> Result<OracleResponse<Self::Output>> {
        (**self).query(z)
    }
}

/// Lower and upper bounds on the selective p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsPair {
    pub lower: f64,
    pub upper: f64,
    /// Iteration at which the bounds were computed.
    pub iter: usize,
    /// Null mass of the searched set.
    pub searched_mass: f64,
    /// Null mass of the truncated set.
    pub truncated_mass: f64,
}

impl BoundsPair {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `(iteration, L, U)` history entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    pub lower: f64,
    pub upper: f64,
}

/// When to stop the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TerminationRule {
    /// Stop once `U - L < eps`.
    Precision(f64),
    /// Stop once `U < alpha` (reject) or `L >= alpha` (accept).
    Decision(f64),
    /// Stop once `[lo, hi]` lies inside the searched set.
    RangeCovered(f64, f64),
    /// Stop after this many iterations; the result is flagged inconclusive.
    MaxIters(usize),
}

impl TerminationRule {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::Precision(x) | Self::Decision(x) if !(x > 0.0 && x < 1.0) => {
                Err(Error::InvalidProbability(x))
            }
            Self::RangeCovered(lo, hi) if !(lo <= hi) => Err(Error::InvalidInterval { lo, hi }),
            _ => Ok(()),
        }
    }

    fn satisfied(&self, state: &SearchState, b: &BoundsPair) -> bool {
        match *self {
            Self::Precision(eps) => b.upper - b.lower < eps,
            Self::Decision(alpha) => b.upper < alpha || b.lower >= alpha,
            Self::RangeCovered(lo, hi) => state.covers(lo, hi),
            Self::MaxIters(_) => false,
        }
    }
}

/// Rule for picking the next unsearched point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Unsearched point closest to the observed statistic.
    Pi1,
    /// Unsearched point of highest null density.
    Pi2,
    /// Denser of the two endpoints of the searched component holding `t`.
    Pi3,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Pi1, Strategy::Pi2, Strategy::Pi3];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Pi1 => "pi1",
            Self::Pi2 => "pi2",
            Self::Pi3 => "pi3",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pi1" => Ok(Self::Pi1),
            "pi2" => Ok(Self::Pi2),
            "pi3" => Ok(Self::Pi3),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy `{other}`"
            ))),
        }
    }
}

/// Searched and truncated sets of an in-progress line search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    t: f64,
    side: TestSide,
    dist: NullDistribution,
    searched: IntervalUnion,
    truncated: IntervalUnion,
    iter: usize,
    oracle_calls: usize,
    trace: Vec<TracePoint>,
}

impl SearchState {
    /// State after the first query at the observed statistic: `S = R = region`.
    pub fn initial(
        t: f64,
        side: TestSide,
        dist: NullDistribution,
        region: IntervalUnion,
    ) -> Result<Self> {
        Self::from_sets(t, side, dist, region.clone(), region, 1)
    }

    /// Builds a state from explicit sets; `oracle_calls` is taken as the
    /// number of queries that produced them.
    pub fn from_sets(
        t: f64,
        side: TestSide,
        dist: NullDistribution,
        searched: IntervalUnion,
        truncated: IntervalUnion,
        oracle_calls: usize,
    ) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite statistic {t}")));
        }
        if !truncated.contains(t) {
            return Err(Error::DegenerateState(format!(
                "observed statistic {t} is not in the truncated set {truncated}"
            )));
        }
        if searched.union(&truncated) != searched {
            return Err(Error::DegenerateState(
                "truncated set is not contained in the searched set".into(),
            ));
        }
        let mut state = Self {
            t,
            side,
            dist,
            searched,
            truncated,
            iter: 1,
            oracle_calls,
            trace: Vec::new(),
        };
        let b = state.bounds()?;
        state.trace.push(TracePoint {
            iter: 1,
            lower: b.lower,
            upper: b.upper,
        });
        Ok(state)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn side(&self) -> TestSide {
        self.side
    }

    pub fn dist(&self) -> NullDistribution {
        self.dist
    }

    pub fn searched(&self) -> &IntervalUnion {
        &self.searched
    }

    pub fn truncated(&self) -> &IntervalUnion {
        &self.truncated
    }

    pub fn iter(&self) -> usize {
        self.iter
    }

    pub fn oracle_calls(&self) -> usize {
        self.oracle_calls
    }

    pub fn trace(&self) -> &[TracePoint] {
        &self.trace
    }

    /// Part of the support not yet searched. For the chi law the negative
    /// half-line counts as searched.
    pub fn unsearched(&self) -> IntervalUnion {
        IntervalUnion::from_interval(self.dist.support()).subtract(&self.searched)
    }

    /// True when `[lo, hi] ∩ support` has no unsearched part of positive width.
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        let window = match IntervalUnion::interval(lo, hi) {
            Ok(w) => w,
            Err(_) => return false,
        };
        self.unsearched()
            .intersect(&window)
            .parts()
            .iter()
            .all(|p| p.width() <= 0.0)
    }

    /// Bounds on the selective p-value for the current sets.
    pub fn bounds(&self) -> Result<BoundsPair> {
        let inside = inside_set(self.t, self.side);
        let free = self.unsearched();
        let r = &self.truncated;

        let lower_num = r.subtract(&inside);
        let lower_den = r.union(&free.intersect(&inside));
        let upper_num = r.union(&free).subtract(&inside);
        let upper_den = r.union(&free.subtract(&inside));

        let degenerate =
            || Error::DegenerateState("denominator of the p-value bound has zero mass".into());
        let lower = self
            .dist
            .mass_ratio(&lower_num, &lower_den)
            .ok_or_else(degenerate)?;
        let upper = self
            .dist
            .mass_ratio(&upper_num, &upper_den)
            .ok_or_else(degenerate)?;
        Ok(BoundsPair {
            lower,
            upper,
            iter: self.iter,
            searched_mass: self.dist.mass(&self.searched),
            truncated_mass: self.dist.mass(r),
        })
    }

    /// Latest bounds from the trace.
    pub fn current(&self) -> TracePoint {
        *self.trace.last().expect("trace starts non-empty")
    }

    fn step_size(&self) -> f64 {
        STEP_EPS * self.dist.scale().max(1.0)
    }

    fn absorb<O: Clone + PartialEq + fmt::Debug>(
        &mut self,
        z: f64,
        resp: &OracleResponse<O>,
    ) -> Result<()> {
        if !resp.oc_region.contains(z) {
            return Err(Error::OracleContract { z });
        }
        self.searched = self.searched.union(&resp.oc_region);
        if resp.matches_observed {
            self.truncated = self.truncated.union(&resp.oc_region);
        }
        self.iter += 1;
        self.oracle_calls += 1;
        Ok(())
    }

    /// Queries the oracle at an unsearched `z` and extends `S` (and `R` when
    /// the output matches), appending the new bounds to the trace.
    pub fn step<O: SelectionOracle>(&mut self, oracle: &O, z: f64) -> Result<BoundsPair> {
        if !self.unsearched().contains(z) {
            return Err(Error::QueryInsideSearched { z });
        }
        let resp = oracle.query(z)?;
        self.absorb(z, &resp)?;
        let b = self.bounds()?;
        self.trace.push(TracePoint {
            iter: self.iter,
            lower: b.lower,
            upper: b.upper,
        });
        Ok(b)
    }
}

/// Unsearched parts of positive width.
fn open_parts(state: &SearchState) -> Vec<Interval> {
    state
        .unsearched()
        .parts()
        .iter()
        .copied()
        .filter(|p| p.width() > 0.0)
        .collect()
}

/// Point just inside `part`, stepped in from its lower (`from_lo`) or upper end.
fn step_inside(part: &Interval, from_lo: bool, eps: f64) -> f64 {
    let off = if part.width().is_finite() {
        eps.min(0.5 * part.width())
    } else {
        eps
    };
    if from_lo {
        part.lo() + off
    } else {
        part.hi() - off
    }
}

/// Picks whichever candidate has higher density; ties go to the right one.
fn denser(
    dist: &NullDistribution,
    left: Option<(f64, f64)>,
    right: Option<(f64, f64)>,
) -> Option<f64> {
    // candidates are (boundary, query point)
    match (left, right) {
        (Some(l), Some(r)) => {
            if dist.ln_density(l.0) > dist.ln_density(r.0) {
                Some(l.1)
            } else {
                Some(r.1)
            }
        }
        (Some(l), None) => Some(l.1),
        (None, Some(r)) => Some(r.1),
        (None, None) => None,
    }
}

/// Next point to query under `strategy`; `SearchExhausted` when nothing of
/// positive width is left to search.
pub fn select_next(state: &SearchState, strategy: Strategy) -> Result<f64> {
    let parts = open_parts(state);
    if parts.is_empty() {
        return Err(Error::SearchExhausted);
    }
    let eps = state.step_size();
    let dist = state.dist();
    let t = state.t();

    let z = match strategy {
        Strategy::Pi1 => {
            let mut best: Option<(f64, f64, f64)> = None; // (distance, boundary, query)
            for p in &parts {
                let (dist_to_t, boundary, query) = if p.hi() <= t {
                    (t - p.hi(), p.hi(), step_inside(p, false, eps))
                } else {
                    (p.lo() - t, p.lo(), step_inside(p, true, eps))
                };
                let better = match best {
                    None => true,
                    Some((d, b, _)) => {
                        dist_to_t < d
                            || (dist_to_t == d
                                && (dist.ln_density(boundary) > dist.ln_density(b)
                                    || (dist.ln_density(boundary) == dist.ln_density(b)
                                        && boundary > b)))
                    }
                };
                if better {
                    best = Some((dist_to_t, boundary, query));
                }
            }
            best.map(|b| b.2)
        }
        Strategy::Pi2 => {
            let mode = dist.mode();
            if let Some(p) = parts.iter().find(|p| p.contains(mode)) {
                let lo = step_inside(p, true, eps);
                let hi = step_inside(p, false, eps);
                Some(mode.clamp(lo.min(hi), hi.max(lo)))
            } else {
                let left = parts
                    .iter()
                    .rev()
                    .find(|p| p.hi() < mode)
                    .map(|p| (p.hi(), step_inside(p, false, eps)));
                let right = parts
                    .iter()
                    .find(|p| p.lo() > mode)
                    .map(|p| (p.lo(), step_inside(p, true, eps)));
                denser(&dist, left, right)
            }
        }
        Strategy::Pi3 => {
            let left = parts.iter().rev().find(|p| p.lo() < t).map(|p| {
                let clipped = Interval::new(p.lo(), p.hi().min(t)).expect("ordered");
                (clipped.hi(), step_inside(&clipped, false, eps))
            });
            let right = parts.iter().find(|p| p.hi() > t).map(|p| {
                let clipped = Interval::new(p.lo().max(t), p.hi()).expect("ordered");
                (clipped.lo(), step_inside(&clipped, true, eps))
            });
            denser(&dist, left, right)
        }
    };
    z.ok_or(Error::SearchExhausted)
}

/// Result of a bounded search.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub bounds: BoundsPair,
    /// `Some(true)` = reject, `Some(false)` = accept; only for `Decision` rules.
    pub decision: Option<bool>,
    /// The iteration cap was hit before the rule fired.
    pub inconclusive: bool,
    /// The whole support was searched, so the bounds coincide.
    pub exhausted: bool,
    pub state: SearchState,
}

fn initial_state<O: SelectionOracle>(
    t: f64,
    side: TestSide,
    dist: NullDistribution,
    oracle: &O,
) -> Result<SearchState> {
    let resp = oracle.query(t)?;
    if !resp.oc_region.contains(t) {
        return Err(Error::OracleContract { z: t });
    }
    if !resp.matches_observed {
        return Err(Error::DegenerateState(
            "oracle reports a mismatch at the observed statistic".into(),
        ));
    }
    SearchState::initial(t, side, dist, resp.oc_region)
}

/// Runs the bounded search from the observed statistic until `rule` fires.
pub fn run<O: SelectionOracle>(
    t: f64,
    side: TestSide,
    dist: NullDistribution,
    oracle: &O,
    strategy: Strategy,
    rule: TerminationRule,
) -> Result<RunOutcome> {
    rule.validate()?;
    let state = initial_state(t, side, dist, oracle)?;
    run_from(state, oracle, strategy, rule)
}

/// Continues a search from an existing state.
pub fn run_from<O: SelectionOracle>(
    mut state: SearchState,
    oracle: &O,
    strategy: Strategy,
    rule: TerminationRule,
) -> Result<RunOutcome> {
    rule.validate()?;
    let cap = match rule {
        TerminationRule::MaxIters(n) => n,
        _ => DEFAULT_MAX_ITERS,
    };
    let mut inconclusive = false;
    let mut exhausted = false;
    let mut bounds = state.bounds()?;
    loop {
        if rule.satisfied(&state, &bounds) {
            break;
        }
        if state.iter() >= cap {
            inconclusive = true;
            break;
        }
        match select_next(&state, strategy) {
            Ok(z) => bounds = state.step(oracle, z)?,
            Err(Error::SearchExhausted) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let decision = match rule {
        TerminationRule::Decision(alpha) => {
            if bounds.upper < alpha {
                Some(true)
            } else if bounds.lower >= alpha {
                Some(false)
            } else {
                None
            }
        }
        _ => None,
    };
    Ok(RunOutcome {
        bounds,
        decision,
        inconclusive,
        exhausted,
        state,
    })
}

/// Conditional p-value when the truncation region is known exactly.
pub fn conditional_p(
    dist: &NullDistribution,
    region: &IntervalUnion,
    t: f64,
    side: TestSide,
) -> Result<f64> {
    dist.mass_ratio(&region.subtract(&inside_set(t, side)), region)
        .ok_or_else(|| Error::DegenerateState("truncation region has zero mass".into()))
}

/// Fixed search window of the exhaustive baseline.
pub fn exhaustive_range(t: f64, dist: &NullDistribution) -> (f64, f64) {
    match *dist {
        NullDistribution::Gaussian { scale } => {
            if t.abs() <= 20.0 * scale {
                (-20.0 * scale, 20.0 * scale)
            } else {
                let r = 10.0 * scale + t.abs();
                (-r, r)
            }
        }
        NullDistribution::Chi { .. } => {
            if t.abs() <= 100.0 {
                (0.0, 100.0)
            } else {
                (0.0, 50.0 + t.abs())
            }
        }
    }
}

/// Result of the exhaustive sweep.
#[derive(Debug, Clone)]
pub struct ExhaustiveOutcome {
    pub p_value: f64,
    pub range: (f64, f64),
    pub state: SearchState,
}

/// Sweeps the fixed window left to right and returns `I(R \ T) / I(R)`.
pub fn exhaustive<O: SelectionOracle>(
    t: f64,
    side: TestSide,
    dist: NullDistribution,
    oracle: &O,
) -> Result<ExhaustiveOutcome> {
    let range = exhaustive_range(t, &dist);
    let window = IntervalUnion::interval(range.0, range.1)?;
    let mut state = initial_state(t, side, dist, oracle)?;
    let eps = state.step_size();
    loop {
        if state.iter() >= DEFAULT_MAX_ITERS {
            return Err(Error::DegenerateState(
                "exhaustive sweep exceeded the iteration cap".into(),
            ));
        }
        let gap = window.subtract(&state.searched);
        let Some(first) = gap.parts().iter().find(|p| p.width() > 0.0) else {
            break;
        };
        let z = step_inside(first, true, eps);
        let resp = oracle.query(z)?;
        state.absorb(z, &resp)?;
    }
    let p_value = conditional_p(&dist, &state.truncated, t, side)?;
    Ok(ExhaustiveOutcome {
        p_value,
        range,
        state,
    })
}

/// Selective p-value over the fixed exhaustive window.
pub fn exhaustive_p<O: SelectionOracle>(
    t: f64,
    side: TestSide,
    dist: NullDistribution,
    oracle: &O,
) -> Result<f64> {
    exhaustive(t, side, dist, oracle).map(|o| o.p_value)
}

/// Over-conditioned p-value: conditions on the region of the observed point only.
pub fn oc_p<O: SelectionOracle>(
    t: f64,
    side: TestSide,
    dist: NullDistribution,
    oracle: &O,
) -> Result<f64> {
    let state = initial_state(t, side, dist, oracle)?;
    conditional_p(&dist, state.truncated(), t, side)
}

/// Classical p-value ignoring selection.
pub fn naive_p(t: f64, side: TestSide, dist: NullDistribution) -> f64 {
    conditional_p(&dist, &IntervalUnion::real_line(), t, side).expect("full line has mass one")
}

/// Inner bracket on the selective p-value by optimizing over every truncation
/// region assembled from `R` plus grid cells of the unsearched set. Test
/// oracle; it does not use the closed-form bounds.
pub fn brute_force_bounds(state: &SearchState, grid_n: usize) -> Result<BoundsPair> {
    if grid_n == 0 {
        return Err(Error::InvalidArgument("grid_n must be positive".into()));
    }
    let dist = state.dist();
    let inside = inside_set(state.t(), state.side());
    let half = 50.0 * dist.scale();
    let (lo, hi) = (-half, half);
    let free = state.unsearched();
    let width = (hi - lo) / grid_n as f64;

    let mut cells = Vec::new();
    for k in 0..grid_n {
        let a = lo + width * k as f64;
        let b = if k + 1 == grid_n {
            hi
        } else {
            lo + width * (k + 1) as f64
        };
        let cell = free.intersect(&IntervalUnion::interval(a, b)?);
        let total = dist.mass(&cell);
        if total > 0.0 {
            cells.push((dist.mass(&cell.subtract(&inside)), total));
        }
    }
    let base_out = dist.mass(&state.truncated().subtract(&inside));
    let base_all = dist.mass(state.truncated());
    if !(base_all > 0.0) {
        return Err(Error::DegenerateState("truncated set has zero mass".into()));
    }

    // A ratio of sums over free subsets is optimized by a threshold set on
    // the per-cell ratio, so scanning prefixes of the sorted cells is exact.
    let scan = |descending: bool| -> f64 {
        let mut sorted = cells.clone();
        sorted.sort_by(|x, y| {
            let o = (x.0 / x.1).total_cmp(&(y.0 / y.1));
            if descending {
                o.reverse()
            } else {
                o
            }
        });
        let (mut num, mut den) = (base_out, base_all);
        let mut best = num / den;
        for (out, total) in sorted {
            num += out;
            den += total;
            let r = num / den;
            best = if descending { best.max(r) } else { best.min(r) };
        }
        best
    };
    Ok(BoundsPair {
        lower: scan(false),
        upper: scan(true),
        iter: state.iter(),
        searched_mass: dist.mass(state.searched()),
        truncated_mass: base_all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn iu(pairs: &[(f64, f64)]) -> IntervalUnion {
        IntervalUnion::from_pairs(pairs).unwrap()
    }

    fn gauss() -> NullDistribution {
        NullDistribution::standard_normal()
    }

    fn phi(x: f64) -> f64 {
        0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
    }

    /// Oracle with a fixed partition of the line into regions; a region
    /// matches when it is flagged.
    struct Partition {
        cuts: Vec<f64>,
        matching: Vec<bool>,
    }

    impl SelectionOracle for Partition {
        type Output = usize;

        fn query(&self, z: f64) -> Result<OracleResponse<usize>> {
            let k = self.cuts.partition_point(|&c| c <= z);
            let lo = if k == 0 { -INF } else { self.cuts[k - 1] };
            let hi = if k == self.cuts.len() {
                INF
            } else {
                self.cuts[k]
            };
            Ok(OracleResponse {
                output_id: k,
                oc_region: iu(&[(lo, hi)]),
                matches_observed: self.matching[k],
            })
        }
    }

    #[test]
    fn inside_set_examples() {
        assert_eq!(inside_set(2.0, TestSide::TwoSided), iu(&[(-2.0, 2.0)]));
        assert_eq!(inside_set(-2.0, TestSide::TwoSided), iu(&[(-2.0, 2.0)]));
        assert_eq!(inside_set(2.0, TestSide::LeftTailed), iu(&[(2.0, INF)]));
        assert_eq!(inside_set(2.0, TestSide::RightTailed), iu(&[(-INF, 2.0)]));
        assert_eq!(inside_set(0.0, TestSide::TwoSided), iu(&[(0.0, 0.0)]));
    }

    #[test]
    fn bounds_on_full_search_equal_naive() {
        let s = SearchState::from_sets(
            2.0,
            TestSide::TwoSided,
            gauss(),
            IntervalUnion::real_line(),
            IntervalUnion::real_line(),
            1,
        )
        .unwrap();
        let b = s.bounds().unwrap();
        let oracle = 2.0 * (1.0 - phi(2.0));
        assert!((b.lower - oracle).abs() < 1e-14);
        assert_eq!(b.lower, b.upper);
        assert!((b.lower - 0.045_500_3).abs() < 1e-7);
    }

    #[test]
    fn bounds_worked_example() {
        let s = SearchState::initial(2.0, TestSide::TwoSided, gauss(), iu(&[(1.0, 3.0)])).unwrap();
        let b = s.bounds().unwrap();
        let lo = (phi(3.0) - phi(2.0)) / (phi(3.0) - phi(-2.0));
        let up = 2.0 * phi(-2.0) / (phi(-2.0) + 1.0 - phi(1.0));
        assert!((b.lower - lo).abs() < 1e-14);
        assert!((b.upper - up).abs() < 1e-14);
        assert!((b.lower - 0.021_928).abs() < 1e-6);
        assert!((b.upper - 0.250_820).abs() < 1e-6);
        let bf = brute_force_bounds(&s, 2000).unwrap();
        assert!(bf.lower >= b.lower - 1e-12 && (bf.lower - b.lower).abs() < 1e-3);
        assert!(bf.upper <= b.upper + 1e-12 && (bf.upper - b.upper).abs() < 1e-3);
    }

    #[test]
    fn corollary_single_interval() {
        let (t, delta) = (1.5, 0.7);
        let a = t + delta;
        let r = iu(&[(-0.2, 0.4), (1.2, 1.9)]);
        let s =
            SearchState::from_sets(t, TestSide::TwoSided, gauss(), iu(&[(-a, a)]), r.clone(), 1)
                .unwrap();
        let tails = iu(&[(-INF, -a), (a, INF)]);
        let inside = inside_set(t, TestSide::TwoSided);
        let g = gauss();
        let expected = g.mass(&r.subtract(&inside).union(&tails)) / g.mass(&r.union(&tails));
        assert!((s.bounds().unwrap().upper - expected).abs() < 1e-12);
    }

    #[test]
    fn from_sets_validates() {
        let g = gauss();
        assert!(SearchState::initial(5.0, TestSide::TwoSided, g, iu(&[(0.0, 1.0)])).is_err());
        assert!(SearchState::from_sets(
            0.5,
            TestSide::TwoSided,
            g,
            iu(&[(0.0, 1.0)]),
            iu(&[(0.0, 2.0)]),
            1
        )
        .is_err());
    }

    #[test]
    fn select_next_examples() {
        let g = gauss();
        let s = SearchState::initial(1.0, TestSide::TwoSided, g, iu(&[(0.0, 3.0)])).unwrap();
        assert_eq!(select_next(&s, Strategy::Pi1).unwrap(), 0.0 - STEP_EPS);

        let s = SearchState::initial(0.5, TestSide::TwoSided, g, iu(&[(-1.0, 2.0)])).unwrap();
        assert_eq!(select_next(&s, Strategy::Pi2).unwrap(), -1.0 - STEP_EPS);

        let s = SearchState::from_sets(
            1.0,
            TestSide::TwoSided,
            g,
            iu(&[(-1.0, 0.5), (0.8, 3.0)]),
            iu(&[(0.8, 3.0)]),
            2,
        )
        .unwrap();
        assert_eq!(select_next(&s, Strategy::Pi3).unwrap(), 0.8 - STEP_EPS);

        // mode inside the unsearched set is queried directly
        let s = SearchState::initial(3.0, TestSide::TwoSided, g, iu(&[(2.0, 4.0)])).unwrap();
        assert_eq!(select_next(&s, Strategy::Pi2).unwrap(), 0.0);

        let s =
            SearchState::initial(3.0, TestSide::TwoSided, g, IntervalUnion::real_line()).unwrap();
        assert_eq!(select_next(&s, Strategy::Pi1), Err(Error::SearchExhausted));
    }

    #[test]
    fn narrow_gap_is_split_not_overshot() {
        let g = gauss();
        let s = SearchState::from_sets(
            1.0,
            TestSide::TwoSided,
            g,
            iu(&[(-INF, 0.9), (0.9 + 1e-8, INF)]),
            iu(&[(0.9 + 1e-8, INF)]),
            2,
        )
        .unwrap();
        for strat in Strategy::ALL {
            let z = select_next(&s, strat).unwrap();
            assert!(z > 0.9 && z < 0.9 + 1e-8, "{strat}: {z}");
        }
    }

    #[test]
    fn chi_search_never_probes_negative_values() {
        let chi = NullDistribution::chi(1.0).unwrap();
        let s = SearchState::initial(2.0, TestSide::TwoSided, chi, iu(&[(1.0, 3.0)])).unwrap();
        for strat in Strategy::ALL {
            let z = select_next(&s, strat).unwrap();
            assert!(z >= 0.0, "{strat}: {z}");
        }
        let s = SearchState::initial(2.0, TestSide::TwoSided, chi, iu(&[(0.0, INF)])).unwrap();
        assert_eq!(select_next(&s, Strategy::Pi2), Err(Error::SearchExhausted));
        let b = s.bounds().unwrap();
        assert_eq!(b.lower, b.upper);
    }

    #[test]
    fn step_grows_sets_and_tightens_bounds() {
        let oracle = Partition {
            cuts: vec![-1.0, 0.5, 1.5, 2.5, 4.0],
            matching: vec![false, true, false, true, false, true],
        };
        let mut s =
            SearchState::initial(2.0, TestSide::TwoSided, gauss(), iu(&[(1.5, 2.5)])).unwrap();
        let b0 = s.current();
        // non-matching region: only S grows
        s.step(&oracle, 1.0).unwrap();
        assert_eq!(s.truncated(), &iu(&[(1.5, 2.5)]));
        let b1 = s.current();
        assert!(b1.lower >= b0.lower && b1.upper <= b0.upper);
        // matching region: both grow
        s.step(&oracle, 0.0).unwrap();
        assert!(s.truncated().contains(0.0));
        assert_eq!(s.oracle_calls(), 3);
        assert!(matches!(
            s.step(&oracle, 2.0),
            Err(Error::QueryInsideSearched { .. })
        ));
    }

    #[test]
    fn oracle_contract_violation_is_reported() {
        struct Liar;
        impl SelectionOracle for Liar {
            type Output = ();
            fn query(&self, z: f64) -> Result<OracleResponse<()>> {
                let region = if z == 0.0 {
                    iu(&[(-1.0, 1.0)])
                } else {
                    iu(&[(50.0, 51.0)])
                };
                Ok(OracleResponse {
                    output_id: (),
                    oc_region: region,
                    matches_observed: true,
                })
            }
        }
        let mut s =
            SearchState::initial(0.0, TestSide::TwoSided, gauss(), iu(&[(-1.0, 1.0)])).unwrap();
        assert_eq!(s.step(&Liar, 5.0), Err(Error::OracleContract { z: 5.0 }));
    }

    #[test]
    fn run_rules_and_baselines() {
        let oracle = Partition {
            cuts: vec![-3.0, -1.0, 1.0, 2.5, 3.0],
            matching: vec![true, false, true, true, false, true],
        };
        let t = 1.8;
        let g = gauss();
        let side = TestSide::TwoSided;
        let exact = {
            let z = iu(&[(-INF, -3.0), (-1.0, 2.5), (3.0, INF)]);
            conditional_p(&g, &z, t, side).unwrap()
        };
        let exh = exhaustive(t, side, g, &oracle).unwrap();
        assert!((exh.p_value - exact).abs() < 1e-12);
        for strat in Strategy::ALL {
            let out = run(t, side, g, &oracle, strat, TerminationRule::Precision(1e-3)).unwrap();
            assert!(out.bounds.width() < 1e-3);
            assert!(out.bounds.lower <= exact && exact <= out.bounds.upper);
            let out = run(t, side, g, &oracle, strat, TerminationRule::Decision(0.05)).unwrap();
            assert_eq!(out.decision, Some(exact < 0.05));
            let out = run(
                t,
                side,
                g,
                &oracle,
                strat,
                TerminationRule::RangeCovered(-20.0, 20.0),
            )
            .unwrap();
            assert!(out.exhausted || out.state.covers(-20.0, 20.0));
            assert!((out.bounds.lower - exact).abs() < 1e-8);
            assert!((out.bounds.upper - exact).abs() < 1e-8);
        }
        let oc = oc_p(t, side, g, &oracle).unwrap();
        let r1 = iu(&[(1.0, 2.5)]);
        assert!((oc - conditional_p(&g, &r1, t, side).unwrap()).abs() < 1e-15);
        let capped = run(
            t,
            side,
            g,
            &oracle,
            Strategy::Pi1,
            TerminationRule::MaxIters(2),
        )
        .unwrap();
        assert!(capped.inconclusive);
        assert_eq!(capped.state.iter(), 2);
        assert!(run(
            t,
            side,
            g,
            &oracle,
            Strategy::Pi1,
            TerminationRule::Precision(0.0)
        )
        .is_err());
    }

    #[test]
    fn exhaustive_examples() {
        let everywhere = Partition {
            cuts: vec![],
            matching: vec![true],
        };
        let t = 1.3;
        let p = exhaustive_p(t, TestSide::TwoSided, gauss(), &everywhere).unwrap();
        assert!((p - naive_p(t, TestSide::TwoSided, gauss())).abs() < 1e-15);

        let band = Partition {
            cuts: vec![1.0, 3.0],
            matching: vec![false, true, false],
        };
        let p = exhaustive_p(2.0, TestSide::TwoSided, gauss(), &band).unwrap();
        let oracle = (phi(3.0) - phi(2.0)) / (phi(3.0) - phi(1.0));
        assert!((p - oracle).abs() < 1e-14);
        assert!((p - 0.136_042).abs() < 1e-6);

        let chi2 = NullDistribution::chi(2.0).unwrap();
        let p = exhaustive_p(1.0, TestSide::TwoSided, chi2, &everywhere).unwrap();
        assert!((p - (-0.5f64).exp()).abs() < 1e-14);
        assert!((p - 0.606_531).abs() < 1e-6);
    }

    #[test]
    fn exhaustive_range_fallbacks() {
        assert_eq!(exhaustive_range(1.0, &gauss()), (-20.0, 20.0));
        assert_eq!(exhaustive_range(25.0, &gauss()), (-35.0, 35.0));
        let chi = NullDistribution::chi(3.0).unwrap();
        assert_eq!(exhaustive_range(4.0, &chi), (0.0, 100.0));
        assert_eq!(exhaustive_range(120.0, &chi), (0.0, 170.0));
    }

    #[test]
    fn naive_examples() {
        let g = gauss();
        assert_eq!(naive_p(0.0, TestSide::TwoSided, g), 1.0);
        assert!((naive_p(1.959_964, TestSide::TwoSided, g) - 0.05).abs() < 1e-8);
        for t in [-2.0, -0.3, 0.0, 0.7, 3.1] {
            let l = naive_p(t, TestSide::LeftTailed, g);
            let r = naive_p(t, TestSide::RightTailed, g);
            assert!((l + r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("pi3".parse::<Strategy>().unwrap(), Strategy::Pi3);
        assert!("pi4".parse::<Strategy>().is_err());
        assert_eq!("left".parse::<TestSide>().unwrap(), TestSide::LeftTailed);
    }
}
