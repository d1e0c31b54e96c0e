//! Adaptively bounded selective inference.
//!
//! Selective p-values and confidence intervals for parametric-programming
//! based selective inference, computed from a partial line search: every
//! iteration yields rigorous lower and upper bounds, so the search can stop as
//! soon as the requested precision or decision is reached.

// Negated float comparisons such as `!(x > 0.0)` are used on purpose so
// that NaN inputs are rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod confidence;
pub mod distributions;
pub mod dnn;
pub mod error;
pub mod inference;
pub mod intervals;
pub mod line;
pub mod sfs;
pub mod special;

pub use distributions::{shifted_gaussian_mass, NullDistribution};
pub use error::{Error, Result};
pub use inference::{
    BoundsPair, OracleResponse, RunOutcome, SearchState, SelectionOracle, Strategy,
    TerminationRule, TestSide,
};
pub use intervals::{solve_quadratic_le, Interval, IntervalUnion, QuadraticCoeffs};
pub use line::LineParam;
