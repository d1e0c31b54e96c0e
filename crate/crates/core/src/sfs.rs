//! Forward stepwise feature selection as a selection event.
//!
//! Each greedy step picks the feature whose addition most reduces the
//! residual sum of squares. Along a line `y(r) = a + b r` every comparison
//! "chosen feature beats competitor" is a quadratic inequality in `r`, so the
//! set of positions reproducing a given history is an interval union.

use nalgebra::{DMatrix, DVector};

use crate::distributions::NullDistribution;
use crate::error::{Error, Result};
use crate::inference::{OracleResponse, SelectionOracle};
use crate::intervals::{solve_quadratic_le, IntervalUnion, QuadraticCoeffs};
use crate::line::LineParam;

/// Relative column-norm threshold below which a candidate is collinear with
/// the already selected features.
const RANK_TOL: f64 = 1e-10;

/// Tolerance for snapping the queried point into its own region when root
/// finding lands a hair away from it.
const ABSORB_TOL: f64 = 1e-8;

/// Fixed design, response, noise level and number of steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SfsProblem {
    x: DMatrix<f64>,
    d: DVector<f64>,
    sigma: f64,
    k: usize,
}

impl SfsProblem {
    pub fn new(x: DMatrix<f64>, d: DVector<f64>, sigma: f64, k: usize) -> Result<Self> {
        let (n, p) = x.shape();
        if d.len() != n {
            return Err(Error::InvalidArgument(format!(
                "design has {n} rows but the response has length {}",
                d.len()
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if k == 0 || k > p || k > n {
            return Err(Error::InvalidArgument(format!(
                "number of steps must be in 1..={}, got {k}",
                p.min(n)
            )));
        }
        if x.iter().chain(d.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "design and response must be finite".into(),
            ));
        }
        Ok(Self { x, d, sigma, k })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Runs the selection on the observed response.
    pub fn fit(&self) -> Result<SfsHistory> {
        run_sfs(&self.x, &self.d, self.k)
    }
}

/// Order in which features were selected (0-based column indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SfsHistory {
    pub order: Vec<usize>,
}

impl SfsHistory {
    /// Selected features as a sorted set.
    pub fn selected(&self) -> Vec<usize> {
        let mut s = self.order.clone();
        s.sort_unstable();
        s
    }
}

/// One greedy step: the chosen feature and the unit residualized columns of
/// every candidate that was available.
struct Step {
    chosen: usize,
    candidates: Vec<(usize, DVector<f64>)>,
}

/// Greedy selection on response `y`, optionally keeping each step's
/// candidate directions.
fn greedy(x: &DMatrix<f64>, y: &DVector<f64>, k: usize, keep: bool) -> Result<Vec<Step>> {
    let p = x.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut in_model = vec![false; p];
    let mut steps = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, f64, DVector<f64>)> = None;
        let mut candidates = Vec::new();
        for j in (0..p).filter(|&j| !in_model[j]) {
            let col = x.column(j).into_owned();
            let mut v = col.clone();
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
            let norm = v.norm();
            if !(norm > RANK_TOL * col.norm().max(f64::MIN_POSITIVE)) {
                return Err(Error::SingularDesign(format!(
                    "feature {j} is collinear with the selected features"
                )));
            }
            let u = v / norm;
            let score = u.dot(y).powi(2);
            if best.as_ref().is_none_or(|b| score > b.1) {
                best = Some((j, score, u.clone()));
            }
            if keep {
                candidates.push((j, u));
            }
        }
        let (chosen, _, u) = best.ok_or_else(|| {
            Error::InvalidArgument("more steps requested than features available".into())
        })?;
        in_model[chosen] = true;
        basis.push(u);
        steps.push(Step { chosen, candidates });
    }
    Ok(steps)
}

/// Forward stepwise selection of `k` features; ties go to the smaller index.
pub fn run_sfs(x: &DMatrix<f64>, y: &DVector<f64>, k: usize) -> Result<SfsHistory> {
    if y.len() != x.nrows() {
        return Err(Error::InvalidArgument(
            "response length does not match design".into(),
        ));
    }
    let steps = greedy(x, y, k, false)?;
    Ok(SfsHistory {
        order: steps.into_iter().map(|s| s.chosen).collect(),
    })
}

/// Columns of `x` listed in `cols`.
fn columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_columns(
        &cols
            .iter()
            .map(|&j| x.column(j).into_owned())
            .collect::<Vec<_>>(),
    )
}

/// Linear test direction with its line and null law.
#[derive(Debug, Clone, PartialEq)]
pub struct ZTest {
    pub eta: DVector<f64>,
    pub line: LineParam,
    pub dist: NullDistribution,
}

/// Test of the coefficient of selected feature `j` in the selected model.
pub fn z_direction(problem: &SfsProblem, history: &SfsHistory, j: usize) -> Result<ZTest> {
    let selected = history.selected();
    let pos = selected.iter().position(|&s| s == j).ok_or_else(|| {
        Error::InvalidArgument(format!("feature {j} is not among the selected features"))
    })?;
    let xm = columns(problem.x(), &selected);
    let m = selected.len();
    let qr = xm.qr();
    let r = qr.r();
    let scale = r.diagonal().amax();
    if r.diagonal().iter().any(|v| !(v.abs() > RANK_TOL * scale)) {
        return Err(Error::SingularDesign(
            "selected design is rank deficient".into(),
        ));
    }
    let mut e = DVector::zeros(m);
    e[pos] = 1.0;
    let w = r
        .transpose()
        .solve_lower_triangular(&e)
        .ok_or_else(|| Error::SingularDesign("selected design is rank deficient".into()))?;
    let eta = qr.q() * w;
    let line = LineParam::for_contrast(&eta, problem.d())?;
    let dist = NullDistribution::gaussian(problem.sigma() * eta.norm())?;
    Ok(ZTest { eta, line, dist })
}

/// Group test direction with its projector, line and null law.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiTest {
    pub projector: DMatrix<f64>,
    pub line: LineParam,
    pub dist: NullDistribution,
}

/// Test that the group `g ⊆ M_K` adds nothing beyond the other selected features.
pub fn chi_direction(problem: &SfsProblem, history: &SfsHistory, g: &[usize]) -> Result<ChiTest> {
    let selected = history.selected();
    if g.is_empty() {
        return Err(Error::InvalidArgument("tested group is empty".into()));
    }
    if let Some(j) = g.iter().find(|j| !selected.contains(j)) {
        return Err(Error::InvalidArgument(format!(
            "feature {j} is not among the selected features"
        )));
    }
    let rest: Vec<usize> = selected
        .iter()
        .copied()
        .filter(|j| !g.contains(j))
        .collect();
    let mut xg = columns(problem.x(), g);
    if !rest.is_empty() {
        let q = columns(problem.x(), &rest).qr().q();
        let proj = &q * (q.transpose() * &xg);
        xg -= proj;
    }
    let svd = xg.svd(true, false);
    let u = svd.u.expect("left singular vectors were requested");
    let smax = svd.singular_values.amax();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOL * smax)
        .collect();
    if keep.is_empty() {
        return Err(Error::DegenerateStatistic(
            "tested group lies in the span of the other features".into(),
        ));
    }
    let basis = DMatrix::from_columns(
        &keep
            .iter()
            .map(|&i| u.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    let projector = &basis * basis.transpose();
    let pd = &projector * problem.d();
    let norm = pd.norm();
    if !(norm > 1e-12 * problem.d().norm()) {
        return Err(Error::DegenerateStatistic(
            "response has no component in the tested span".into(),
        ));
    }
    let sigma = problem.sigma();
    let a = problem.d() - &pd;
    let b = &pd * (sigma / norm);
    let line = LineParam {
        a,
        b,
        z_obs: norm / sigma,
    };
    let dist = NullDistribution::chi(keep.len() as f64)?;
    Ok(ChiTest {
        projector,
        line,
        dist,
    })
}

/// Selection oracle for forward stepwise selection along a line.
///
/// The region fixes the whole ordered history; the output compared against
/// the observation is the unordered selected set.
#[derive(Debug, Clone)]
pub struct SfsOracle {
    x: DMatrix<f64>,
    k: usize,
    line: LineParam,
    observed: Vec<usize>,
}

impl SfsOracle {
    pub fn new(problem: &SfsProblem, observed: &SfsHistory, line: LineParam) -> Result<Self> {
        if line.dim() != problem.n() {
            return Err(Error::InvalidArgument(
                "line dimension does not match design".into(),
            ));
        }
        Ok(Self {
            x: problem.x().clone(),
            k: problem.k(),
            line,
            observed: observed.selected(),
        })
    }

    /// Comparisons pinning the history observed at `r`, each as `g(r) <= 0`.
    pub fn constraints(&self, r: f64) -> Result<(SfsHistory, Vec<QuadraticCoeffs>)> {
        let y = self.line.at(r);
        let steps = greedy(&self.x, &y, self.k, true)?;
        let mut quads = Vec::new();
        for step in &steps {
            let proj = |u: &DVector<f64>| (u.dot(&self.line.a), u.dot(&self.line.b));
            let (ak, bk) = step
                .candidates
                .iter()
                .find(|c| c.0 == step.chosen)
                .map(|c| proj(&c.1))
                .expect("chosen feature is a candidate");
            for (j, u) in &step.candidates {
                if *j == step.chosen {
                    continue;
                }
                let (aj, bj) = proj(u);
                quads.push(QuadraticCoeffs::new(
                    bj * bj - bk * bk,
                    2.0 * (aj * bj - ak * bk),
                    aj * aj - ak * ak,
                )?);
            }
        }
        let history = SfsHistory {
            order: steps.iter().map(|s| s.chosen).collect(),
        };
        Ok((history, quads))
    }
}

impl SelectionOracle for SfsOracle {
    type Output = Vec<usize>;

    fn query(&self, z: f64) -> Result<OracleResponse<Vec<usize>>> {
        let (history, quads) = self.constraints(z)?;
        let mut region = IntervalUnion::real_line();
        for q in quads {
            region = region.intersect(&solve_quadratic_le(q));
        }
        let region = region
            .absorb_nearby(z, ABSORB_TOL)
            .ok_or(Error::OracleContract { z })?;
        let output = history.selected();
        let matches_observed = output == self.observed;
        Ok(OracleResponse {
            output_id: output,
            oc_region: region,
            matches_observed,
        })
    }
}
