//! Monte-Carlo comparison of p-value methods on synthetic selection problems.

use std::time::Instant;

use adasi_core::dnn::{dnn_eta, split_regions, DnnOracle, PlNet};
use adasi_core::inference::{exhaustive, naive_p, oc_p, run};
use adasi_core::sfs::{chi_direction, z_direction, SfsOracle};
use adasi_core::{
    Error as CoreError, LineParam, NullDistribution, OracleResponse, SearchState, SelectionOracle,
    Strategy, TerminationRule, TestSide,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{App, ExperimentConfig, Method};
use crate::data::{gen_image, gen_sfs_data};
use crate::error::{HarnessError, Result};

/// Give up on drawing a non-degenerate salient split after this many images.
const MAX_RESAMPLES: usize = 1000;

/// Oracle of any supported back-end.
#[derive(Debug, Clone)]
pub enum AnyOracle {
    Sfs(SfsOracle),
    Dnn(DnnOracle),
}

impl SelectionOracle for AnyOracle {
    type Output = Vec<usize>;

    fn query(&self, z: f64) -> adasi_core::Result<OracleResponse<Vec<usize>>> {
        match self {
            AnyOracle::Sfs(o) => o.query(z),
            AnyOracle::Dnn(o) => o.query(z),
        }
    }
}

/// A selected hypothesis ready for inference.
#[derive(Debug, Clone)]
pub struct Instance {
    pub t: f64,
    pub side: TestSide,
    pub dist: NullDistribution,
    pub oracle: AnyOracle,
    /// Observed algorithm output (selected features or salient pixels).
    pub selected: Vec<usize>,
}

/// Reject / accept / undecided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Reject,
    Accept,
    Na,
}

impl Decision {
    pub fn name(&self) -> &'static str {
        match self {
            Decision::Reject => "reject",
            Decision::Accept => "accept",
            Decision::Na => "na",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "reject" => Some(Decision::Reject),
            "accept" => Some(Decision::Accept),
            "na" => Some(Decision::Na),
            _ => None,
        }
    }

    fn from_bounds(lower: f64, upper: f64, alpha: f64) -> Self {
        if upper < alpha {
            Decision::Reject
        } else if lower >= alpha {
            Decision::Accept
        } else {
            Decision::Na
        }
    }
}

/// Result of one method on one instance.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub p_lower: f64,
    pub p_upper: f64,
    pub decision: Decision,
    pub oracle_calls: usize,
    /// Final search state for the search-based methods.
    pub state: Option<SearchState>,
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub strategy: Option<Strategy>,
    pub p_lower: f64,
    pub p_upper: f64,
    pub decision: Decision,
    pub oracle_calls: usize,
    pub wall_time_ms: f64,
}

/// Seed of the generator used by trial `trial`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ trial as u64
}

/// Builds the hypothesis for the z-test of a selected regression coefficient.
pub fn sfs_z_instance(
    problem: &adasi_core::sfs::SfsProblem,
    feature: Option<usize>,
) -> Result<Instance> {
    let history = problem.fit()?;
    let selected = history.selected();
    let j = match feature {
        Some(j) if selected.contains(&j) => j,
        Some(j) => {
            return Err(HarnessError::Config(format!(
                "feature {j} was not selected; selected features are {selected:?}"
            )))
        }
        None => selected[0],
    };
    let test = z_direction(problem, &history, j)?;
    let oracle = SfsOracle::new(problem, &history, test.line.clone())?;
    Ok(Instance {
        t: test.line.z_obs,
        side: TestSide::TwoSided,
        dist: test.dist,
        oracle: AnyOracle::Sfs(oracle),
        selected,
    })
}

/// Builds the hypothesis for the chi test of a group of selected features.
pub fn sfs_chi_instance(
    problem: &adasi_core::sfs::SfsProblem,
    group: &[usize],
) -> Result<Instance> {
    let history = problem.fit()?;
    let selected = history.selected();
    if let Some(j) = group.iter().find(|j| !selected.contains(j)) {
        return Err(HarnessError::Config(format!(
            "feature {j} was not selected; selected features are {selected:?}"
        )));
    }
    let test = chi_direction(problem, &history, group)?;
    let oracle = SfsOracle::new(problem, &history, test.line.clone())?;
    Ok(Instance {
        t: test.line.z_obs,
        side: TestSide::TwoSided,
        dist: test.dist,
        oracle: AnyOracle::Sfs(oracle),
        selected,
    })
}

/// Builds the hypothesis comparing salient and non-salient pixel means.
pub fn dnn_instance(
    net: &PlNet,
    image: &nalgebra::DVector<f64>,
    tau: f64,
    sigma: f64,
) -> Result<Instance> {
    let (saliency, _) = net.forward_with_pattern(image)?;
    let split = split_regions(&saliency, tau)?;
    let eta = dnn_eta(&split, image.len());
    let line = LineParam::for_contrast(&eta, image)?;
    let dist = NullDistribution::gaussian(sigma * eta.norm())?;
    let selected = split.salient.clone();
    let oracle = DnnOracle::new(net.clone(), tau, line.clone(), split)?;
    Ok(Instance {
        t: line.z_obs,
        side: TestSide::TwoSided,
        dist,
        oracle: AnyOracle::Dnn(oracle),
        selected,
    })
}

/// Draws the data of one trial and selects its hypothesis. Returns the
/// instance and the number of images discarded for degenerate splits.
pub fn prepare(
    cfg: &ExperimentConfig,
    net: Option<&PlNet>,
    rng: &mut ChaCha8Rng,
) -> Result<(Instance, usize)> {
    match cfg.app {
        App::SfsZ => {
            let problem = gen_sfs_data(cfg.n, cfg.p, cfg.k, cfg.delta, rng)?;
            Ok((sfs_z_instance(&problem, None)?, 0))
        }
        App::SfsChi => {
            let problem = gen_sfs_data(cfg.n, cfg.p, cfg.k, cfg.delta, rng)?;
            let selected = problem.fit()?.selected();
            let g = selected[rng.random_range(0..selected.len())];
            Ok((sfs_chi_instance(&problem, &[g])?, 0))
        }
        App::DnnZ => {
            let net = net.expect("network is built for the dnn app");
            for resampled in 0..MAX_RESAMPLES {
                let (image, _) = gen_image(cfg.d, cfg.delta, rng);
                match dnn_instance(net, &image, cfg.tau, 1.0) {
                    Ok(inst) => return Ok((inst, resampled)),
                    Err(HarnessError::Core(CoreError::DegenerateSplit(_))) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(HarnessError::Core(CoreError::DegenerateSplit(format!(
                "no usable image in {MAX_RESAMPLES} draws"
            ))))
        }
    }
}

/// Runs one method (with `strategy` for the bounded searches).
pub fn run_method(
    inst: &Instance,
    method: Method,
    strategy: Strategy,
    alpha: f64,
    eps: f64,
) -> Result<MethodOutcome> {
    let point = |p: f64, calls: usize, state: Option<SearchState>| MethodOutcome {
        p_lower: p,
        p_upper: p,
        decision: if p < alpha {
            Decision::Reject
        } else {
            Decision::Accept
        },
        oracle_calls: calls,
        state,
    };
    let (t, side, dist, oracle) = (inst.t, inst.side, inst.dist, &inst.oracle);
    Ok(match method {
        // The observed selection is one run of the algorithm.
        Method::Naive => point(naive_p(t, side, dist), 1, None),
        Method::Oc => point(oc_p(t, side, dist, oracle)?, 1, None),
        Method::Exhaustive => {
            let out = exhaustive(t, side, dist, oracle)?;
            point(out.p_value, out.state.oracle_calls(), Some(out.state))
        }
        Method::Prec | Method::Dec => {
            let rule = if method == Method::Prec {
                TerminationRule::Precision(eps)
            } else {
                TerminationRule::Decision(alpha)
            };
            let out = run(t, side, dist, oracle, strategy, rule)?;
            let decision = if out.inconclusive {
                Decision::Na
            } else {
                Decision::from_bounds(out.bounds.lower, out.bounds.upper, alpha)
            };
            MethodOutcome {
                p_lower: out.bounds.lower,
                p_upper: out.bounds.upper,
                decision,
                oracle_calls: out.state.oracle_calls(),
                state: Some(out.state),
            }
        }
    })
}

/// Runs every configured method on trial `trial`.
pub fn run_trial(
    cfg: &ExperimentConfig,
    net: Option<&PlNet>,
    trial: usize,
) -> Result<(Vec<TrialRecord>, usize)> {
    let seed = trial_seed(cfg.seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (inst, resampled) = prepare(cfg, net, &mut rng)?;
    let mut records = Vec::new();
    for &method in &cfg.methods {
        let strategies: Vec<Option<Strategy>> = if method.uses_strategy() {
            cfg.strategies.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for strategy in strategies {
            let start = Instant::now();
            let out = run_method(
                &inst,
                method,
                strategy.unwrap_or(Strategy::Pi1),
                cfg.alpha,
                cfg.eps,
            )?;
            let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            records.push(TrialRecord {
                trial,
                seed,
                method,
                strategy,
                p_lower: out.p_lower,
                p_upper: out.p_upper,
                decision: out.decision,
                oracle_calls: out.oracle_calls,
                wall_time_ms,
            });
        }
    }
    Ok((records, resampled))
}

/// Aggregates of one method/strategy pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub strategy: Option<Strategy>,
    pub trials: usize,
    pub rejections: usize,
    pub undecided: usize,
    pub rejection_rate: f64,
    pub mean_oracle_calls: f64,
    pub mean_wall_time_ms: f64,
}

/// Experiment-level summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    /// Images discarded because every pixel fell on one side of the threshold.
    pub resampled_degenerate: usize,
    pub methods: Vec<MethodSummary>,
}

impl Summary {
    pub fn get(&self, method: Method, strategy: Option<Strategy>) -> Option<&MethodSummary> {
        self.methods
            .iter()
            .find(|m| m.method == method && m.strategy == strategy)
    }
}

pub fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord], resampled: usize) -> Summary {
    let mut keys: Vec<(Method, Option<Strategy>)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.method, r.strategy)) {
            keys.push((r.method, r.strategy));
        }
    }
    let methods = keys
        .into_iter()
        .map(|(method, strategy)| {
            let rows: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.method == method && r.strategy == strategy)
                .collect();
            let count = rows.len();
            let rejections = rows
                .iter()
                .filter(|r| r.decision == Decision::Reject)
                .count();
            let undecided = rows.iter().filter(|r| r.decision == Decision::Na).count();
            let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
                rows.iter().map(|r| f(r)).sum::<f64>() / count as f64
            };
            MethodSummary {
                method,
                strategy,
                trials: count,
                rejections,
                undecided,
                rejection_rate: rejections as f64 / count as f64,
                mean_oracle_calls: mean(&|r| r.oracle_calls as f64),
                mean_wall_time_ms: mean(&|r| r.wall_time_ms),
            }
        })
        .collect();
    Summary {
        config: cfg.clone(),
        resampled_degenerate: resampled,
        methods,
    }
}

/// Records (sorted by trial) and their summary.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

/// Runs all trials in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let net = match cfg.app {
        App::DnnZ => Some(PlNet::desk(cfg.d, cfg.net_seed)?),
        _ => None,
    };
    let per_trial: Vec<(Vec<TrialRecord>, usize)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, net.as_ref(), trial))
        .collect::<Result<_>>()?;
    let resampled = per_trial.iter().map(|(_, r)| r).sum();
    let records: Vec<TrialRecord> = per_trial.into_iter().flat_map(|(r, _)| r).collect();
    let summary = summarize(cfg, &records, resampled);
    Ok(ExperimentResult { records, summary })
}
