//! Single-shot inference on a user-supplied problem file.

use std::fs;
use std::path::Path;
use std::time::Instant;

use adasi_core::confidence::selective_ci;
use adasi_core::dnn::PlNet;
use adasi_core::sfs::SfsProblem;
use adasi_core::Strategy;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{App, Method};
use crate::error::{HarnessError, Result};
use crate::experiment::{
    dnn_instance, run_method, sfs_chi_instance, sfs_z_instance, Decision, Instance,
};

fn default_sigma() -> f64 {
    1.0
}

/// Contents of a `problem.json` file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub app: App,
    /// Design matrix, one row per observation.
    #[serde(rename = "X", default)]
    pub x: Option<Vec<Vec<f64>>>,
    /// Response vector.
    #[serde(rename = "D", default)]
    pub response: Option<Vec<f64>>,
    /// Known noise standard deviation.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(rename = "K", default)]
    pub k: Option<usize>,
    /// Feature to test (0-based); defaults to the smallest selected index.
    #[serde(default)]
    pub target_feature: Option<usize>,
    /// Features tested jointly by the chi test (0-based).
    #[serde(default)]
    pub target_group: Option<Vec<usize>>,
    /// Row-major `d × d` image.
    #[serde(default)]
    pub image: Option<Vec<f64>>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub tau: f64,
    /// Seed of the built-in network, used when `net` is absent.
    #[serde(default)]
    pub net_seed: u64,
    #[serde(default)]
    pub net: Option<PlNet>,
}

fn missing(key: &str, app: App) -> HarnessError {
    HarnessError::Config(format!("`{key}` is required for app {app}"))
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    fn sfs_problem(&self) -> Result<SfsProblem> {
        let rows = self.x.as_ref().ok_or_else(|| missing("X", self.app))?;
        let response = self
            .response
            .as_ref()
            .ok_or_else(|| missing("D", self.app))?;
        let k = self.k.ok_or_else(|| missing("K", self.app))?;
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if n == 0 || p == 0 || rows.iter().any(|r| r.len() != p) {
            return Err(HarnessError::Config(
                "`X` must be a non-empty rectangular matrix".into(),
            ));
        }
        if response.len() != n {
            return Err(HarnessError::Config(format!(
                "`D` has {} entries but `X` has {n} rows",
                response.len()
            )));
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Ok(SfsProblem::new(
            x,
            DVector::from_column_slice(response),
            self.sigma,
            k,
        )?)
    }

    /// Fits the selection algorithm and builds the selected hypothesis.
    pub fn instance(&self) -> Result<Instance> {
        match self.app {
            App::SfsZ => sfs_z_instance(&self.sfs_problem()?, self.target_feature),
            App::SfsChi => {
                let group = self
                    .target_group
                    .as_ref()
                    .ok_or_else(|| missing("target_group", self.app))?;
                sfs_chi_instance(&self.sfs_problem()?, group)
            }
            App::DnnZ => {
                let image = self
                    .image
                    .as_ref()
                    .ok_or_else(|| missing("image", self.app))?;
                let net = match (&self.net, self.d) {
                    (Some(net), _) => net.clone(),
                    (None, Some(d)) => PlNet::desk(d, self.net_seed)?,
                    (None, None) => return Err(missing("d", self.app)),
                };
                if image.len() != net.input_len() {
                    return Err(HarnessError::Config(format!(
                        "`image` has {} pixels but the network expects {}",
                        image.len(),
                        net.input_len()
                    )));
                }
                dnn_instance(
                    &net,
                    &DVector::from_column_slice(image),
                    self.tau,
                    self.sigma,
                )
            }
        }
    }
}

/// Outcome of single-shot inference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub app: App,
    pub method: Method,
    pub strategy: Option<Strategy>,
    /// Observed output of the selection algorithm.
    pub selected: Vec<usize>,
    pub statistic: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub decision: Decision,
    pub oracle_calls: usize,
    pub wall_time_ms: f64,
    /// Outer and inner brackets on the selective confidence interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_outer: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_inner: Option<(f64, f64)>,
}

/// Runs `method` on the problem. With `with_ci`, also brackets the
/// `1 - alpha` selective confidence interval from the final search state
/// (z-tests with a search-based method only).
pub fn run_test(
    problem: &ProblemFile,
    method: Method,
    strategy: Strategy,
    alpha: f64,
    eps: f64,
    with_ci: bool,
) -> Result<TestReport> {
    if !(alpha > 0.0 && alpha < 1.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(HarnessError::Config(
            "alpha and eps must lie in (0, 1)".into(),
        ));
    }
    let inst = problem.instance()?;
    let start = Instant::now();
    let out = run_method(&inst, method, strategy, alpha, eps)?;
    let (mut ci_outer, mut ci_inner) = (None, None);
    if with_ci {
        let state = out.state.as_ref().ok_or_else(|| {
            HarnessError::Config(format!(
                "confidence intervals need a search-based method, not {method}"
            ))
        })?;
        if !inst.dist.is_gaussian() {
            return Err(HarnessError::Config(
                "confidence intervals are available for z-tests only".into(),
            ));
        }
        let ci = selective_ci(alpha, state)?;
        ci_outer = Some(ci.outer);
        ci_inner = Some(ci.inner);
    }
    Ok(TestReport {
        app: problem.app,
        method,
        strategy: method.uses_strategy().then_some(strategy),
        selected: inst.selected,
        statistic: inst.t,
        p_lower: out.p_lower,
        p_upper: out.p_upper,
        decision: out.decision,
        oracle_calls: out.oracle_calls,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        ci_outer,
        ci_inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ProblemFile> {
        serde_json::from_str(s).map_err(|source| HarnessError::Json {
            path: "inline".into(),
            source,
        })
    }

    fn sfs_json(extra: &str) -> String {
        let rows: Vec<String> = (0..12)
            .map(|i| {
                let v: Vec<String> = (0..4)
                    .map(|j| format!("{}", ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * j as f64))
                    .collect();
                format!("[{}]", v.join(","))
            })
            .collect();
        let d: Vec<String> = (0..12)
            .map(|i| format!("{}", ((i * 5) % 7) as f64 - 3.0))
            .collect();
        format!(
            r#"{{"app":"sfs-z","X":[{}],"D":[{}],"sigma":1.0,"K":2{extra}}}"#,
            rows.join(","),
            d.join(",")
        )
    }

    #[test]
    fn sfs_problem_runs_and_reports() {
        let prob = parse(&sfs_json("")).unwrap();
        let rep = run_test(&prob, Method::Dec, Strategy::Pi3, 0.05, 1e-3, true).unwrap();
        assert_eq!(rep.selected.len(), 2);
        assert!(rep.p_lower <= rep.p_upper);
        let (lo, hi) = rep.ci_outer.unwrap();
        let (ilo, ihi) = rep.ci_inner.unwrap();
        assert!(lo <= ilo && ihi <= hi);
        let exh = run_test(&prob, Method::Exhaustive, Strategy::Pi1, 0.05, 1e-3, false).unwrap();
        assert_eq!(exh.decision, rep.decision);
    }

    #[test]
    fn unselected_target_is_a_config_error() {
        let prob = parse(&sfs_json("")).unwrap();
        let sel = prob.instance().unwrap().selected;
        let other = (0..4).find(|j| !sel.contains(j)).unwrap();
        let prob = parse(&sfs_json(&format!(r#","target_feature":{other}"#))).unwrap();
        assert_eq!(prob.instance().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn malformed_inputs_are_config_errors() {
        assert_eq!(
            parse(r#"{"app":"sfs-z","bogus":1}"#)
                .unwrap_err()
                .exit_code(),
            2
        );
        let prob = parse(r#"{"app":"sfs-z","X":[[1.0]],"K":1}"#).unwrap();
        assert_eq!(prob.instance().unwrap_err().exit_code(), 2);
        let prob = parse(r#"{"app":"dnn-z","image":[0.0,1.0],"d":4}"#).unwrap();
        assert_eq!(prob.instance().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn constant_image_is_degenerate() {
        let img = vec!["0.5"; 16].join(",");
        let prob = parse(&format!(
            r#"{{"app":"dnn-z","image":[{img}],"d":4,"tau":1e9}}"#
        ))
        .unwrap();
        assert_eq!(prob.instance().unwrap_err().exit_code(), 3);
    }
}
