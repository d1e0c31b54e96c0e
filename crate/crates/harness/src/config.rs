//! Experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use adasi_core::Strategy;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Selection back-end and test of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum App {
    #[serde(rename = "sfs-z")]
    SfsZ,
    #[serde(rename = "sfs-chi")]
    SfsChi,
    #[serde(rename = "dnn-z")]
    DnnZ,
}

impl App {
    pub fn name(&self) -> &'static str {
        match self {
            App::SfsZ => "sfs-z",
            App::SfsChi => "sfs-chi",
            App::DnnZ => "dnn-z",
        }
    }
}

impl fmt::Display for App {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for App {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sfs-z" => Ok(App::SfsZ),
            "sfs-chi" => Ok(App::SfsChi),
            "dnn-z" => Ok(App::DnnZ),
            other => Err(HarnessError::Config(format!("unknown app `{other}`"))),
        }
    }
}

/// Way of computing a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical test ignoring selection.
    Naive,
    /// Conditions on the region of the observed point only.
    Oc,
    /// Sweeps the whole fixed search window.
    Exhaustive,
    /// Bounded search until the bounds are `eps` apart.
    Prec,
    /// Bounded search until the test decision at `alpha` is settled.
    Dec,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Naive,
        Method::Oc,
        Method::Exhaustive,
        Method::Prec,
        Method::Dec,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Oc => "oc",
            Method::Exhaustive => "exhaustive",
            Method::Prec => "prec",
            Method::Dec => "dec",
        }
    }

    /// Whether the method runs once per search strategy.
    pub fn uses_strategy(&self) -> bool {
        matches!(self, Method::Prec | Method::Dec)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Method::Naive),
            "oc" => Ok(Method::Oc),
            "exhaustive" => Ok(Method::Exhaustive),
            "prec" => Ok(Method::Prec),
            "dec" => Ok(Method::Dec),
            other => Err(HarnessError::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Parses a comma-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, T::Err> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(T::from_str)
        .collect()
}

pub fn parse_strategy(s: &str) -> Result<Strategy> {
    s.parse()
        .map_err(|e: adasi_core::Error| HarnessError::Config(e.to_string()))
}

/// Everything needed to run one synthetic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub app: App,
    /// Sample size of the regression problems.
    pub n: usize,
    /// Number of candidate features.
    pub p: usize,
    /// Number of stepwise selection steps.
    #[serde(rename = "K")]
    pub k: usize,
    /// Image side for the network back-end.
    pub d: usize,
    /// Saliency threshold.
    pub tau: f64,
    /// Seed of the frozen network weights.
    pub net_seed: u64,
    /// Signal strength; zero is the null.
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub strategies: Vec<Strategy>,
    pub eps: f64,
    pub alpha: f64,
    pub out_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `app`.
    pub fn new(app: App) -> Self {
        Self {
            app,
            n: 100,
            p: 10,
            k: 5,
            d: 8,
            tau: 0.0,
            net_seed: 0,
            delta: 0.0,
            trials: 1000,
            seed: 0,
            methods: Method::ALL.to_vec(),
            strategies: Strategy::ALL.to_vec(),
            eps: 0.001,
            alpha: 0.05,
            out_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !self.delta.is_finite() {
            return bad("delta must be finite".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.methods.iter().any(Method::uses_strategy) && self.strategies.is_empty() {
            return bad("bounded methods need at least one strategy".into());
        }
        match self.app {
            App::SfsZ | App::SfsChi => {
                if self.k == 0 || self.k > self.p || self.k > self.n {
                    return bad(format!(
                        "need 1 <= K <= min(n, p); got n={}, p={}, K={}",
                        self.n, self.p, self.k
                    ));
                }
                if self.delta != 0.0 && self.p < 5 {
                    return bad("the alternative puts signal on five features; need p >= 5".into());
                }
            }
            App::DnnZ => {
                if self.d < 4 || !self.d.is_multiple_of(2) {
                    return bad(format!(
                        "image side must be even and at least 4, got {}",
                        self.d
                    ));
                }
                if !self.tau.is_finite() {
                    return bad("tau must be finite".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for app in [App::SfsZ, App::SfsChi, App::DnnZ] {
            ExperimentConfig::new(app).validate().unwrap();
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = ExperimentConfig::new(App::SfsZ);
        type Tweak = Box<dyn Fn(&mut ExperimentConfig)>;
        let cases: Vec<Tweak> = vec![
            Box::new(|c| c.trials = 0),
            Box::new(|c| c.eps = 0.0),
            Box::new(|c| c.alpha = 1.0),
            Box::new(|c| c.k = 11),
            Box::new(|c| c.methods.clear()),
            Box::new(|c| c.strategies.clear()),
        ];
        for f in cases {
            let mut c = base.clone();
            f(&mut c);
            assert!(matches!(c.validate(), Err(HarnessError::Config(_))));
        }
        let mut c = ExperimentConfig::new(App::DnnZ);
        c.d = 7;
        assert!(c.validate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        for a in [App::SfsZ, App::SfsChi, App::DnnZ] {
            assert_eq!(a.name().parse::<App>().unwrap(), a);
        }
        assert_eq!(
            parse_list::<Method>("naive, dec").unwrap(),
            vec![Method::Naive, Method::Dec]
        );
        assert!(parse_list::<Method>("naive,bogus").is_err());
    }
}
