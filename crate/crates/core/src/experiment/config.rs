use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forest::{Partitioner, TreeParams};
use crate::synth::{Scenario, Setup};

/// Subsample size rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SRule {
    /// `floor(sqrt(n))`
    Sqrt,
    /// `floor(n^0.8)`
    Pow08,
    /// `min(k, n)`
    Fixed(usize),
}

impl FromStr for SRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sqrt" => Ok(SRule::Sqrt),
            "pow08" => Ok(SRule::Pow08),
            other => other
                .strip_prefix("fixed:")
                .and_then(|k| k.parse().ok())
                .filter(|&k: &usize| k >= 1)
                .map(SRule::Fixed)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown s rule {other:?}"))),
        }
    }
}

impl fmt::Display for SRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SRule::Sqrt => write!(f, "sqrt"),
            SRule::Pow08 => write!(f, "pow08"),
            SRule::Fixed(k) => write!(f, "fixed:{k}"),
        }
    }
}

/// The function an estimator converges to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Mu,
    MuStar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    IrfSub,
    NnSub,
    NnUnder,
    NnIs,
    IrfUnder,
    IrfIs,
}

impl Estimator {
    pub const ALL: [Estimator; 6] = [
        Estimator::IrfSub,
        Estimator::NnSub,
        Estimator::NnUnder,
        Estimator::NnIs,
        Estimator::IrfUnder,
        Estimator::IrfIs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::IrfSub => "irf_sub",
            Estimator::NnSub => "nn_sub",
            Estimator::NnUnder => "nn_under",
            Estimator::NnIs => "nn_is",
            Estimator::IrfUnder => "irf_under",
            Estimator::IrfIs => "irf_is",
        }
    }

    pub fn target(self) -> Target {
        match self {
            Estimator::NnUnder | Estimator::IrfUnder => Target::MuStar,
            _ => Target::Mu,
        }
    }

    /// Whether the estimator draws stratified subsamples.
    pub fn stratified(self) -> bool {
        !matches!(self, Estimator::IrfSub | Estimator::NnSub)
    }

    pub fn is_forest(self) -> bool {
        matches!(self, Estimator::IrfSub | Estimator::IrfUnder | Estimator::IrfIs)
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown estimator {s:?}")))
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a `mc` or `clt` run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub setup: Setup,
    pub scenario: Scenario,
    pub d: usize,
    pub n_list: Vec<usize>,
    pub s_rule: SRule,
    /// Ensemble size; 0 evaluates the infinite ensemble exactly where a
    /// closed form exists.
    pub b: usize,
    pub reps: usize,
    pub grid_per_axis: usize,
    pub estimators: Vec<Estimator>,
    pub seed: u64,
    pub threads: usize,
    pub probe_points: Vec<Vec<f64>>,
    pub partitioner: Partitioner,
    /// Class-1 share of the rule's `s` for stratified subsamples. `None`
    /// uses the `s = min(n0, n1)`, `s1 = floor(sqrt(s))`,
    /// `s0 = ceil(sqrt(s))` sizes.
    pub under_split: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            setup: Setup::MarginalImbalance,
            scenario: Scenario::Balanced,
            d: 2,
            n_list: vec![100, 200, 400, 600, 800, 1000],
            s_rule: SRule::Sqrt,
            b: 500,
            reps: 500,
            grid_per_axis: 100,
            estimators: Estimator::ALL.to_vec(),
            seed: 1,
            threads: 1,
            probe_points: vec![vec![0.25, 0.25], vec![-0.5, -0.5]],
            partitioner: Partitioner::default(),
            under_split: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value {value:?} for {key}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').filter(|v| !v.trim().is_empty()).map(|v| parse(key, v)).collect()
}

impl ExperimentConfig {
    /// Sets one `key=value` option.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "setup" => self.setup = Setup::from_index(parse(key, value)?)?,
            "scenario" => self.scenario = Scenario::from_index(parse(key, value)?)?,
            "d" => self.d = parse(key, value)?,
            "n" => self.n_list = parse_list(key, value)?,
            "s_rule" | "s-rule" => self.s_rule = value.parse()?,
            "b" | "B" => self.b = parse(key, value)?,
            "reps" => self.reps = parse(key, value)?,
            "grid" => self.grid_per_axis = parse(key, value)?,
            "estimators" => {
                self.estimators = value.split(',').map(str::parse).collect::<Result<_>>()?;
            }
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "probes" => {
                // `x1:x2;x1:x2`
                self.probe_points = value
                    .split(';')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| p.split(':').map(|v| parse(key, v)).collect())
                    .collect::<Result<_>>()?;
            }
            "under_split" | "under-split" => self.under_split = Some(parse(key, value)?),
            "min_leaf" | "min-leaf" => {
                let params = self.tree_params();
                self.partitioner = Partitioner::RandomSplit(TreeParams { min_leaf: parse(key, value)?, ..params });
            }
            "max_depth" | "max-depth" => {
                let params = self.tree_params();
                self.partitioner = Partitioner::RandomSplit(TreeParams { max_depth: Some(parse(key, value)?), ..params });
            }
            "grid_partition" | "grid-partition" => {
                self.partitioner = Partitioner::Grid { cells_per_axis: parse(key, value)? };
            }
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        match self.partitioner {
            Partitioner::RandomSplit(p) => p,
            Partitioner::Grid { .. } => TreeParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.reps < 2 {
            return bad("reps must be at least 2");
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("n list must be nonempty and positive");
        }
        if self.grid_per_axis < 2 {
            return bad("grid must have at least 2 points per axis");
        }
        if self.estimators.is_empty() {
            return bad("no estimators selected");
        }
        if let Some(p) = self.under_split {
            if !(p > 0.0 && p < 1.0) {
                return bad("under split must lie in (0, 1)");
            }
        }
        if self.probe_points.iter().any(|p| p.len() != self.d) {
            return bad("probe dimension differs from d");
        }
        Ok(())
    }
}

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_config(text: &str, base: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = base;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key=value", no + 1)))?;
        cfg.set(k, v)?;
    }
    Ok(cfg)
}
