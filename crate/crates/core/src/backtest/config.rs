use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::{DrlConfig, OptimizerKind};
use crate::error::{Error, Result};
use crate::mixture::MixtureFitConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Drl,
    Mom,
    Carry,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Drl, Strategy::Mom, Strategy::Carry];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Drl => "drl",
            Strategy::Mom => "mom",
            Strategy::Carry => "carry",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "drl" => Ok(Strategy::Drl),
            "mom" => Ok(Strategy::Mom),
            "carry" => Ok(Strategy::Carry),
            other => Err(Error::Config(format!("unknown strategy `{other}` (expected drl, mom or carry)"))),
        }
    }
}

/// Learner and mixture hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    /// τ, shared by the moment estimates and both recursive filters.
    pub decay: f64,
    /// α, the ridge penalty that sets the initial precision.
    pub ridge: f64,
    pub lambda_init: f64,
    pub optimizer: OptimizerKind,
    pub adam_learning_rate: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub cov_floor: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        let mix = MixtureFitConfig::default();
        let drl = DrlConfig::default();
        Self {
            decay: drl.decay,
            ridge: drl.ridge,
            lambda_init: drl.lambda_init,
            optimizer: drl.optimizer,
            adam_learning_rate: drl.adam_learning_rate,
            k_min: mix.k_min,
            k_max: mix.k_max,
            tol: mix.tol,
            max_iter: mix.max_iter,
            cov_floor: mix.cov_floor,
        }
    }
}

impl Hyper {
    pub fn drl(&self) -> DrlConfig {
        DrlConfig {
            decay: self.decay,
            ridge: self.ridge,
            lambda_init: self.lambda_init,
            optimizer: self.optimizer,
            adam_learning_rate: self.adam_learning_rate,
        }
    }

    pub fn mixture(&self, seed: u64) -> MixtureFitConfig {
        MixtureFitConfig {
            k_min: self.k_min,
            k_max: self.k_max,
            tol: self.tol,
            max_iter: self.max_iter,
            cov_floor: self.cov_floor,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestConfig {
    pub train_fraction: f64,
    /// Fixes the training length in dates, overriding `train_fraction`.
    pub train_size: Option<usize>,
    pub costs_enabled: bool,
    pub carry_enabled: bool,
    pub strategies: Vec<Strategy>,
    pub seed: u64,
    pub hyper: Hyper,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            train_fraction: 1.0 / 3.0,
            train_size: None,
            costs_enabled: true,
            carry_enabled: true,
            strategies: Strategy::ALL.to_vec(),
            seed: 0,
            hyper: Hyper::default(),
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies selected".into()));
        }
        self.hyper.mixture(self.seed).validate()?;
        Ok(())
    }

    /// Selected strategies, deduplicated, in canonical order.
    pub fn strategy_set(&self) -> Vec<Strategy> {
        let mut s = self.strategies.clone();
        s.sort();
        s.dedup();
        s
    }

    pub fn train_len(&self, n_dates: usize) -> Result<usize> {
        match self.train_size {
            Some(n_train) => {
                check_parts(n_dates, n_train)?;
                Ok(n_train)
            }
            None => split(n_dates, self.train_fraction),
        }
    }
}

/// Smallest panel the split accepts.
pub const MIN_DATES: usize = 10;

fn check_parts(n: usize, n_train: usize) -> Result<()> {
    if n < MIN_DATES {
        return Err(Error::Config(format!("need at least {MIN_DATES} dates to split, got {n}")));
    }
    if n_train == 0 || n_train >= n {
        return Err(Error::Config(format!(
            "train length {n_train} leaves an empty part of a {n}-date panel"
        )));
    }
    Ok(())
}

/// Number of leading dates used for training: `⌈fraction·n⌉`.
pub fn split(n_dates: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {fraction} outside (0, 1)")));
    }
    // The epsilon keeps exact products like 0.5·10 from rounding up.
    let n_train = (fraction * n_dates as f64 - 1e-9).ceil().max(0.0) as usize;
    check_parts(n_dates, n_train)?;
    Ok(n_train)
}
