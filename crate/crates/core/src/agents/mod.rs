//! Position-producing policies: the recurrent reinforcement learner and the
//! momentum and carry baselines.

mod carry;
mod drl;
mod momentum;

pub use carry::carry_position;
pub use drl::{
    calibrate_lambda, drl_position, net_reward, Calibration, DrlAgent, DrlConfig, DrlSnapshot, DrlStep,
    OptimizerKind, LAMBDA_MIN,
};
pub use momentum::{momentum_features, MomentumAgent, MomentumSnapshot};

use crate::marketdata::CarryRates;

/// Market facts for one bar, in price units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInputs {
    /// Mid change over the bar just ended, earned by the position held into it.
    pub delta_price: f64,
    pub half_spread: f64,
    pub carry: CarryRates,
    pub mid: f64,
}

impl StepInputs {
    /// No costs, no carry.
    pub fn frictionless(delta_price: f64, mid: f64) -> Self {
        Self {
            delta_price,
            half_spread: 0.0,
            carry: CarryRates { long: 0.0, short: 0.0 },
            mid,
        }
    }
}

/// `sign` with `sign(0) = 0`.
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
