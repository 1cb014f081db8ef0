use serde::{Deserialize, Serialize};

use super::{sign, StepInputs};
use crate::error::{Error, Result};
use crate::estimators::{AdamState, EkfState, FilterSnapshot, MovingMoments, StepStatus};
use crate::rbf::RecurrentFeatureVector;

/// Smallest risk appetite calibration may return.
pub const LAMBDA_MIN: f64 = 1e-6;

/// `f = tanh(θᵀx)`.
pub fn drl_position(theta: &[f64], x: &[f64]) -> f64 {
    theta.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().tanh()
}

/// `Δp·f_{t−1} − δ|f_t − f_{t−1}| + carry(f_t)` in price units. The held
/// position earns the bar's move; the new one pays the crossing and the
/// overnight carry of its side.
pub fn net_reward(f_t: f64, f_prev: f64, inputs: &StepInputs) -> f64 {
    inputs.delta_price * f_prev - inputs.half_spread * (f_t - f_prev).abs() + inputs.carry.accrual(f_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Ekf,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrlConfig {
    pub decay: f64,
    pub ridge: f64,
    pub lambda_init: f64,
    pub optimizer: OptimizerKind,
    pub adam_learning_rate: f64,
}

impl Default for DrlConfig {
    fn default() -> Self {
        Self {
            decay: 0.99,
            ridge: 1.0,
            lambda_init: 1.0,
            optimizer: OptimizerKind::Ekf,
            adam_learning_rate: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Optimizer {
    Ekf(EkfState),
    Adam { state: AdamState, theta: Vec<f64> },
}

/// Everything one bar produced.
#[derive(Debug, Clone, PartialEq)]
pub struct DrlStep {
    pub position: f64,
    pub previous: f64,
    pub reward: f64,
    pub gradient: Vec<f64>,
    pub status: StepStatus,
}

/// Recurrent policy ascending a mean-variance utility online.
///
/// The position derivative is truncated after one recurrent hop:
/// `D_t = x_t·tanh′_t + θ_rec·tanh′_t · x_{t−1}·tanh′_{t−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrlAgent {
    optimizer: Optimizer,
    config: DrlConfig,
    f_prev: f64,
    /// `∂f_{t−1}/∂θ`, without the recurrent hop.
    partial_prev: Vec<f64>,
    /// `D_{t−1}`.
    total_prev: Vec<f64>,
    moments: MovingMoments,
    lambda: f64,
    learning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrlSnapshot {
    pub theta: Vec<f64>,
    pub filter: Option<FilterSnapshot>,
    pub f_prev: f64,
    pub partial_prev: Vec<f64>,
    pub total_prev: Vec<f64>,
    pub lambda: f64,
    pub mean: f64,
    pub variance: f64,
}

impl DrlAgent {
    /// Cold start with `θ = 0` over `m` basis functions.
    pub fn new(m: usize, config: DrlConfig) -> Result<Self> {
        let d = m + 2;
        if !(config.lambda_init > 0.0 && config.lambda_init.is_finite()) {
            return Err(Error::Config(format!("lambda_init must be positive, got {}", config.lambda_init)));
        }
        let optimizer = match config.optimizer {
            OptimizerKind::Ekf => Optimizer::Ekf(EkfState::new(d, config.ridge, config.decay)?),
            OptimizerKind::Adam => {
                let mut state = AdamState::new(d);
                state.learning_rate = config.adam_learning_rate;
                state.validate()?;
                Optimizer::Adam {
                    state,
                    theta: vec![0.0; d],
                }
            }
        };
        if !(config.decay > 0.0 && config.decay <= 1.0) {
            return Err(Error::Config(format!("decay must lie in (0, 1], got {}", config.decay)));
        }
        Ok(Self {
            optimizer,
            config,
            f_prev: 0.0,
            partial_prev: vec![0.0; d],
            total_prev: vec![0.0; d],
            moments: MovingMoments::new(config.decay),
            lambda: config.lambda_init,
            learning: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.partial_prev.len()
    }

    pub fn theta(&self) -> &[f64] {
        match &self.optimizer {
            Optimizer::Ekf(s) => s.weights().as_slice(),
            Optimizer::Adam { theta, .. } => theta,
        }
    }

    pub fn position(&self) -> f64 {
        self.f_prev
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("risk appetite must be positive, got {lambda}")));
        }
        self.lambda = lambda;
        Ok(())
    }

    pub fn moments(&self) -> &MovingMoments {
        &self.moments
    }

    /// A frozen agent still trades and tracks its moments but never moves θ.
    pub fn set_learning(&mut self, on: bool) {
        self.learning = on;
    }

    pub fn step(&mut self, activations: &[f64], inputs: &StepInputs) -> Result<DrlStep> {
        let d = self.dim();
        if activations.len() + 2 != d {
            return Err(Error::Shape {
                expected: d - 2,
                got: activations.len(),
            });
        }
        let x = RecurrentFeatureVector::assemble(activations, self.f_prev).into_inner();
        let f_prev = self.f_prev;
        let theta = self.theta();
        let f = drl_position(theta, &x);
        let theta_rec = theta[d - 1];
        if !f.is_finite() {
            return Err(Error::Numeric("non-finite position from features".into()));
        }
        let reward = net_reward(f, f_prev, inputs);
        self.moments.update(reward);

        let slope = 1.0 - f * f;
        let hop = theta_rec * slope;
        let partial: Vec<f64> = x.iter().map(|v| v * slope).collect();
        let total: Vec<f64> = partial
            .iter()
            .zip(&self.partial_prev)
            .map(|(p, q)| p + hop * q)
            .collect();

        let du_dr = (1.0 - self.config.decay) * (1.0 - self.lambda * (reward - self.moments.mean));
        let trade = sign(f - f_prev);
        let dr_df = -inputs.half_spread * trade + inputs.carry.slope(f);
        let dr_dprev = inputs.delta_price + inputs.half_spread * trade;
        let gradient: Vec<f64> = total
            .iter()
            .zip(&self.total_prev)
            .map(|(a, b)| du_dr * (dr_df * a + dr_dprev * b))
            .collect();

        let status = if self.learning {
            match &mut self.optimizer {
                Optimizer::Ekf(s) => s.step(&gradient)?,
                Optimizer::Adam { state, theta } => state.step(theta, &gradient)?,
            }
        } else {
            StepStatus::Applied
        };
        if status == StepStatus::Rejected {
            log::warn!("recurrent learner rejected a non-finite update");
        }

        self.f_prev = f;
        self.partial_prev = partial;
        self.total_prev = total;
        Ok(DrlStep {
            position: f,
            previous: f_prev,
            reward,
            gradient,
            status,
        })
    }

    pub fn snapshot(&self) -> DrlSnapshot {
        DrlSnapshot {
            theta: self.theta().to_vec(),
            filter: match &self.optimizer {
                Optimizer::Ekf(s) => Some(s.snapshot()),
                Optimizer::Adam { .. } => None,
            },
            f_prev: self.f_prev,
            partial_prev: self.partial_prev.clone(),
            total_prev: self.total_prev.clone(),
            lambda: self.lambda,
            mean: self.moments.mean,
            variance: self.moments.variance,
        }
    }

    /// Restores an EKF-driven agent.
    pub fn from_snapshot(snap: &DrlSnapshot, config: DrlConfig) -> Result<Self> {
        let filter = snap
            .filter
            .as_ref()
            .ok_or_else(|| Error::Config("snapshot has no filter state".into()))?;
        let ekf = EkfState::from_snapshot(filter)?;
        let d = ekf.dim();
        if snap.partial_prev.len() != d || snap.total_prev.len() != d {
            return Err(Error::Shape {
                expected: d,
                got: snap.partial_prev.len(),
            });
        }
        let mut agent = Self::new(d - 2, DrlConfig { optimizer: OptimizerKind::Ekf, ..config })?;
        agent.optimizer = Optimizer::Ekf(ekf);
        agent.f_prev = snap.f_prev;
        agent.partial_prev = snap.partial_prev.clone();
        agent.total_prev = snap.total_prev.clone();
        agent.lambda = snap.lambda;
        agent.moments.mean = snap.mean;
        agent.moments.variance = snap.variance;
        Ok(agent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub lambda: f64,
    /// Daily `μ/σ` of the training rewards, when defined.
    pub ir: Option<f64>,
    /// Set when the rewards had no dispersion and the floor was used.
    pub degenerate: bool,
}

/// `λ = max(ir/σ, λ_min)` from a training pass, with `ir = μ/σ` using the
/// sample standard deviation.
pub fn calibrate_lambda(rewards: &[f64]) -> Calibration {
    let n = rewards.len();
    let floor = Calibration {
        lambda: LAMBDA_MIN,
        ir: None,
        degenerate: true,
    };
    if n < 2 {
        return floor;
    }
    let mean = rewards.iter().sum::<f64>() / n as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sigma = var.sqrt();
    if !(sigma > 0.0) || !sigma.is_finite() {
        return floor;
    }
    let ir = mean / sigma;
    Calibration {
        lambda: (ir / sigma).max(LAMBDA_MIN),
        ir: Some(ir),
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::CarryRates;
    use approx::assert_abs_diff_eq;

    fn inputs(dp: f64, delta: f64, long: f64, short: f64) -> StepInputs {
        StepInputs {
            delta_price: dp,
            half_spread: delta,
            carry: CarryRates { long, short },
            mid: 1.0,
        }
    }

    #[test]
    fn position_examples() {
        assert_eq!(drl_position(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
        assert_abs_diff_eq!(drl_position(&[1.0], &[1.0]), 0.761_594_155_955_764_9, epsilon = 1e-15);
        assert_eq!(drl_position(&[1e6], &[1.0]), 1.0);
    }

    #[test]
    fn reward_examples() {
        let r = net_reward(0.5, 1.0, &inputs(0.001, 0.0001, 0.0002, -0.0003));
        assert_abs_diff_eq!(r, 0.00105, epsilon = 1e-15);
        assert_eq!(net_reward(0.0, 0.0, &inputs(0.3, 0.1, 0.2, 0.2)), 0.0);
        assert_abs_diff_eq!(net_reward(-1.0, -1.0, &inputs(0.0, 0.7, -0.12, 0.10)), 0.10, epsilon = 1e-15);
    }

    #[test]
    fn reward_without_frictions_is_held_move() {
        let i = inputs(0.0123, 0.0, 0.0, 0.0);
        assert_eq!(net_reward(-0.4, 0.7, &i), 0.0123 * 0.7);
    }

    #[test]
    fn reward_is_kinked_at_the_held_position() {
        let i = inputs(0.01, 0.002, 0.0, 0.0);
        let (prev, h) = (0.3, 0.1);
        let mid = net_reward(prev, prev, &i);
        let left = net_reward(prev - h, prev, &i);
        let right = net_reward(prev + h, prev, &i);
        assert!(mid > 0.5 * (left + right));
    }

    #[test]
    fn cold_start_gradient_is_features_times_reward_slope() {
        let mut a = DrlAgent::new(2, DrlConfig::default()).unwrap();
        let s = a.step(&[0.5, 0.25], &inputs(0.0, 0.0, 0.001, -0.002)).unwrap();
        assert_eq!(s.position, 0.0);
        assert_eq!(s.reward, 0.0);
        // θ = 0: D = x, dr/df = κ_long, dυ/dr = (1−τ).
        let scale = 0.01 * 0.001;
        for (g, x) in s.gradient.iter().zip([1.0, 0.5, 0.25, 0.0]) {
            assert_abs_diff_eq!(*g, scale * x, epsilon = 1e-18);
        }
    }

    #[test]
    fn stationary_market_gives_zero_gradient() {
        let mut a = DrlAgent::new(3, DrlConfig::default()).unwrap();
        for _ in 0..5 {
            let s = a.step(&[0.1, 0.2, 0.3], &inputs(0.0, 0.0, 0.0, 0.0)).unwrap();
            assert!(s.gradient.iter().all(|&g| g == 0.0));
        }
        assert!(a.theta().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn calibration_examples() {
        // Two-point stream with mean 5e-4 and sample σ 1e-2.
        let s = 1e-2 / 2f64.sqrt();
        let c = calibrate_lambda(&[5e-4 + s, 5e-4 - s]);
        assert_abs_diff_eq!(c.ir.unwrap(), 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(c.lambda, 5.0, epsilon = 1e-9);
        let z = calibrate_lambda(&[0.0; 10]);
        assert!(z.degenerate);
        assert_eq!(z.lambda, LAMBDA_MIN);
        let neg = calibrate_lambda(&[-0.01, -0.02, 0.0]);
        assert_eq!(neg.lambda, LAMBDA_MIN);
        assert!(!neg.degenerate);
        assert_eq!(DrlAgent::new(1, DrlConfig::default()).unwrap().lambda(), 1.0);
    }

    #[test]
    fn snapshot_restores_state() {
        let mut a = DrlAgent::new(2, DrlConfig::default()).unwrap();
        for t in 0..10 {
            a.step(&[0.3, 0.1 * t as f64], &inputs(0.01 * (t as f64).sin(), 0.001, 0.0001, -0.0002))
                .unwrap();
        }
        let text = serde_json::to_string(&a.snapshot()).unwrap();
        let snap: DrlSnapshot = serde_json::from_str(&text).unwrap();
        let mut b = DrlAgent::from_snapshot(&snap, DrlConfig::default()).unwrap();
        let i = inputs(0.02, 0.001, 0.0001, -0.0002);
        assert_eq!(a.step(&[0.2, 0.2], &i).unwrap(), b.step(&[0.2, 0.2], &i).unwrap());
    }

    #[test]
    fn adam_variant_moves_theta() {
        let cfg = DrlConfig {
            optimizer: OptimizerKind::Adam,
            ..Default::default()
        };
        let mut a = DrlAgent::new(1, cfg).unwrap();
        a.step(&[1.0], &inputs(0.0, 0.0, 0.01, -0.02)).unwrap();
        assert!(a.theta()[0] > 0.0);
        assert!(a.snapshot().filter.is_none());
    }
}
