use super::{check_len, StepStatus};
use crate::error::{Error, Result};

/// How the moment estimates are de-biased before the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasCorrection {
    /// `m̂ = m/(1−β₁)`, `v̂ = v/(1−β₂)` with no step exponent. For a constant
    /// gradient the step settles at `η·√(1−β₂)/(1−β₁)`, not `η`.
    #[default]
    AsPrinted,
    /// `m̂ = m/(1−β₁ᵗ)`, `v̂ = v/(1−β₂ᵗ)`; the step settles at `η`.
    PerStep,
}

/// Moment-scaled gradient ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub correction: BiasCorrection,
    steps: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            beta1: 0.9,
            beta2: 0.999,
            learning_rate: 0.001,
            epsilon: 1e-8,
            correction: BiasCorrection::AsPrinted,
            steps: 0,
        }
    }

    pub fn with_correction(mut self, correction: BiasCorrection) -> Self {
        self.correction = correction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| b > 0.0 && b < 1.0;
        if !unit(self.beta1) || !unit(self.beta2) {
            return Err(Error::Config(format!(
                "Adam decays must lie in (0, 1), got {} and {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.epsilon > 0.0) || !(self.learning_rate > 0.0) {
            return Err(Error::Config("Adam epsilon and learning rate must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Moves `theta` up the gradient.
    pub fn step(&mut self, theta: &mut [f64], gradient: &[f64]) -> Result<StepStatus> {
        check_len(self.m.len(), theta.len())?;
        check_len(self.m.len(), gradient.len())?;
        if gradient.iter().any(|g| !g.is_finite()) {
            return Ok(StepStatus::Rejected);
        }
        let t = (self.steps + 1) as i32;
        let (c1, c2) = match self.correction {
            BiasCorrection::AsPrinted => (1.0 - self.beta1, 1.0 - self.beta2),
            BiasCorrection::PerStep => (1.0 - self.beta1.powi(t), 1.0 - self.beta2.powi(t)),
        };
        let mut m = self.m.clone();
        let mut v = self.v.clone();
        let mut next = theta.to_vec();
        for i in 0..m.len() {
            let g = gradient[i];
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
            next[i] += self.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + self.epsilon);
        }
        if next.iter().any(|x| !x.is_finite()) {
            return Ok(StepStatus::Rejected);
        }
        self.m = m;
        self.v = v;
        self.steps += 1;
        theta.copy_from_slice(&next);
        Ok(StepStatus::Applied)
    }
}
