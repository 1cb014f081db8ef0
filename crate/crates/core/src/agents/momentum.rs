use serde::{Deserialize, Serialize};

use super::sign;
use crate::error::Result;
use crate::estimators::{EwrlsState, FilterSnapshot};

/// `[1, φ_1, …, φ_m]`: the recurrent slot is absent for this baseline.
pub fn momentum_features(activations: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(activations.len() + 1);
    x.push(1.0);
    x.extend_from_slice(activations);
    x
}

/// Trades the sign of a one-step-ahead return forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumAgent {
    ewrls: EwrlsState,
    x_prev: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumSnapshot {
    pub filter: FilterSnapshot,
    pub x_prev: Option<Vec<f64>>,
}

impl MomentumAgent {
    pub fn new(m: usize, ridge: f64, decay: f64) -> Result<Self> {
        Ok(Self {
            ewrls: EwrlsState::new(m + 1, ridge, decay)?,
            x_prev: None,
        })
    }

    pub fn filter(&self) -> &EwrlsState {
        &self.ewrls
    }

    /// Learns from `realized` (the return since the previous features were
    /// seen), then forecasts from today's activations. Returns
    /// `(position, forecast)`.
    pub fn step(&mut self, activations: &[f64], realized: f64) -> Result<(f64, f64)> {
        if let Some(x) = &self.x_prev {
            self.ewrls.step(x, realized)?;
        }
        let x = momentum_features(activations);
        let forecast = self.ewrls.predict(&x)?;
        self.x_prev = Some(x);
        Ok((sign(forecast), forecast))
    }

    pub fn snapshot(&self) -> MomentumSnapshot {
        MomentumSnapshot {
            filter: self.ewrls.snapshot(),
            x_prev: self.x_prev.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cold_start_is_flat() {
        let mut a = MomentumAgent::new(2, 1.0, 0.99).unwrap();
        assert_eq!(a.step(&[0.5, 0.2], 0.01).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn positive_forecast_goes_long() {
        let mut a = MomentumAgent::new(1, 1.0, 0.99).unwrap();
        a.step(&[1.0], 0.0).unwrap();
        let (f, y) = a.step(&[1.0], 0.02).unwrap();
        assert!(y > 0.0);
        assert_eq!(f, 1.0);
        let (f, _) = a.step(&[1.0], -0.5).unwrap();
        assert_eq!(f, -1.0);
    }

    #[test]
    fn features_have_bias_and_no_recurrent_slot() {
        assert_eq!(momentum_features(&[0.3, 0.4]), vec![1.0, 0.3, 0.4]);
    }
}
