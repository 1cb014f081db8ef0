use nalgebra::{DMatrix, DVector};

use super::ekf::FilterSnapshot;
use super::{check_decay, check_len, initial_precision, rank_one, StepStatus};
use crate::error::Result;

/// Exponentially weighted recursive least squares with ridge start
/// `P = I/α`.
///
/// With `stabilize` on (the default) each step ends with `P ← τP`. That
/// multiplication cancels the `1/τ` inflation, so the information matrix
/// grows as `P⁻¹ ← P⁻¹ + xxᵀ/τ` and the fit equals uniformly weighted ridge
/// regression with penalty `τα`. With it off the recursion forgets:
/// observation `i` of `n` carries weight `τ^{n−i}` and the penalty decays to
/// `τⁿα`.
#[derive(Debug, Clone, PartialEq)]
pub struct EwrlsState {
    weights: DVector<f64>,
    precision: DMatrix<f64>,
    ridge: f64,
    decay: f64,
    stabilize: bool,
    rejected: u64,
}

impl EwrlsState {
    pub fn new(dim: usize, ridge: f64, decay: f64) -> Result<Self> {
        check_decay(decay)?;
        Ok(Self {
            weights: DVector::zeros(dim),
            precision: initial_precision(dim, ridge)?,
            ridge,
            decay,
            stabilize: true,
            rejected: 0,
        })
    }

    pub fn with_stabilization(mut self, on: bool) -> Self {
        self.stabilize = on;
        self
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn stabilized(&self) -> bool {
        self.stabilize
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    /// Learns `y ≈ wᵀx_prev`.
    pub fn step(&mut self, x_prev: &[f64], y: f64) -> Result<StepStatus> {
        check_len(self.dim(), x_prev.len())?;
        if !y.is_finite() || x_prev.iter().any(|v| !v.is_finite()) {
            self.rejected += 1;
            return Ok(StepStatus::Rejected);
        }
        let x = DVector::from_column_slice(x_prev);
        let innovation = y - self.weights.dot(&x);
        let Some((k, mut p)) = rank_one(&self.precision, &x, self.decay) else {
            self.rejected += 1;
            return Ok(StepStatus::Rejected);
        };
        let w = &self.weights + k * innovation;
        if w.iter().any(|v| !v.is_finite()) {
            self.rejected += 1;
            return Ok(StepStatus::Rejected);
        }
        if self.stabilize {
            p *= self.decay;
        }
        self.weights = w;
        self.precision = p;
        Ok(StepStatus::Applied)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum())
    }

    pub fn snapshot(&self) -> FilterSnapshot {
        FilterSnapshot::capture(&self.weights, &self.precision, self.ridge, self.decay)
    }

    pub fn from_snapshot(snap: &FilterSnapshot) -> Result<Self> {
        let (weights, precision) = snap.restore()?;
        check_decay(snap.decay)?;
        Ok(Self {
            weights,
            precision,
            ridge: snap.ridge,
            decay: snap.decay,
            stabilize: true,
            rejected: 0,
        })
    }
}
