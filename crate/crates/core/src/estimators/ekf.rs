use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_decay, check_len, initial_precision, rank_one, StepStatus};
use crate::error::{Error, Result};

/// Gradient-driven filter that tracks weights and an approximate inverse
/// Hessian of the objective being ascended.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    weights: DVector<f64>,
    precision: DMatrix<f64>,
    ridge: f64,
    decay: f64,
    rejected: u64,
}

impl EkfState {
    /// `θ = 0`, `P = I/α`.
    pub fn new(dim: usize, ridge: f64, decay: f64) -> Result<Self> {
        check_decay(decay)?;
        Ok(Self {
            weights: DVector::zeros(dim),
            precision: initial_precision(dim, ridge)?,
            ridge,
            decay,
            rejected: 0,
        })
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

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// Steps refused because of non-finite input or output.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn step(&mut self, gradient: &[f64]) -> Result<StepStatus> {
        check_len(self.dim(), gradient.len())?;
        if gradient.iter().any(|g| !g.is_finite()) {
            self.rejected += 1;
            return Ok(StepStatus::Rejected);
        }
        let g = DVector::from_column_slice(gradient);
        match rank_one(&self.precision, &g, self.decay) {
            Some((k, p)) if (&self.weights + &k).iter().all(|v| v.is_finite()) => {
                self.weights += k;
                self.precision = p;
                Ok(StepStatus::Applied)
            }
            _ => {
                self.rejected += 1;
                Ok(StepStatus::Rejected)
            }
        }
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
            rejected: 0,
        })
    }
}

/// Warm-restart form shared by the recursive filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSnapshot {
    pub weights: Vec<f64>,
    pub precision: Vec<Vec<f64>>,
    pub ridge: f64,
    pub decay: f64,
}

impl FilterSnapshot {
    pub(crate) fn capture(w: &DVector<f64>, p: &DMatrix<f64>, ridge: f64, decay: f64) -> Self {
        Self {
            weights: w.iter().copied().collect(),
            precision: p.row_iter().map(|r| r.iter().copied().collect()).collect(),
            ridge,
            decay,
        }
    }

    pub(crate) fn restore(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let d = self.weights.len();
        check_len(d, self.precision.len())?;
        for row in &self.precision {
            check_len(d, row.len())?;
        }
        let p = DMatrix::from_fn(d, d, |a, b| self.precision[a][b]);
        if p != p.transpose() || p.clone().cholesky().is_none() {
            return Err(Error::Data("snapshot precision is not symmetric positive definite".into()));
        }
        Ok((DVector::from_column_slice(&self.weights), p))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
