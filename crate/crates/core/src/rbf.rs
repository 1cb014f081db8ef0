//! Radial basis function feature map built from a fitted mixture.
//!
//! Each mixture component becomes one unweighted hidden unit
//! `φ_j(u) = exp(−½ (u−μ_j)ᵀ Σ_j⁻¹ (u−μ_j))`. The recurrent feature vector
//! handed to the learning agents is `[1, φ_1(u), …, φ_m(u), f_{t−1}]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mixture::MixtureModel;

#[derive(Debug, Clone, PartialEq)]
pub struct RbfNetwork {
    centers: Vec<DVector<f64>>,
    precisions: Vec<DMatrix<f64>>,
    dim: usize,
}

impl RbfNetwork {
    /// One hidden unit per component; mixture weights are discarded.
    pub fn from_mixture(model: &MixtureModel) -> Result<Self> {
        let mut centers = Vec::with_capacity(model.k());
        let mut precisions = Vec::with_capacity(model.k());
        for c in model.components() {
            let inv = c
                .covariance
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Numeric("component covariance is not positive definite".into()))?
                .inverse();
            precisions.push((&inv + inv.transpose()) * 0.5);
            centers.push(c.mean.clone());
        }
        Ok(Self {
            centers,
            precisions,
            dim: model.dim(),
        })
    }

    pub fn m(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centers(&self) -> &[DVector<f64>] {
        &self.centers
    }

    pub fn precisions(&self) -> &[DMatrix<f64>] {
        &self.precisions
    }

    pub fn activations(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.m());
        self.activations_into(u, &mut out)?;
        Ok(out)
    }

    pub fn activations_into(&self, u: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: u.len(),
            });
        }
        out.clear();
        let mut dev = vec![0.0; self.dim];
        for (mu, prec) in self.centers.iter().zip(&self.precisions) {
            for (d, (x, m)) in dev.iter_mut().zip(u.iter().zip(mu.iter())) {
                *d = x - m;
            }
            let mut q = 0.0;
            for a in 0..self.dim {
                let mut row = 0.0;
                for b in 0..self.dim {
                    row += prec[(a, b)] * dev[b];
                }
                q += dev[a] * row;
            }
            out.push((-0.5 * q.max(0.0)).exp());
        }
        Ok(())
    }

    pub fn features(&self, u: &[f64], f_prev: f64) -> Result<RecurrentFeatureVector> {
        let act = self.activations(u)?;
        Ok(RecurrentFeatureVector::assemble(&act, f_prev))
    }
}

/// `[1, φ_1, …, φ_m, f_{t−1}]`: bias first, recurrent slot last.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentFeatureVector {
    values: Vec<f64>,
}

impl RecurrentFeatureVector {
    pub fn assemble(activations: &[f64], f_prev: f64) -> Self {
        let mut values = Vec::with_capacity(activations.len() + 2);
        values.push(1.0);
        values.extend_from_slice(activations);
        values.push(f_prev);
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn recurrent(&self) -> f64 {
        *self.values.last().expect("feature vector is never empty")
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }
}
