use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::gaussian::{ComponentDoc, GaussianComponent, LogDensity};
use crate::error::{Error, Result};

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    components: Vec<GaussianComponent>,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct MixtureDoc {
    dim: usize,
    components: Vec<ComponentDoc>,
}

impl MixtureModel {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Data("a mixture needs at least one component".into()))?;
        let dim = first.dim();
        for c in &components {
            if c.dim() != dim || c.covariance.shape() != (dim, dim) {
                return Err(Error::Shape {
                    expected: dim,
                    got: c.dim(),
                });
            }
            if !(0.0..=1.0).contains(&c.weight) {
                return Err(Error::Data(format!("mixture weight {} outside [0,1]", c.weight)));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Data(format!("mixture weights sum to {total}")));
        }
        Ok(Self { components, dim })
    }

    /// Builds a model without validating weights; used mid-fit.
    pub(crate) fn from_parts(components: Vec<GaussianComponent>, dim: usize) -> Self {
        Self { components, dim }
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub(crate) fn components_mut(&mut self) -> &mut Vec<GaussianComponent> {
        &mut self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub(crate) fn log_densities(&self) -> Result<Vec<LogDensity>> {
        self.components
            .iter()
            .map(|c| LogDensity::new(&c.mean, &c.covariance))
            .collect()
    }

    /// `ln p(u | θ) = Σᵢ ln Σ_j π_j N(uᵢ | μ_j, Σ_j)`.
    pub fn log_likelihood(&self, data: &[Vec<f64>]) -> Result<f64> {
        check_data(data, self.dim)?;
        let dens = self.log_densities()?;
        let log_w: Vec<f64> = self.components.iter().map(|c| c.weight.ln()).collect();
        let mut scratch = Vec::with_capacity(self.dim);
        let mut row = vec![0.0; self.k()];
        let mut total = 0.0;
        for u in data {
            for (j, d) in dens.iter().enumerate() {
                row[j] = log_w[j] + d.ln_pdf(u, &mut scratch);
            }
            total += log_sum_exp(&row);
        }
        Ok(total)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = MixtureDoc {
            dim: self.dim,
            components: self.components.iter().map(ComponentDoc::from).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MixtureDoc = serde_json::from_str(text)?;
        let components = doc
            .components
            .into_iter()
            .map(|c| c.into_component(doc.dim))
            .collect::<Result<Vec<_>>>()?;
        let model = Self::new(components)?;
        if model.dim != doc.dim {
            return Err(Error::Shape {
                expected: doc.dim,
                got: model.dim,
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Posterior component memberships, one row per datum.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    matrix: DMatrix<f64>,
}

impl Responsibilities {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        for i in 0..matrix.nrows() {
            let s: f64 = matrix.row(i).iter().sum();
            if (s - 1.0).abs() > 1e-9 || matrix.row(i).iter().any(|&r| !(0.0..=1.0).contains(&r)) {
                return Err(Error::Data(format!("responsibility row {i} is not a distribution")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn k(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.matrix[(i, c)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Column sums `r_c = Σᵢ r_ic`.
    pub fn masses(&self) -> Vec<f64> {
        (0..self.k()).map(|c| self.matrix.column(c).sum()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureFitConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Relative change in the objective that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Minimum covariance eigenvalue, relative to `trace(Σ_global)/d`.
    pub cov_floor: f64,
    pub seed: u64,
}

impl Default for MixtureFitConfig {
    fn default() -> Self {
        Self {
            k_min: 1,
            k_max: 25,
            tol: 1e-6,
            max_iter: 500,
            cov_floor: 1e-9,
            seed: 0,
        }
    }
}

impl MixtureFitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min < 1 || self.k_min > self.k_max {
            return Err(Error::Config(format!(
                "need 1 <= k_min <= k_max, got k_min={} k_max={}",
                self.k_min, self.k_max
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if !(self.cov_floor > 0.0) {
            return Err(Error::Config("cov_floor must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_data(data: &[Vec<f64>], dim: usize) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    for row in data {
        if row.len() != dim {
            return Err(Error::Shape {
                expected: dim,
                got: row.len(),
            });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("non-finite value in data".into()));
        }
    }
    Ok(())
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
