use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound applied on top of the relative covariance floor so that
/// exactly constant data still yields a usable density.
pub const MIN_ABSOLUTE_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianComponent {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Precomputed quantities for evaluating `ln N(u | μ, Σ)` repeatedly.
#[derive(Debug, Clone)]
pub(crate) struct LogDensity {
    mean: Vec<f64>,
    /// Row-major lower Cholesky factor of Σ.
    chol: Vec<f64>,
    log_norm: f64,
    dim: usize,
}

impl LogDensity {
    pub(crate) fn new(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::Shape {
                expected: d,
                got: cov.nrows(),
            });
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("covariance is not positive definite".into()))?;
        let l = chol.l();
        let mut log_det = 0.0;
        let mut flat = vec![0.0; d * d];
        for i in 0..d {
            let lii = l[(i, i)];
            if !(lii > 0.0) || !lii.is_finite() {
                return Err(Error::Numeric("singular covariance".into()));
            }
            log_det += 2.0 * lii.ln();
            for j in 0..=i {
                flat[i * d + j] = l[(i, j)];
            }
        }
        Ok(Self {
            mean: mean.iter().copied().collect(),
            chol: flat,
            log_norm: -0.5 * (d as f64 * (2.0 * PI).ln() + log_det),
            dim: d,
        })
    }

    /// Squared Mahalanobis distance `(u−μ)ᵀ Σ⁻¹ (u−μ)`.
    pub(crate) fn mahalanobis_sq(&self, u: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let d = self.dim;
        scratch.clear();
        scratch.extend(u.iter().zip(&self.mean).map(|(a, b)| a - b));
        let mut acc = 0.0;
        for i in 0..d {
            let row = &self.chol[i * d..i * d + i];
            let mut s = scratch[i];
            for (lij, yj) in row.iter().zip(scratch.iter()) {
                s -= lij * yj;
            }
            let yi = s / self.chol[i * d + i];
            scratch[i] = yi;
            acc += yi * yi;
        }
        acc
    }

    pub(crate) fn ln_pdf(&self, u: &[f64], scratch: &mut Vec<f64>) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis_sq(u, scratch)
    }
}

/// Multivariate normal density `N(u | μ, Σ)`.
pub fn gaussian_pdf(u: &[f64], mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    if u.len() != mean.len() {
        return Err(Error::Shape {
            expected: mean.len(),
            got: u.len(),
        });
    }
    let dens = LogDensity::new(mean, cov)?;
    Ok(dens.ln_pdf(u, &mut Vec::with_capacity(u.len())).exp())
}

/// Symmetrizes `cov` and clamps its eigenvalues from below at `floor`.
pub fn floor_covariance(cov: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|&v| v >= floor) {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|v| if v.is_finite() { v.max(floor) } else { floor });
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    let mut out = (&rebuilt + rebuilt.transpose()) * 0.5;
    // Rounding in the reconstruction can leave the smallest eigenvalue a few
    // ulps under the floor; a diagonal nudge restores the bound.
    let min = SymmetricEigen::new(out.clone()).eigenvalues.min();
    if min < floor {
        let nudge = floor - min;
        for i in 0..out.nrows() {
            out[(i, i)] += nudge;
        }
    }
    out
}

pub(crate) fn sample_mean(data: &[Vec<f64>]) -> DVector<f64> {
    let d = data[0].len();
    let mut m = DVector::zeros(d);
    for row in data {
        for (a, &x) in m.iter_mut().zip(row) {
            *a += x;
        }
    }
    m / data.len() as f64
}

/// Maximum-likelihood (divide by n) covariance.
pub(crate) fn sample_covariance(data: &[Vec<f64>], mean: &DVector<f64>) -> DMatrix<f64> {
    let d = mean.len();
    let mut c = DMatrix::zeros(d, d);
    let mut dev = vec![0.0; d];
    for row in data {
        for j in 0..d {
            dev[j] = row[j] - mean[j];
        }
        for a in 0..d {
            for b in 0..=a {
                c[(a, b)] += dev[a] * dev[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            c[(b, a)] = c[(a, b)];
        }
    }
    c / data.len() as f64
}

/// Absolute eigenvalue floor: `relative · trace(Σ_global)/d`, bounded below.
pub(crate) fn absolute_floor(data: &[Vec<f64>], relative: f64) -> f64 {
    let mean = sample_mean(data);
    let cov = sample_covariance(data, &mean);
    let scale = cov.trace() / mean.len() as f64;
    (relative * scale).max(MIN_ABSOLUTE_FLOOR)
}

#[derive(Serialize, Deserialize)]
pub(crate) struct ComponentDoc {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

impl From<&GaussianComponent> for ComponentDoc {
    fn from(c: &GaussianComponent) -> Self {
        let d = c.dim();
        Self {
            weight: c.weight,
            mean: c.mean.iter().copied().collect(),
            covariance: (0..d)
                .map(|i| (0..d).map(|j| c.covariance[(i, j)]).collect())
                .collect(),
        }
    }
}

impl ComponentDoc {
    pub(crate) fn into_component(self, dim: usize) -> Result<GaussianComponent> {
        if self.mean.len() != dim {
            return Err(Error::Shape {
                expected: dim,
                got: self.mean.len(),
            });
        }
        if self.covariance.len() != dim || self.covariance.iter().any(|r| r.len() != dim) {
            return Err(Error::Data(format!("covariance must be {dim}x{dim}")));
        }
        Ok(GaussianComponent {
            weight: self.weight,
            mean: DVector::from_vec(self.mean),
            covariance: DMatrix::from_fn(dim, dim, |i, j| self.covariance[i][j]),
        })
    }
}
