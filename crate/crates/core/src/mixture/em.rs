use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gaussian::{absolute_floor, floor_covariance, sample_covariance, sample_mean, GaussianComponent};
use super::model::{check_data, log_sum_exp, MixtureFitConfig, MixtureModel, Responsibilities};
use crate::error::{Error, Result};

/// Output of an expectation step.
#[derive(Debug, Clone)]
pub struct EStep {
    pub responsibilities: Responsibilities,
    pub log_likelihood: f64,
    /// Rows whose component densities all vanished; they were given uniform
    /// responsibilities.
    pub underflow_rows: Vec<usize>,
}

pub fn e_step(model: &MixtureModel, data: &[Vec<f64>]) -> Result<EStep> {
    check_data(data, model.dim())?;
    let k = model.k();
    let dens = model.log_densities()?;
    let log_w: Vec<f64> = model
        .components()
        .iter()
        .map(|c| if c.weight > 0.0 { c.weight.ln() } else { f64::NEG_INFINITY })
        .collect();
    let mut resp = DMatrix::zeros(data.len(), k);
    let mut scratch = Vec::with_capacity(model.dim());
    let mut row = vec![0.0; k];
    let mut log_likelihood = 0.0;
    let mut underflow_rows = Vec::new();
    for (i, u) in data.iter().enumerate() {
        for j in 0..k {
            row[j] = if log_w[j].is_finite() {
                log_w[j] + dens[j].ln_pdf(u, &mut scratch)
            } else {
                f64::NEG_INFINITY
            };
        }
        let lse = log_sum_exp(&row);
        if !lse.is_finite() {
            underflow_rows.push(i);
            for j in 0..k {
                resp[(i, j)] = 1.0 / k as f64;
            }
            continue;
        }
        log_likelihood += lse;
        let mut s = 0.0;
        for j in 0..k {
            let r = (row[j] - lse).exp();
            resp[(i, j)] = r;
            s += r;
        }
        for j in 0..k {
            resp[(i, j)] /= s;
        }
    }
    if !underflow_rows.is_empty() {
        log::warn!(
            "{} data rows had vanishing density under every component",
            underflow_rows.len()
        );
    }
    Ok(EStep {
        responsibilities: Responsibilities::from_matrix(resp)?,
        log_likelihood,
        underflow_rows,
    })
}

/// Responsibility mass below which a component is treated as empty.
const EMPTY_MASS: f64 = 1e-12;

/// Weighted mean and floored covariance of one component.
pub(crate) fn component_moments(
    data: &[Vec<f64>],
    resp: &Responsibilities,
    c: usize,
    floor: f64,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let d = data[0].len();
    let mass: f64 = (0..data.len()).map(|i| resp.get(i, c)).sum();
    let mut mean = DVector::zeros(d);
    for (i, u) in data.iter().enumerate() {
        let r = resp.get(i, c);
        for j in 0..d {
            mean[j] += r * u[j];
        }
    }
    mean /= mass;
    let mut cov = DMatrix::zeros(d, d);
    let mut dev = vec![0.0; d];
    for (i, u) in data.iter().enumerate() {
        let r = resp.get(i, c);
        if r == 0.0 {
            continue;
        }
        for j in 0..d {
            dev[j] = u[j] - mean[j];
        }
        for a in 0..d {
            let ra = r * dev[a];
            for b in 0..=a {
                cov[(a, b)] += ra * dev[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            cov[(b, a)] = cov[(a, b)];
        }
    }
    cov /= mass;
    (mass, mean, floor_covariance(&cov, floor))
}

/// Standard maximisation step. `floor` is the absolute minimum covariance
/// eigenvalue. Components with no responsibility mass are dropped.
pub fn m_step(data: &[Vec<f64>], resp: &Responsibilities, floor: f64) -> Result<MixtureModel> {
    if resp.n() != data.len() {
        return Err(Error::Shape {
            expected: data.len(),
            got: resp.n(),
        });
    }
    let d = data.first().map(Vec::len).unwrap_or(0);
    check_data(data, d)?;
    let n = data.len() as f64;
    let mut comps = Vec::with_capacity(resp.k());
    for c in 0..resp.k() {
        let (mass, mean, covariance) = component_moments(data, resp, c, floor);
        if mass <= EMPTY_MASS {
            continue;
        }
        comps.push(GaussianComponent {
            weight: mass / n,
            mean,
            covariance,
        });
    }
    if comps.is_empty() {
        return Err(Error::Numeric("every component lost its responsibility mass".into()));
    }
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    for c in &mut comps {
        c.weight /= total;
    }
    MixtureModel::new(comps)
}

/// `k` components centred on distinct data rows drawn by seeded uniform
/// sampling, sharing the global covariance scaled by `k^(-2/d)`, with
/// uniform weights. Rows are put in lexicographic order before sampling so
/// the choice does not depend on the input row order.
pub(crate) fn initialize(data: &[Vec<f64>], k: usize, seed: u64, floor: f64) -> MixtureModel {
    let d = data[0].len();
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| {
        data[a]
            .iter()
            .zip(&data[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, data.len(), k);
    let mean = sample_mean(data);
    let global = sample_covariance(data, &mean);
    let scale = (k as f64).powf(-2.0 / d as f64);
    let cov = floor_covariance(&(global * scale), floor);
    let comps = picks
        .iter()
        .map(|p| GaussianComponent {
            weight: 1.0 / k as f64,
            mean: DVector::from_column_slice(&data[order[p]]),
            covariance: cov.clone(),
        })
        .collect();
    MixtureModel::from_parts(comps, d)
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: MixtureModel,
    pub log_likelihood: f64,
    /// Log-likelihood after each iteration, starting with the initial model.
    pub trace: Vec<f64>,
    pub converged: bool,
}

pub fn em_fit(data: &[Vec<f64>], k: usize, config: &MixtureFitConfig) -> Result<EmFit> {
    config.validate()?;
    let d = data.first().map(Vec::len).unwrap_or(0);
    check_data(data, d)?;
    if k == 0 || k >= data.len() {
        return Err(Error::Config(format!(
            "EM needs 1 <= k < n, got k={k} with n={}",
            data.len()
        )));
    }
    let floor = absolute_floor(data, config.cov_floor);
    let mut model = initialize(data, k, config.seed, floor);
    let mut es = e_step(&model, data)?;
    let mut trace = vec![es.log_likelihood];
    let mut converged = false;
    for _ in 0..config.max_iter {
        model = m_step(data, &es.responsibilities, floor)?;
        es = e_step(&model, data)?;
        let prev = *trace.last().unwrap();
        trace.push(es.log_likelihood);
        if ((es.log_likelihood - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < config.tol {
            converged = true;
            break;
        }
    }
    Ok(EmFit {
        model,
        log_likelihood: es.log_likelihood,
        trace,
        converged,
    })
}
