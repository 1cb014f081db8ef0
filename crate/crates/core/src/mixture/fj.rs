//! Unsupervised mixture selection by minimum message length with component
//! annihilation. Fitting starts from an overfitted `k_max` model; components
//! whose responsibility mass cannot pay for their `N/2` parameters are
//! removed during the sweeps, and once a `k` converges the weakest component
//! is forced out so the whole path down to `k_min` is explored. The model
//! with the shortest message length on that path is returned.

use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use super::em::initialize;
use super::gaussian::{absolute_floor, floor_covariance, GaussianComponent, LogDensity};
use super::model::{check_data, log_sum_exp, MixtureFitConfig, MixtureModel};
use crate::error::{Error, Result};

/// Free parameters of one full-covariance component in `d` dimensions:
/// `d + d(d+1)/2`.
pub fn params_per_component(dim: usize) -> usize {
    dim + dim * (dim + 1) / 2
}

/// `(N/2)·Σ ln(nπ_j/12) + (k/2)·ln(n/12) + k(N+1)/2 − ln p(u|θ)`, summing
/// over nonzero-weight components only.
pub fn message_length(model: &MixtureModel, data: &[Vec<f64>]) -> Result<f64> {
    let ll = model.log_likelihood(data)?;
    Ok(message_length_from(model, data.len(), ll))
}

fn message_length_from(model: &MixtureModel, n: usize, log_likelihood: f64) -> f64 {
    let n = n as f64;
    let big_n = params_per_component(model.dim()) as f64;
    let live: Vec<f64> = model
        .components()
        .iter()
        .map(|c| c.weight)
        .filter(|&w| w > 0.0)
        .collect();
    let k = live.len() as f64;
    let weight_term: f64 = live.iter().map(|w| (n * w / 12.0).ln()).sum();
    0.5 * big_n * weight_term + 0.5 * k * (n / 12.0).ln() + 0.5 * k * (big_n + 1.0)
        - log_likelihood
}

/// Modified weight update `max{0, r_c − N/2} / Σ_j max{0, r_j − N/2}`.
/// Returns `None` when every component falls below the threshold.
pub fn annihilating_weights(masses: &[f64], params: usize) -> Option<Vec<f64>> {
    let half = 0.5 * params as f64;
    let excess: Vec<f64> = masses.iter().map(|m| (m - half).max(0.0)).collect();
    let total: f64 = excess.iter().sum();
    if total > 0.0 {
        Some(excess.iter().map(|e| e / total).collect())
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub k: usize,
    pub message_length: f64,
    pub weight_sum: f64,
}

#[derive(Debug, Clone)]
pub struct FjFit {
    pub model: MixtureModel,
    pub message_length: f64,
    pub trace: Vec<SweepRecord>,
    /// Best message length found at each `k` visited, largest `k` first.
    pub path: Vec<(usize, f64)>,
    /// Set when the annihilation threshold could not be met at `k_min` and
    /// plain EM weights were used instead.
    pub threshold_unmet: bool,
}

fn drop_component(model: &mut MixtureModel, idx: usize) {
    let comps = model.components_mut();
    comps.remove(idx);
    renormalize(comps);
}

fn renormalize(comps: &mut [GaussianComponent]) {
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    if total > 0.0 {
        for c in comps.iter_mut() {
            c.weight /= total;
        }
    } else {
        let k = comps.len() as f64;
        for c in comps.iter_mut() {
            c.weight = 1.0 / k;
        }
    }
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

/// Per-datum component log densities `ln N(uᵢ | μ_j, Σ_j)`, kept in step
/// with the model so a single column can be refreshed after an update.
struct DensityTable {
    cols: Vec<Vec<f64>>,
}

impl DensityTable {
    fn new(model: &MixtureModel, data: &[Vec<f64>]) -> Result<Self> {
        let mut cols = Vec::with_capacity(model.k());
        for c in model.components() {
            cols.push(Self::column(c, data)?);
        }
        Ok(Self { cols })
    }

    fn column(c: &GaussianComponent, data: &[Vec<f64>]) -> Result<Vec<f64>> {
        let dens = LogDensity::new(&c.mean, &c.covariance)?;
        let mut scratch = Vec::with_capacity(c.dim());
        Ok(data.iter().map(|u| dens.ln_pdf(u, &mut scratch)).collect())
    }

    /// Responsibilities of component `c`. Rows where every weighted density
    /// underflows are shared uniformly.
    fn responsibility(&self, model: &MixtureModel, c: usize) -> Vec<f64> {
        let log_w: Vec<f64> = model
            .components()
            .iter()
            .map(|j| if j.weight > 0.0 { j.weight.ln() } else { f64::NEG_INFINITY })
            .collect();
        let k = model.k();
        let mut row = vec![0.0; k];
        (0..self.cols[0].len())
            .map(|i| {
                for j in 0..k {
                    row[j] = log_w[j] + self.cols[j][i];
                }
                let lse = log_sum_exp(&row);
                if lse.is_finite() {
                    (row[c] - lse).exp()
                } else {
                    1.0 / k as f64
                }
            })
            .collect()
    }

    fn log_likelihood(&self, model: &MixtureModel) -> f64 {
        let log_w: Vec<f64> = model
            .components()
            .iter()
            .map(|j| if j.weight > 0.0 { j.weight.ln() } else { f64::NEG_INFINITY })
            .collect();
        let mut row = vec![0.0; model.k()];
        (0..self.cols[0].len())
            .map(|i| {
                for (j, r) in row.iter_mut().enumerate() {
                    *r = log_w[j] + self.cols[j][i];
                }
                log_sum_exp(&row)
            })
            .sum()
    }
}

/// Weighted mean and floored covariance from one responsibility column.
fn weighted_moments(data: &[Vec<f64>], resp: &[f64], floor: f64) -> (DVector<f64>, DMatrix<f64>) {
    let d = data[0].len();
    let mass: f64 = resp.iter().sum();
    let mut mean = DVector::zeros(d);
    for (u, &r) in data.iter().zip(resp) {
        for j in 0..d {
            mean[j] += r * u[j];
        }
    }
    mean /= mass;
    let mut cov = DMatrix::zeros(d, d);
    let mut dev = vec![0.0; d];
    for (u, &r) in data.iter().zip(resp) {
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
    (mean, floor_covariance(&cov, floor))
}

/// Fits by component-wise sweeps: each component in turn gets fresh
/// responsibilities, the modified weight update, and either re-estimation or
/// immediate removal. Updating one component at a time lets an emptied
/// component's data move to its neighbours before the next one is judged.
pub fn fj_fit(data: &[Vec<f64>], config: &MixtureFitConfig) -> Result<FjFit> {
    config.validate()?;
    let d = data.first().map(Vec::len).unwrap_or(0);
    check_data(data, d)?;
    let n = data.len();
    if n <= config.k_max {
        return Err(Error::Config(format!(
            "need more rows than k_max: n={n}, k_max={}",
            config.k_max
        )));
    }
    let half = 0.5 * params_per_component(d) as f64;
    let floor = absolute_floor(data, config.cov_floor);
    let mut model = initialize(data, config.k_max, config.seed, floor);
    let mut table = DensityTable::new(&model, data)?;

    let mut trace = Vec::new();
    let mut path = Vec::new();
    let mut best: Option<(MixtureModel, f64)> = None;
    let mut threshold_unmet = false;
    let mut sweep = 0usize;

    loop {
        let mut prev: Option<f64> = None;
        let mut current = f64::INFINITY;
        for _ in 0..config.max_iter {
            let mut c = 0;
            while c < model.k() {
                let resp = table.responsibility(&model, c);
                let mass: f64 = resp.iter().sum();
                let excess = (mass - half).max(0.0);
                if excess == 0.0 && model.k() > config.k_min {
                    log::debug!("annihilating component {c} (mass {mass:.3}) at k={}", model.k());
                    drop_component(&mut model, c);
                    table.cols.remove(c);
                    prev = None;
                    continue;
                }
                let comps = model.components_mut();
                if excess == 0.0 {
                    threshold_unmet = true;
                    comps[c].weight = mass / n as f64;
                } else {
                    comps[c].weight = excess / n as f64;
                }
                renormalize(comps);
                let (mean, covariance) = weighted_moments(data, &resp, floor);
                comps[c].mean = mean;
                comps[c].covariance = covariance;
                table.cols[c] = DensityTable::column(&comps[c], data)?;
                c += 1;
            }

            current = message_length_from(&model, n, table.log_likelihood(&model));
            sweep += 1;
            trace.push(SweepRecord {
                sweep,
                k: model.k(),
                message_length: current,
                weight_sum: model.weight_sum(),
            });
            if let Some(p) = prev {
                if ((current - p) / p.abs().max(f64::MIN_POSITIVE)).abs() < config.tol {
                    break;
                }
            }
            prev = Some(current);
        }

        path.push((model.k(), current));
        if best.as_ref().is_none_or(|(_, l)| current < *l) {
            best = Some((model.clone(), current));
        }
        if model.k() <= config.k_min {
            break;
        }
        let weights: Vec<f64> = model.components().iter().map(|c| c.weight).collect();
        let weakest = argmin(&weights);
        drop_component(&mut model, weakest);
        table.cols.remove(weakest);
    }

    let (model, length) = best.expect("at least one k visited");
    let model = MixtureModel::new(model.components().to_vec())?;
    Ok(FjFit {
        model,
        message_length: length,
        trace,
        path,
        threshold_unmet,
    })
}
