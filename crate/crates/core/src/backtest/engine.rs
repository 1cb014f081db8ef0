use serde::{Deserialize, Serialize};

use super::config::{BacktestConfig, Strategy};
use super::records::StepRecord;
use super::stats::{build_report, PerformanceReport};
use crate::agents::{
    calibrate_lambda, carry_position, DrlAgent, DrlSnapshot, MomentumAgent, MomentumSnapshot, StepInputs,
};
use crate::error::{Error, Result};
use crate::marketdata::{CarryRates, MarketPanel};
use crate::mixture::{fj_fit, MixtureModel};
use crate::rbf::RbfNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub k: usize,
    pub message_length: f64,
    pub threshold_unmet: bool,
    pub rows: usize,
}

/// Final per-instrument learner state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub instrument: String,
    pub lambda: Option<f64>,
    pub lambda_degenerate: bool,
    pub drl: Option<DrlSnapshot>,
    pub momentum: Option<MomentumSnapshot>,
}

#[derive(Debug, Clone)]
pub struct BacktestOutput {
    pub records: Vec<StepRecord>,
    pub report: PerformanceReport,
    pub mixture: Option<MixtureModel>,
    /// Present when the mixture was fitted here rather than supplied.
    pub fit: Option<FitSummary>,
    pub agents: Vec<AgentSummary>,
    pub train_len: usize,
}

/// Market facts for one instrument and date as the learners see them,
/// with costs and carry switched off as configured, plus the true rates
/// for the carry rule.
struct Bar {
    inputs: StepInputs,
    rates: CarryRates,
}

const NO_CARRY: CarryRates = CarryRates { long: 0.0, short: 0.0 };

fn bars(panel: &MarketPanel, k: usize, config: &BacktestConfig) -> Result<Vec<Bar>> {
    (0..panel.len())
        .map(|t| {
            let mid = panel.mid(t, k);
            let rates = panel
                .carry(t, k)
                .map_err(|e| e.at(format!("{} {}", panel.dates()[t], panel.instruments()[k].symbol)))?;
            Ok(Bar {
                inputs: StepInputs {
                    delta_price: if t == 0 { 0.0 } else { mid - panel.mid(t - 1, k) },
                    half_spread: if config.costs_enabled { panel.half_spread(t, k) } else { 0.0 },
                    carry: if config.carry_enabled { rates } else { NO_CARRY },
                    mid,
                },
                rates,
            })
        })
        .collect()
}

/// Return-space parts of holding `prev` over the bar and moving to `now`.
fn book(bar: &Bar, now: f64, prev: f64) -> (f64, f64, f64) {
    let i = &bar.inputs;
    (
        i.delta_price * prev / i.mid,
        -i.half_spread * (now - prev).abs() / i.mid,
        i.carry.accrual(now) / i.mid,
    )
}

/// Fits the feature mixture on the training window's return rows, exactly
/// as [`run`] does when no mixture is supplied.
pub fn fit_features(panel: &MarketPanel, config: &BacktestConfig) -> Result<(MixtureModel, FitSummary)> {
    config.validate()?;
    let train_len = config.train_len(panel.len())?;
    // The first return row is a placeholder zero.
    let rows: Vec<Vec<f64>> = (1..train_len).map(|t| panel.returns(t).to_vec()).collect();
    let fit = fj_fit(&rows, &config.hyper.mixture(config.seed)).map_err(|e| e.at("fitting mixture on training returns"))?;
    if fit.threshold_unmet {
        log::warn!("mixture weights fell back to plain EM at k_min");
    }
    log::info!("mixture selected k={} (message length {:.4})", fit.model.k(), fit.message_length);
    let summary = FitSummary {
        k: fit.model.k(),
        message_length: fit.message_length,
        threshold_unmet: fit.threshold_unmet,
        rows: rows.len(),
    };
    Ok((fit.model, summary))
}

/// Positions and bookings of one strategy on one instrument over the test
/// window, one entry per test date.
type Book = Vec<(f64, (f64, f64, f64))>;

struct InstrumentRun {
    books: Vec<(Strategy, Book)>,
    summary: AgentSummary,
}

fn run_instrument(
    panel: &MarketPanel,
    k: usize,
    acts: &[Vec<f64>],
    m: usize,
    train_len: usize,
    strategies: &[Strategy],
    config: &BacktestConfig,
) -> Result<InstrumentRun> {
    let symbol = &panel.instruments()[k].symbol;
    let n = panel.len();
    let bars = bars(panel, k, config)?;
    let at = |t: usize| format!("{} {symbol}", panel.dates()[t]);
    let mut books = Vec::with_capacity(strategies.len());
    let mut summary = AgentSummary {
        instrument: symbol.clone(),
        lambda: None,
        lambda_degenerate: false,
        drl: None,
        momentum: None,
    };

    for &strategy in strategies {
        let mut book_rows = Vec::with_capacity(n - train_len);
        match strategy {
            Strategy::Drl => {
                let mut agent = DrlAgent::new(m, config.hyper.drl())?;
                let mut rewards = Vec::with_capacity(train_len);
                for t in 0..train_len {
                    let s = agent.step(&acts[t], &bars[t].inputs).map_err(|e| e.at(at(t)))?;
                    rewards.push(s.reward);
                }
                let cal = calibrate_lambda(&rewards);
                if cal.degenerate {
                    log::warn!("{symbol}: training rewards had no dispersion, risk appetite floored");
                }
                agent.set_lambda(cal.lambda)?;
                summary.lambda = Some(cal.lambda);
                summary.lambda_degenerate = cal.degenerate;
                for t in train_len..n {
                    let s = agent.step(&acts[t], &bars[t].inputs).map_err(|e| e.at(at(t)))?;
                    book_rows.push((s.position, book(&bars[t], s.position, s.previous)));
                }
                summary.drl = Some(agent.snapshot());
            }
            Strategy::Mom => {
                let mut agent = MomentumAgent::new(m, config.hyper.ridge, config.hyper.decay)?;
                let mut prev = 0.0;
                for t in 0..n {
                    let realized = panel.returns(t)[k];
                    let (f, _) = agent.step(&acts[t], realized).map_err(|e| e.at(at(t)))?;
                    if t >= train_len {
                        book_rows.push((f, book(&bars[t], f, prev)));
                    }
                    prev = f;
                }
                summary.momentum = Some(agent.snapshot());
            }
            Strategy::Carry => {
                let mut prev = 0.0;
                for bar in &bars[train_len..] {
                    let f = carry_position(bar.rates);
                    book_rows.push((f, book(bar, f, prev)));
                    prev = f;
                }
            }
        }
        books.push((strategy, book_rows));
    }
    Ok(InstrumentRun { books, summary })
}

/// Runs the full walk-forward experiment. A supplied `mixture` replaces the
/// fit on the training window.
pub fn run(panel: &MarketPanel, config: &BacktestConfig, mixture: Option<&MixtureModel>) -> Result<BacktestOutput> {
    config.validate()?;
    let n = panel.len();
    let train_len = config.train_len(n)?;
    let strategies = config.strategy_set();
    let needs_features = strategies.iter().any(|s| *s != Strategy::Carry);

    let (model, fit) = match (needs_features, mixture) {
        (false, _) => (None, None),
        (true, Some(m)) => {
            if m.dim() != panel.n_instruments() {
                return Err(Error::Shape {
                    expected: panel.n_instruments(),
                    got: m.dim(),
                });
            }
            (Some(m.clone()), None)
        }
        (true, None) => {
            let (m, s) = fit_features(panel, config)?;
            (Some(m), Some(s))
        }
    };

    let (acts, m) = match &model {
        Some(model) => {
            let net = RbfNetwork::from_mixture(model)?;
            let acts = (0..n)
                .map(|t| net.activations(panel.returns(t)))
                .collect::<Result<Vec<_>>>()?;
            (acts, net.m())
        }
        None => (vec![Vec::new(); n], 0),
    };

    let runs = (0..panel.n_instruments())
        .map(|k| run_instrument(panel, k, &acts, m, train_len, &strategies, config))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity((n - train_len) * runs.len() * strategies.len());
    for (i, t) in (train_len..n).enumerate() {
        let date = panel.dates()[t];
        for (k, run) in runs.iter().enumerate() {
            let symbol = &panel.instruments()[k].symbol;
            for (strategy, rows) in &run.books {
                let (position, (gross, cost, carry)) = rows[i];
                records.push(StepRecord::new(date, symbol, *strategy, position, gross, cost, carry));
            }
        }
    }
    let report = build_report(&records)?;
    Ok(BacktestOutput {
        records,
        report,
        mixture: model,
        fit,
        agents: runs.into_iter().map(|r| r.summary).collect(),
        train_len,
    })
}
