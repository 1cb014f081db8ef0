//! Small synthetic books with a known economic answer. The instrument of
//! interest is always first; a noisy companion gives the return space some
//! dispersion for the mixture to describe.

use chrono::NaiveDate;

use super::panel::{MarketPanel, QuoteSeries};
use super::quotes::{ForwardPointsQuote, QuotePair};
use super::synth::{synth_panel, InstrumentSynth, SynthConfig};
use crate::error::Result;

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2012, 1, 2).expect("valid date")
}

fn companion() -> InstrumentSynth {
    let mut c = InstrumentSynth::new("EURCHF", 1e-4, 1.1, 2e-4);
    c.volatility = 0.004;
    c
}

fn book(target: InstrumentSynth, n_days: usize) -> SynthConfig {
    SynthConfig {
        start_date: start(),
        n_days,
        instruments: vec![target, companion()],
        regimes: Vec::new(),
    }
}

/// Noiseless rise by a fixed `step` in price each day, no rate
/// differential, next to the usual companion.
pub fn linear_uptrend(n_days: usize, step: f64, seed: u64) -> Result<MarketPanel> {
    let companion = synth_panel(
        &SynthConfig {
            start_date: start(),
            n_days,
            instruments: vec![companion()],
            regimes: Vec::new(),
        },
        seed,
    )?;
    let target = InstrumentSynth::new("EURUSD", 1e-4, 1.2, 1e-4);
    let rows = companion
        .dates()
        .iter()
        .enumerate()
        .map(|(t, &d)| {
            let mid = target.initial_mid + step * t as f64;
            let half = 0.5 * target.relative_spread * mid;
            (QuotePair::new(d, mid - half, mid + half), ForwardPointsQuote::new(d, 0.0, 0.0))
        })
        .collect();
    let other = QuoteSeries {
        spec: companion.instruments()[0].clone(),
        rows: (0..companion.len())
            .map(|t| (*companion.spot(t, 0), *companion.fpts(t, 0)))
            .collect(),
    };
    MarketPanel::from_series(vec![QuoteSeries { spec: target.spec()?, rows }, other])
}

/// Driftless pair whose counter currency yields 10% more than the base, so
/// holding it short is paid about `mid·0.1/360` a day.
pub fn planted_carry(n_days: usize) -> SynthConfig {
    let mut t = InstrumentSynth::new("USDRUB", 1e-4, 70.0, 1e-5);
    t.volatility = 0.0005;
    t.quote_rate = 0.1;
    t.points_spread = 1.0;
    book(t, n_days)
}

/// As [`planted_carry`] but the pair trends upward, against the paid side.
/// The daily carry is about three times the drift, so a learner that sees
/// carry should sit short while one that does not follows the trend.
pub fn carry_against_trend(n_days: usize) -> SynthConfig {
    let mut cfg = planted_carry(n_days);
    cfg.instruments[0].drift = 0.0001;
    cfg.instruments[0].volatility = 0.0003;
    cfg
}

/// Equal rates and a wide points quote: both roll directions cost money.
pub fn negative_carry(n_days: usize) -> SynthConfig {
    let mut t = InstrumentSynth::new("GBPUSD", 1e-4, 1.3, 3e-4);
    t.volatility = 0.005;
    t.base_rate = 0.02;
    t.quote_rate = 0.02;
    t.points_spread = 0.5;
    book(t, n_days)
}
