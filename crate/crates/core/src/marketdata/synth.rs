//! Seeded jump-diffusion market generator. Spot mids follow a log random walk
//! with drift, Gaussian noise and compound-Poisson jumps; tomnext forward
//! points come from a constant interest-rate differential.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::panel::{MarketPanel, QuoteSeries};
use super::quotes::{ForwardPointsQuote, InstrumentSpec, QuotePair};
use crate::error::{Error, Result};

/// Tomnext is a one-day roll.
const TOMNEXT_DAYS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentSynth {
    pub symbol: String,
    #[serde(default)]
    pub ric: Option<String>,
    #[serde(default)]
    pub tn_ric: Option<String>,
    pub pip_size: f64,
    pub initial_mid: f64,
    /// Daily log drift.
    #[serde(default)]
    pub drift: f64,
    /// Daily log volatility.
    #[serde(default)]
    pub volatility: f64,
    /// Expected number of jumps per day.
    #[serde(default)]
    pub jump_intensity: f64,
    #[serde(default)]
    pub jump_mean: f64,
    #[serde(default)]
    pub jump_std: f64,
    /// Spot spread relative to mid.
    pub relative_spread: f64,
    /// Annual rate of the base (dominant) currency, `e₁`.
    #[serde(default)]
    pub base_rate: f64,
    /// Annual rate of the counter (secondary) currency, `e₂`.
    #[serde(default)]
    pub quote_rate: f64,
    /// Width of the forward points quote, in points.
    #[serde(default)]
    pub points_spread: f64,
}

impl InstrumentSynth {
    pub fn new(symbol: &str, pip_size: f64, initial_mid: f64, relative_spread: f64) -> Self {
        Self {
            symbol: symbol.to_string(),
            ric: None,
            tn_ric: None,
            pip_size,
            initial_mid,
            drift: 0.0,
            volatility: 0.0,
            jump_intensity: 0.0,
            jump_mean: 0.0,
            jump_std: 0.0,
            relative_spread,
            base_rate: 0.0,
            quote_rate: 0.0,
            points_spread: 0.0,
        }
    }

    pub fn spec(&self) -> Result<InstrumentSpec> {
        let counter = self.symbol.get(3..).unwrap_or("");
        InstrumentSpec::new(
            self.symbol.clone(),
            self.ric.clone().unwrap_or_else(|| format!("{counter}=")),
            self.tn_ric.clone().unwrap_or_else(|| format!("{counter}TN=")),
            self.pip_size,
        )
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::Config(format!(
                "{}: {what} must be nonnegative and finite, got {v}",
                self.symbol
            )))
        };
        if !(self.initial_mid > 0.0 && self.initial_mid.is_finite()) {
            return Err(Error::Config(format!(
                "{}: initial_mid must be positive",
                self.symbol
            )));
        }
        for (what, v) in [
            ("volatility", self.volatility),
            ("relative_spread", self.relative_spread),
            ("jump_intensity", self.jump_intensity),
            ("jump_std", self.jump_std),
            ("points_spread", self.points_spread),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(what, v);
            }
        }
        if self.relative_spread >= 2.0 {
            return Err(Error::Config(format!(
                "{}: relative_spread must be below 2",
                self.symbol
            )));
        }
        for v in [self.drift, self.jump_mean, self.base_rate, self.quote_rate] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{}: non-finite parameter", self.symbol)));
            }
        }
        Ok(())
    }

    /// Mid forward points for a tomnext roll at the given spot mid.
    pub fn mid_forward_points(&self, mid: f64) -> f64 {
        forward_points(mid, self.base_rate, self.quote_rate, TOMNEXT_DAYS, self.pip_size)
    }
}

/// Cross-sectional return regime: on each day one regime is drawn and its
/// per-instrument log-return shifts are added. Used to plant cluster
/// structure in return space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub probability: f64,
    pub shifts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub start_date: NaiveDate,
    pub n_days: usize,
    pub instruments: Vec<InstrumentSynth>,
    #[serde(default)]
    pub regimes: Vec<Regime>,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_days < 2 {
            return Err(Error::Config("n_days must be at least 2".into()));
        }
        if self.instruments.is_empty() {
            return Err(Error::Config("no instruments configured".into()));
        }
        for inst in &self.instruments {
            inst.validate()?;
        }
        if !self.regimes.is_empty() {
            let total: f64 = self.regimes.iter().map(|r| r.probability).sum();
            if self.regimes.iter().any(|r| !(r.probability >= 0.0)) || !(total > 0.0) {
                return Err(Error::Config("regime probabilities must be nonnegative with positive sum".into()));
            }
            if self
                .regimes
                .iter()
                .any(|r| r.shifts.len() != self.instruments.len())
            {
                return Err(Error::Config(
                    "every regime needs one shift per instrument".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Currencies of the demo universe: code, value in USD, annual rate.
const DEMO_CURRENCIES: [(&str, f64, f64); 14] = [
    ("EUR", 1.15, 0.0),
    ("GBP", 1.35, 0.01),
    ("AUD", 0.72, 0.02),
    ("NZD", 0.68, 0.025),
    ("USD", 1.0, 0.02),
    ("CAD", 0.78, 0.015),
    ("CHF", 1.05, -0.005),
    ("NOK", 0.11, 0.01),
    ("SEK", 0.11, 0.0),
    ("MXN", 0.05, 0.06),
    ("ZAR", 0.065, 0.065),
    ("TRY", 0.12, 0.12),
    ("RUB", 0.013, 0.07),
    ("JPY", 0.009, -0.001),
];

impl SynthConfig {
    /// A deterministic book of `n_instruments` crosses (at most 91) with
    /// realistic price levels, pip sizes, interbank spreads and rate
    /// differentials, plus two risk regimes that move high- and low-yielders
    /// apart.
    pub fn demo(n_instruments: usize, n_days: usize) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, &a) in DEMO_CURRENCIES.iter().enumerate() {
            for &b in &DEMO_CURRENCIES[i + 1..] {
                pairs.push((a, b));
            }
        }
        if n_instruments == 0 || n_instruments > pairs.len() {
            return Err(Error::Config(format!(
                "demo universe holds 1..={} instruments, asked for {n_instruments}",
                pairs.len()
            )));
        }
        // Majors first: pairs whose legs both sit early in the list.
        pairs.sort_by_key(|((a, ..), (b, ..))| {
            let rank = |c: &str| DEMO_CURRENCIES.iter().position(|x| x.0 == c).unwrap_or(0);
            rank(a).max(rank(b)) * 100 + rank(a)
        });
        let instruments: Vec<InstrumentSynth> = pairs
            .iter()
            .take(n_instruments)
            .enumerate()
            .map(|(idx, ((base, bv, br), (quote, qv, qr)))| {
                let mid = bv / qv;
                let pip = 10f64.powi(mid.log10().floor() as i32 - 4);
                let emerging = [*base, *quote].iter().any(|c| ["MXN", "ZAR", "TRY", "RUB"].contains(c));
                let mut inst = InstrumentSynth::new(
                    &format!("{base}{quote}"),
                    pip,
                    mid,
                    if emerging { 1e-4 } else { 2e-5 },
                );
                inst.volatility = if emerging { 0.009 } else { 0.005 } + 0.0001 * (idx % 5) as f64;
                inst.base_rate = *br;
                inst.quote_rate = *qr;
                inst.points_spread = if emerging { 1.0 } else { 0.1 };
                inst.jump_intensity = if emerging { 0.01 } else { 0.0 };
                inst.jump_std = 0.02;
                inst
            })
            .collect();
        let carry_tilt: Vec<f64> = instruments
            .iter()
            .map(|i| (i.base_rate - i.quote_rate).clamp(-0.1, 0.1) * 0.05)
            .collect();
        Ok(Self {
            start_date: NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"),
            n_days,
            regimes: vec![
                Regime {
                    probability: 0.8,
                    shifts: carry_tilt.iter().map(|s| 0.25 * s).collect(),
                },
                Regime {
                    probability: 0.2,
                    shifts: carry_tilt.iter().map(|s| -s).collect(),
                },
            ],
            instruments,
        })
    }
}

/// `mid·(e₂ − e₁)·T / (360·φ)`.
pub fn forward_points(mid: f64, base_rate: f64, quote_rate: f64, days: f64, pip_size: f64) -> f64 {
    mid * (quote_rate - base_rate) * days / (360.0 * pip_size)
}

fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    out
}

pub fn synth_panel(config: &SynthConfig, seed: u64) -> Result<MarketPanel> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dates = business_days(config.start_date, config.n_days);
    let k = config.instruments.len();

    let regime_cdf: Vec<f64> = {
        let total: f64 = config.regimes.iter().map(|r| r.probability).sum();
        let mut acc = 0.0;
        config
            .regimes
            .iter()
            .map(|r| {
                acc += r.probability / total;
                acc
            })
            .collect()
    };

    let mut mids: Vec<f64> = config.instruments.iter().map(|i| i.initial_mid).collect();
    let mut series: Vec<QuoteSeries> = config
        .instruments
        .iter()
        .map(|i| {
            Ok(QuoteSeries {
                spec: i.spec()?,
                rows: Vec::with_capacity(dates.len()),
            })
        })
        .collect::<Result<_>>()?;

    for (t, &date) in dates.iter().enumerate() {
        if t > 0 {
            let regime = if regime_cdf.is_empty() {
                None
            } else {
                let u: f64 = rng.random();
                Some(regime_cdf.iter().position(|&c| u < c).unwrap_or(regime_cdf.len() - 1))
            };
            for (j, inst) in config.instruments.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                let mut step = inst.drift + inst.volatility * z;
                if let Some(r) = regime {
                    step += config.regimes[r].shifts[j];
                }
                if inst.jump_intensity > 0.0 {
                    let count = Poisson::new(inst.jump_intensity)
                        .map_err(|e| Error::Config(format!("{}: {e}", inst.symbol)))?
                        .sample(&mut rng) as u64;
                    if count > 0 {
                        let size = Normal::new(inst.jump_mean, inst.jump_std)
                            .map_err(|e| Error::Config(format!("{}: {e}", inst.symbol)))?;
                        for _ in 0..count {
                            step += size.sample(&mut rng);
                        }
                    }
                }
                mids[j] *= step.exp();
            }
        }
        for j in 0..k {
            let inst = &config.instruments[j];
            let mid = mids[j];
            let half = 0.5 * inst.relative_spread;
            let spot = QuotePair::new(date, mid * (1.0 - half), mid * (1.0 + half));
            let fp_mid = inst.mid_forward_points(mid);
            let fp = ForwardPointsQuote::new(
                date,
                fp_mid - 0.5 * inst.points_spread,
                fp_mid + 0.5 * inst.points_spread,
            );
            series[j].rows.push((spot, fp));
        }
    }
    MarketPanel::from_series(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn config(inst: InstrumentSynth, n_days: usize) -> SynthConfig {
        SynthConfig {
            start_date: NaiveDate::from_ymd_opt(2010, 12, 7).unwrap(),
            n_days,
            instruments: vec![inst],
            regimes: vec![],
        }
    }

    #[test]
    fn demo_universe_is_valid() {
        let cfg = SynthConfig::demo(36, 50).unwrap();
        cfg.validate().unwrap();
        let mut symbols: Vec<_> = cfg.instruments.iter().map(|i| i.symbol.clone()).collect();
        symbols.sort();
        symbols.dedup();
        assert_eq!(symbols.len(), 36);
        assert_eq!(cfg.instruments[0].symbol, "EURGBP");
        let panel = synth_panel(&cfg, 1).unwrap();
        assert_eq!(panel.n_instruments(), 36);
        assert!(SynthConfig::demo(92, 10).is_err());
    }

    #[test]
    fn degenerate_generator_is_constant() {
        let p = synth_panel(&config(InstrumentSynth::new("EURUSD", 0.0001, 1.1, 0.0002), 50), 7)
            .unwrap();
        for t in 0..p.len() {
            assert_eq!(p.mid(t, 0), p.mid(0, 0));
            assert_eq!(p.returns(t)[0], 0.0);
        }
    }

    #[test]
    fn zero_rate_differential_gives_zero_points() {
        let mut inst = InstrumentSynth::new("EURUSD", 0.0001, 1.1, 0.0002);
        inst.volatility = 0.01;
        inst.base_rate = 0.02;
        inst.quote_rate = 0.02;
        let p = synth_panel(&config(inst, 30), 1).unwrap();
        for t in 0..p.len() {
            let f = p.fpts(t, 0);
            assert_eq!(0.5 * (f.bid_points + f.ask_points), 0.0);
        }
    }

    #[test]
    fn forward_points_worked_example() {
        assert_abs_diff_eq!(
            forward_points(1.0, 0.01, 0.05, 1.0, 0.0001),
            1.1111111111111112,
            epsilon = 1e-12
        );
    }

    #[test]
    fn reproducible_under_seed() {
        let mut inst = InstrumentSynth::new("USDRUB", 0.01, 70.0, 0.0005);
        inst.volatility = 0.01;
        inst.jump_intensity = 0.05;
        inst.jump_std = 0.03;
        let cfg = config(inst, 200);
        assert_eq!(synth_panel(&cfg, 42).unwrap(), synth_panel(&cfg, 42).unwrap());
        assert_ne!(synth_panel(&cfg, 42).unwrap(), synth_panel(&cfg, 43).unwrap());
    }

    #[test]
    fn negative_volatility_is_rejected() {
        let mut inst = InstrumentSynth::new("EURUSD", 0.0001, 1.1, 0.0002);
        inst.volatility = -0.1;
        assert!(matches!(synth_panel(&config(inst, 10), 0), Err(Error::Config(_))));
        let inst = InstrumentSynth::new("EURUSD", 0.0001, 1.1, -0.0002);
        assert!(matches!(synth_panel(&config(inst, 10), 0), Err(Error::Config(_))));
    }

    #[test]
    fn business_days_skip_weekends() {
        let d = business_days(NaiveDate::from_ymd_opt(2021, 10, 22).unwrap(), 3);
        assert_eq!(d[1], NaiveDate::from_ymd_opt(2021, 10, 25).unwrap());
    }

    #[test]
    fn returns_grid_matches_mids() {
        let mut inst = InstrumentSynth::new("GBPUSD", 0.0001, 1.3, 0.0001);
        inst.volatility = 0.006;
        let p = synth_panel(&config(inst, 300), 3).unwrap();
        for t in 1..p.len() {
            let r = p.mid(t, 0) / p.mid(t - 1, 0) - 1.0;
            assert!((p.returns(t)[0] - r).abs() < 1e-12);
        }
    }
}
