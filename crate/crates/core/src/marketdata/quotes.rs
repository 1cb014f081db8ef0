//! Two-sided FX quotes and the cost mechanics derived from them: mid, half
//! spread, tomnext outrights and the side-dependent overnight carry.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static description of a currency pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentSpec {
    /// ISO pair, e.g. `GBPUSD`.
    pub symbol: String,
    /// Vendor code for the cash pair.
    pub ric: String,
    /// Vendor code for the tomnext forward points.
    pub tn_ric: String,
    /// Price units per forward point.
    pub pip_size: f64,
}

impl InstrumentSpec {
    pub fn new(
        symbol: impl Into<String>,
        ric: impl Into<String>,
        tn_ric: impl Into<String>,
        pip_size: f64,
    ) -> Result<Self> {
        let spec = Self {
            symbol: symbol.into(),
            ric: ric.into(),
            tn_ric: tn_ric.into(),
            pip_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.symbol.len() != 6 || !self.symbol.chars().all(|c| c.is_ascii_uppercase()) {
            return Err(Error::Data(format!(
                "instrument symbol {:?} is not six uppercase letters",
                self.symbol
            )));
        }
        if !(self.pip_size > 0.0 && self.pip_size.is_finite()) {
            return Err(Error::Data(format!(
                "{}: pip size must be positive, got {}",
                self.symbol, self.pip_size
            )));
        }
        Ok(())
    }
}

/// Spot bid/ask at a daily close.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotePair {
    pub timestamp: NaiveDate,
    pub bid: f64,
    pub ask: f64,
}

impl QuotePair {
    pub fn new(timestamp: NaiveDate, bid: f64, ask: f64) -> Self {
        Self {
            timestamp,
            bid,
            ask,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.bid > 0.0 && self.ask > 0.0 && self.bid.is_finite() && self.ask.is_finite()
    }

    /// Crossed quotes are kept; the half-spread clamps them to zero cost.
    pub fn is_crossed(&self) -> bool {
        self.bid > self.ask
    }

    pub fn mid(&self) -> f64 {
        mid(self)
    }

    pub fn half_spread(&self) -> f64 {
        half_spread(self)
    }
}

/// Tomnext forward points, in units of the instrument's pip size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardPointsQuote {
    pub timestamp: NaiveDate,
    pub bid_points: f64,
    pub ask_points: f64,
}

impl ForwardPointsQuote {
    pub fn new(timestamp: NaiveDate, bid_points: f64, ask_points: f64) -> Self {
        Self {
            timestamp,
            bid_points,
            ask_points,
        }
    }

    pub fn is_inverted(&self) -> bool {
        self.bid_points > self.ask_points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomnextOutright {
    pub bid: f64,
    pub ask: f64,
}

impl TomnextOutright {
    pub fn is_inverted(&self) -> bool {
        self.bid > self.ask
    }
}

/// Profit (positive) or cost (negative) per unit notional of rolling a
/// position overnight, by side.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CarryRates {
    pub long: f64,
    pub short: f64,
}

impl CarryRates {
    /// Carry earned by holding `position` overnight: `long·f` when long,
    /// `short·|f|` when short.
    pub fn accrual(&self, position: f64) -> f64 {
        if position >= 0.0 {
            self.long * position
        } else {
            self.short * (-position)
        }
    }

    /// Derivative of [`CarryRates::accrual`] with respect to the position.
    pub fn slope(&self, position: f64) -> f64 {
        if position >= 0.0 {
            self.long
        } else {
            -self.short
        }
    }
}

pub fn mid(q: &QuotePair) -> f64 {
    0.5 * (q.bid + q.ask)
}

/// Per-unit execution cost of a price taker, `max(½(ask − bid), 0)`.
pub fn half_spread(q: &QuotePair) -> f64 {
    (0.5 * (q.ask - q.bid)).max(0.0)
}

/// Selling spot and buying back tomnext is done at `ask_tn`, which adds the
/// bid points; the mirror trade uses `bid_tn` with the ask points.
pub fn tomnext_outright(
    spot: &QuotePair,
    fpts: &ForwardPointsQuote,
    spec: &InstrumentSpec,
) -> Result<TomnextOutright> {
    if spot.timestamp != fpts.timestamp {
        return Err(Error::Alignment(format!(
            "{}: spot quote dated {} paired with forward points dated {}",
            spec.symbol, spot.timestamp, fpts.timestamp
        )));
    }
    Ok(TomnextOutright {
        bid: spot.bid + fpts.ask_points * spec.pip_size,
        ask: spot.ask + fpts.bid_points * spec.pip_size,
    })
}

pub fn carry_rates(spot: &QuotePair, tn: &TomnextOutright) -> CarryRates {
    CarryRates {
        long: spot.bid - tn.ask,
        short: tn.bid - spot.ask,
    }
}

pub fn simple_return(mid_t: f64, mid_prev: f64) -> Result<f64> {
    if !(mid_prev > 0.0) {
        return Err(Error::Domain(format!(
            "previous mid must be positive, got {mid_prev}"
        )));
    }
    Ok(mid_t / mid_prev - 1.0)
}
