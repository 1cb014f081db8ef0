use crate::error::{Error, Result};

pub const TRADING_DAYS: f64 = 252.0;

/// Annualised `√252·(μ − b)/σ` from daily moments.
pub fn information_ratio(mean: f64, benchmark: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("information ratio needs σ > 0, got {sigma}")));
    }
    Ok(TRADING_DAYS.sqrt() * (mean - benchmark) / sigma)
}

/// `λ = ir/σ` with a daily (non-annualised) ratio.
pub fn risk_appetite(ir: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("risk appetite needs σ > 0, got {sigma}")));
    }
    Ok(ir / sigma)
}

/// Running moments behind the differential Sharpe ratio. The innovations
/// are scaled by `decay` itself: `a ← a + τ(r − a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffSharpeState {
    pub a: f64,
    pub b: f64,
    pub decay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsrOutcome {
    pub value: f64,
    /// False when `b − a² ≤ 0`; `value` is then 0.
    pub defined: bool,
}

impl DiffSharpeState {
    pub fn new(decay: f64) -> Self {
        Self { a: 0.0, b: 0.0, decay }
    }

    /// `(b Δa − ½ a Δb)/(b − a²)^{3/2}` from the moments before `r`, then the
    /// moment update.
    pub fn update(&mut self, r: f64) -> DsrOutcome {
        let da = r - self.a;
        let db = r * r - self.b;
        let var = self.b - self.a * self.a;
        let out = if var > 0.0 {
            DsrOutcome {
                value: (self.b * da - 0.5 * self.a * db) / var.powf(1.5),
                defined: true,
            }
        } else {
            DsrOutcome { value: 0.0, defined: false }
        };
        self.a += self.decay * da;
        self.b += self.decay * db;
        out
    }
}
