//! Recursive estimation primitives shared by the agents.

mod adam;
mod ekf;
mod ewrls;
mod metrics;
mod moments;

pub use adam::{AdamState, BiasCorrection};
pub use ekf::{EkfState, FilterSnapshot};
pub use ewrls::EwrlsState;
pub use metrics::{information_ratio, risk_appetite, DiffSharpeState, DsrOutcome, TRADING_DAYS};
pub use moments::MovingMoments;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Result of feeding one observation to a recursive estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Applied,
    /// Input or result was non-finite; the state was left untouched.
    Rejected,
}

impl StepStatus {
    pub fn applied(self) -> bool {
        self == StepStatus::Applied
    }
}

fn check_decay(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Config(format!("decay must lie in (0, 1], got {tau}")));
    }
    Ok(())
}

/// `P = I/α`. A zero ridge would make the initial precision infinite.
fn initial_precision(dim: usize, ridge: f64) -> Result<DMatrix<f64>> {
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(Error::Config(format!("ridge must be positive and finite, got {ridge}")));
    }
    if dim == 0 {
        return Err(Error::Config("estimator dimension must be positive".into()));
    }
    Ok(DMatrix::identity(dim, dim) / ridge)
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Shape { expected, got });
    }
    Ok(())
}

/// Shared rank-one recursion: `s = 1 + xᵀPx/τ`, `k = Px/(sτ)`,
/// `P' = P/τ − kkᵀs`, re-symmetrised. Returns `None` if anything is
/// non-finite.
fn rank_one(p: &DMatrix<f64>, x: &DVector<f64>, tau: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let px = p * x;
    let s = 1.0 + x.dot(&px) / tau;
    let k = px / (s * tau);
    let mut next = p / tau - &k * k.transpose() * s;
    symmetrize(&mut next);
    let finite = s.is_finite() && k.iter().all(|v| v.is_finite()) && next.iter().all(|v| v.is_finite());
    finite.then_some((k, next))
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for a in 0..n {
        for b in 0..a {
            let v = 0.5 * (m[(a, b)] + m[(b, a)]);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
}
