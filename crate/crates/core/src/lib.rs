//! Sequential-learning FX trading engine.
//!
//! Daily cross-sectional returns are clustered by a Gaussian mixture whose
//! size is chosen by minimum message length; the fitted components become
//! the hidden layer of a radial basis function network. Its activations feed
//! a direct recurrent reinforcement learner trained online by an extended
//! Kalman filter under a quadratic utility, alongside an EWRLS momentum
//! baseline and a carry baseline. The backtester books spread and tomnext
//! carry exactly and reports portfolio statistics.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod agents;
pub mod backtest;
pub mod error;
pub mod estimators;
pub mod marketdata;
pub mod mixture;
pub mod rbf;

pub use error::{Error, Result};
