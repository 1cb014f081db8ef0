//! Finite Gaussian mixtures: EM fitting and minimum-message-length model
//! selection with component annihilation.

mod em;
mod fj;
mod gaussian;
mod model;

pub use em::{e_step, em_fit, m_step, EStep, EmFit};
pub use fj::{annihilating_weights, fj_fit, message_length, params_per_component, FjFit, SweepRecord};
pub use gaussian::{floor_covariance, gaussian_pdf, GaussianComponent, MIN_ABSOLUTE_FLOOR};
pub use model::{MixtureFitConfig, MixtureModel, Responsibilities, WEIGHT_SUM_TOLERANCE};
