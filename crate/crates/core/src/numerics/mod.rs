//! Deterministic special functions and seedable random samplers.
//!
//! Everything statistical in this crate funnels through here: the gamma
//! family of special functions, a counter-based generator with independent
//! child streams, and exact samplers for the gamma, exponential and generic
//! log-concave densities.

mod rng;
mod special;
mod tdr;

pub use rng::{sample_exponential, sample_gamma, standard_normal, Rng};
pub use special::{
    checked_digamma, checked_gamma_quantile, checked_log_gamma,
    checked_reg_lower_incomplete_gamma, digamma, gamma_quantile, log_gamma,
    reg_lower_incomplete_gamma,
};
pub use tdr::{tdr_sample_log_concave, LogConcaveSampler, SamplerFailure};

use core::fmt;

/// Argument outside a function's domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainError(pub &'static str);

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "domain error: {}", self.0)
    }
}

impl core::error::Error for DomainError {}
