//! Bayesian semiparametric estimation of the long-memory parameter `d` from the
//! log-periodogram, with least-squares, Whittle and time-domain baselines and a
//! simulation-study harness.

pub mod arfima;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod model;
pub mod sampler;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
