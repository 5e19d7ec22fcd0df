//! Comparison estimators and time-domain memory diagnostics.

pub mod diagnostics;
pub mod ls;
pub mod whittle;

pub use diagnostics::{diagnostics, dfa2, empirical_hurst, rs_hurst, Dfa2, DiagnosticsReport};
pub use ls::{default_bandwidth, fit_ls, ls_design, LsEstimate};
pub use whittle::{
    profile_sigma2, run_param_chain, whittle_from_periodogram, whittle_neg_loglik, ParametricModel,
};
