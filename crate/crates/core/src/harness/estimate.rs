use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::baselines::{default_bandwidth, fit_ls, run_param_chain, ParametricModel};
use crate::error::Result;
use crate::harness::config::BandSettings;
use crate::sampler::{run_chain, summarize, summarize_values, ChainConfig};
use crate::spectral::{periodogram, pooled_log_periodogram, RegressionDesign, TimeSeries};
use crate::stats::mean;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Semiparametric,
    Ls,
    Parametric,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Semiparametric, Method::Ls, Method::Parametric];

    pub fn name(self) -> &'static str {
        match self {
            Method::Semiparametric => "semiparametric",
            Method::Ls => "ls",
            Method::Parametric => "parametric",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything an estimator needs besides the data and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimateSettings {
    pub chain: ChainConfig,
    pub semiparametric: BandSettings,
    pub ls: BandSettings,
    pub parametric_model: ParametricModel,
}

impl Default for EstimateSettings {
    fn default() -> Self {
        Self {
            chain: ChainConfig::default(),
            semiparametric: BandSettings::default(),
            ls: BandSettings::default(),
            parametric_model: ParametricModel::Arfima11,
        }
    }
}

impl EstimateSettings {
    /// Regression design for `method` on a series of length `n`: the full band
    /// for the semiparametric model, `ℓ = 1` and `m = 1 + ⌊n^0.8⌋` for least squares.
    pub fn design(&self, method: Method, n: usize) -> RegressionDesign {
        match method {
            Method::Ls => self.ls.design(1, default_bandwidth(n)),
            _ => self.semiparametric.design(0, n / 2),
        }
    }
}

/// Point estimate and 95% interval for `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub method: Method,
    /// Posterior mean, or the least-squares slope.
    pub point: f64,
    pub interval: (f64, f64),
    pub design: Option<RegressionDesign>,
    pub seed: u64,
    pub extra: BTreeMap<String, f64>,
}

pub fn estimate(series: &TimeSeries, method: Method, settings: &EstimateSettings, seed: u64) -> Result<Estimate> {
    let n = series.len();
    let mut extra = BTreeMap::new();
    match method {
        Method::Ls | Method::Semiparametric => {
            let design = settings.design(method, n);
            let sample = pooled_log_periodogram(&periodogram(series), design)?;
            if method == Method::Ls {
                let e = fit_ls(&sample)?;
                extra.insert("c_hat".into(), e.c_hat);
                extra.insert("se".into(), e.se);
                return Ok(Estimate { method, point: e.d_hat, interval: e.interval, design: Some(design), seed, extra });
            }
            let config = ChainConfig { seed, ..settings.chain.clone() };
            let draws = run_chain(&sample, &config)?;
            let s = summarize(&draws)?;
            extra.insert("median".into(), s.median);
            extra.insert("map".into(), s.map);
            extra.insert("ess".into(), s.ess);
            extra.insert("c_mean".into(), mean(&draws.c));
            extra.insert("xi_mean".into(), mean(&draws.auxiliary["xi"]));
            for (block, rate) in &draws.acceptance {
                extra.insert(format!("acceptance_{block}"), *rate);
            }
            Ok(Estimate { method, point: s.mean, interval: s.interval, design: Some(design), seed, extra })
        }
        Method::Parametric => {
            let config = ChainConfig { seed, ..settings.chain.clone() };
            let draws = run_param_chain(series, settings.parametric_model, &config)?;
            let s = summarize_values(&draws.d)?;
            extra.insert("median".into(), s.median);
            extra.insert("map".into(), s.map);
            extra.insert("ess".into(), s.ess);
            for key in ["phi", "theta", "sigma2"] {
                extra.insert(format!("{key}_mean"), mean(&draws.auxiliary[key]));
            }
            Ok(Estimate { method, point: s.mean, interval: s.interval, design: None, seed, extra })
        }
    }
}
