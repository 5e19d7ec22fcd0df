use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{RegressionDesign, RegressionSample, RegressorKind};
use crate::stats::{mean, ols_line};

const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsEstimate {
    pub c_hat: f64,
    pub d_hat: f64,
    pub se: f64,
    /// `d_hat ± 1.96 se`
    pub interval: (f64, f64),
    pub bandwidth: usize,
    pub trim: usize,
    pub pooling: usize,
    /// Number of regression points.
    pub points: usize,
}

/// `1 + ⌊n^0.8⌋`, capped at `⌊n/2⌋`.
pub fn default_bandwidth(n: usize) -> usize {
    (1 + (n as f64).powf(0.8).floor() as usize).min(n / 2)
}

/// Unpooled design skipping the first frequency, with the default bandwidth.
pub fn ls_design(n: usize) -> RegressionDesign {
    RegressionDesign {
        pooling: 1,
        trim: 1,
        bandwidth: default_bandwidth(n),
        regressor: RegressorKind::SinSquared,
    }
}

/// Least-squares log-periodogram regression. The slope on the regressor is `d`.
///
/// Unpooled fits use the asymptotic standard error `sqrt(π²/(24 m'))`; pooled
/// fits use the residual-based OLS standard error.
pub fn fit_ls(sample: &RegressionSample) -> Result<LsEstimate> {
    let x = sample.regressors();
    let y = sample.responses();
    let points = sample.len();
    if points < 3 {
        return Err(Error::invalid(format!("{points} regression points, at least 3 required")));
    }
    let (c_hat, d_hat) = ols_line(x, y)?;
    let design = sample.design();
    let se = if design.pooling == 1 {
        (PI * PI / (24.0 * points as f64)).sqrt()
    } else {
        let mx = mean(x);
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        let rss: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - c_hat - d_hat * xi).powi(2)).sum();
        (rss / (points as f64 - 2.0) / sxx).sqrt()
    };
    Ok(LsEstimate {
        c_hat,
        d_hat,
        se,
        interval: (d_hat - Z_975 * se, d_hat + Z_975 * se),
        bandwidth: design.bandwidth,
        trim: design.trim,
        pooling: design.pooling,
        points,
    })
}
