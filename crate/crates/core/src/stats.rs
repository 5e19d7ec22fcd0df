//! Small numerical helpers shared across estimators.

use statrs::function::erf;

use crate::error::{Error, Result};

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman–Fan type 7). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Ordinary least squares fit of `y = a + b x`, returning `(a, b)`.
pub fn ols_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("regression needs at least two paired points"));
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    if sxx <= 1e-24 * scale * scale * x.len() as f64 {
        return Err(Error::invalid("regressor is constant"));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

#[inline]
pub fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p)
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log density of an inverse-gamma distribution with shape `alpha` and scale `beta`.
pub fn inv_gamma_ln_pdf(x: f64, alpha: f64, beta: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    alpha * beta.ln() - statrs::function::gamma::ln_gamma(alpha) - (alpha + 1.0) * x.ln() - beta / x
}

pub fn beta_ln_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - statrs::function::beta::ln_beta(a, b)
}

/// Mode of a Gaussian kernel density estimate with Silverman's bandwidth,
/// located on a 512-point grid spanning the sample.
pub fn kde_mode(xs: &[f64]) -> f64 {
    let sorted = sorted_copy(xs);
    let n = sorted.len();
    let lo = sorted[0];
    let hi = sorted[n - 1];
    if hi - lo <= 0.0 {
        return lo;
    }
    let sd = variance(xs).sqrt();
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    if h <= 0.0 {
        return quantile_sorted(&sorted, 0.5);
    }
    const GRID: usize = 512;
    let mut best = (f64::NEG_INFINITY, lo);
    for g in 0..GRID {
        let t = lo + (hi - lo) * g as f64 / (GRID - 1) as f64;
        // Only points within 8 bandwidths contribute measurably.
        let start = sorted.partition_point(|&v| v < t - 8.0 * h);
        let end = sorted.partition_point(|&v| v <= t + 8.0 * h);
        let dens: f64 = sorted[start..end]
            .iter()
            .map(|&v| {
                let z = (t - v) / h;
                (-0.5 * z * z).exp()
            })
            .sum();
        if dens > best.0 {
            best = (dens, t);
        }
    }
    best.1
}
