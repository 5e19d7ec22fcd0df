//! Rescaled-range Hurst exponents and second-order detrended fluctuation analysis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::spectral::TimeSeries;
use crate::stats::{mean, ols_line};

pub const MIN_RS_LEN: usize = 64;
pub const MIN_DFA_LEN: usize = 256;
const MIN_RS_WINDOW: usize = 16;
const DFA_SCALES: usize = 16;
const DFA_MIN_SCALE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub rs_hurst: f64,
    pub corrected_rs_hurst: f64,
    pub empirical_hurst: f64,
    pub dfa2_slope: f64,
    pub dfa2_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dfa2 {
    pub alpha: f64,
    pub scales: Vec<usize>,
    pub fluctuations: Vec<f64>,
    /// Set when the detrended fluctuations vanish, e.g. for a polynomial trend.
    pub degenerate: bool,
}

pub fn diagnostics(series: &TimeSeries) -> Result<DiagnosticsReport> {
    let dfa = dfa2(series)?;
    Ok(DiagnosticsReport {
        rs_hurst: rs_hurst(series, false)?,
        corrected_rs_hurst: rs_hurst(series, true)?,
        empirical_hurst: empirical_hurst(series)?,
        dfa2_slope: dfa.alpha,
        dfa2_degenerate: dfa.degenerate,
    })
}

/// Mean R/S over non-overlapping windows of each dyadic size from 16 up to `n`.
fn rs_curve(series: &TimeSeries, corrected: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = series.values();
    let n = x.len();
    if n < MIN_RS_LEN {
        return Err(Error::invalid(format!("R/S analysis needs at least {MIN_RS_LEN} observations, got {n}")));
    }
    let mut sizes = Vec::new();
    let mut rs = Vec::new();
    let mut w = MIN_RS_WINDOW;
    while w <= n {
        let lag = if corrected { (4.0 * (w as f64 / 100.0).powf(0.25)).floor() as usize } else { 0 };
        let mut total = 0.0;
        let mut count = 0usize;
        for block in x.chunks_exact(w) {
            if let Some(v) = block_rs(block, lag) {
                total += v;
                count += 1;
            }
        }
        if count > 0 {
            sizes.push(w as f64);
            rs.push(total / count as f64);
        }
        w *= 2;
    }
    if sizes.len() < 2 {
        return Err(Error::Degenerate("fewer than two window sizes with non-constant blocks".into()));
    }
    Ok((sizes, rs))
}

fn block_rs(block: &[f64], lag: usize) -> Option<f64> {
    let w = block.len();
    let m = mean(block);
    let mut cum = 0.0;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for &v in block {
        cum += v - m;
        lo = lo.min(cum);
        hi = hi.max(cum);
    }
    let autocov = |k: usize| -> f64 {
        block[k..].iter().zip(block).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / w as f64
    };
    let mut s2 = autocov(0);
    // Lo's modification with Bartlett weights
    for k in 1..=lag.min(w - 1) {
        s2 += 2.0 * (1.0 - k as f64 / (lag as f64 + 1.0)) * autocov(k);
    }
    if !(s2 > 0.0) {
        return None;
    }
    Some((hi - lo) / s2.sqrt())
}

/// Slope of `log(R/S)` on `log(window)`; `corrected` uses Lo's
/// autocovariance-adjusted scale with lag `⌊4(w/100)^{1/4}⌋`.
pub fn rs_hurst(series: &TimeSeries, corrected: bool) -> Result<f64> {
    let (sizes, rs) = rs_curve(series, corrected)?;
    let lx: Vec<f64> = sizes.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = rs.iter().map(|v| v.ln()).collect();
    Ok(ols_line(&lx, &ly)?.1)
}

/// Anis–Lloyd–Peters expectation of R/S for i.i.d. Gaussian windows of size `w`.
pub fn expected_rs(w: usize) -> f64 {
    let wf = w as f64;
    let lead = if w <= 340 {
        (ln_gamma((wf - 1.0) / 2.0) - ln_gamma(wf / 2.0)).exp() / PI.sqrt()
    } else {
        1.0 / (wf * PI / 2.0).sqrt()
    };
    let sum: f64 = (1..w).map(|i| ((wf - i as f64) / i as f64).sqrt()).sum();
    (wf - 0.5) / wf * lead * sum
}

/// `1/2` plus the slope of the R/S curve after removing its small-sample
/// expectation under independence.
pub fn empirical_hurst(series: &TimeSeries) -> Result<f64> {
    let (sizes, rs) = rs_curve(series, false)?;
    let lx: Vec<f64> = sizes.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = sizes
        .iter()
        .zip(&rs)
        .map(|(&w, v)| v.ln() - expected_rs(w as usize).ln())
        .collect();
    Ok(0.5 + ols_line(&lx, &ly)?.1)
}

/// DFA with quadratic detrending on 16 log-spaced scales from 10 to `n/4`.
pub fn dfa2(series: &TimeSeries) -> Result<Dfa2> {
    let x = series.values();
    let n = x.len();
    if n < MIN_DFA_LEN {
        return Err(Error::invalid(format!("DFA2 needs at least {MIN_DFA_LEN} observations, got {n}")));
    }
    let m = mean(x);
    let mut profile = Vec::with_capacity(n);
    let mut cum = 0.0;
    for &v in x {
        cum += v - m;
        profile.push(cum);
    }
    let top = (n / 4) as f64;
    let mut scales: Vec<usize> = (0..DFA_SCALES)
        .map(|i| {
            let t = i as f64 / (DFA_SCALES - 1) as f64;
            (DFA_MIN_SCALE * (top / DFA_MIN_SCALE).powf(t)).round() as usize
        })
        .collect();
    scales.dedup();

    let fluctuations: Vec<f64> = scales.iter().map(|&s| fluctuation(&profile, s)).collect();
    let size = profile.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = 1e-10 * size.max(f64::MIN_POSITIVE);
    let degenerate = fluctuations.iter().any(|&f| f <= floor);
    let lx: Vec<f64> = scales.iter().map(|&s| (s as f64).ln()).collect();
    let ly: Vec<f64> = fluctuations.iter().map(|&f| f.max(floor).ln()).collect();
    let alpha = ols_line(&lx, &ly)?.1;
    Ok(Dfa2 { alpha, scales, fluctuations, degenerate })
}

/// Root-mean-square residual of per-window quadratic fits.
fn fluctuation(profile: &[f64], s: usize) -> f64 {
    let basis = orthonormal_quadratic(s);
    let mut ss = 0.0;
    let mut count = 0usize;
    for window in profile.chunks_exact(s) {
        let mut res = window.to_vec();
        for b in &basis {
            let coef: f64 = window.iter().zip(b).map(|(y, p)| y * p).sum();
            for (r, p) in res.iter_mut().zip(b) {
                *r -= coef * p;
            }
        }
        ss += res.iter().map(|r| r * r).sum::<f64>();
        count += s;
    }
    (ss / count as f64).sqrt()
}

/// Orthonormal basis of polynomials of degree ≤ 2 on `0..s` (Gram–Schmidt).
fn orthonormal_quadratic(s: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(3);
    for deg in 0..3 {
        let mut v: Vec<f64> = (0..s).map(|t| (t as f64 - (s as f64 - 1.0) / 2.0).powi(deg)).collect();
        // two passes keep the basis orthogonal to rounding
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        basis.push(v.into_iter().map(|a| a / norm).collect());
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_is_maximally_persistent() {
        let s = TimeSeries::new((0..4096).map(|t| t as f64).collect()).unwrap();
        assert!(rs_hurst(&s, false).unwrap() > 0.9);
    }

    #[test]
    fn linear_trend_is_degenerate_for_dfa2() {
        let s = TimeSeries::new((0..1000).map(|t| 3.0 + 0.01 * t as f64).collect()).unwrap();
        let r = dfa2(&s).unwrap();
        assert!(r.degenerate);
        assert!(r.alpha.is_finite());
        assert_eq!(r.scales[0], 10);
        assert_eq!(*r.scales.last().unwrap(), 250);
    }

    #[test]
    fn short_series_rejected() {
        let s = TimeSeries::new(vec![1.0, 2.0, 0.5, 3.0, 1.0]).unwrap();
        assert!(rs_hurst(&s, false).is_err());
        assert!(dfa2(&s).is_err());
    }

    #[test]
    fn expected_rs_branches_agree() {
        // the two Gamma-ratio forms should meet smoothly at the switch point
        let a = expected_rs(340);
        let b = expected_rs(341);
        assert!((b / a - 1.0).abs() < 0.01);
        assert!(expected_rs(16) > 1.0);
    }

    #[test]
    fn quadratic_basis_is_orthonormal() {
        let b = orthonormal_quadratic(12);
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum();
                assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
