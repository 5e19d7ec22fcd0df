//! ARFIMA(0,d,0) and ARFIMA(1,d,1) processes
//! `(1 − φB)(1 − B)^d X_t = (1 + θB) ε_t` with Gaussian innovations.
//!
//! Simulation truncates the MA(∞) expansion of `(1 − B)^{-d}` at `2·(n + burn-in)`
//! coefficients, applies the ARMA(1,1) recursion and discards a fixed burn-in.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{TimeSeries, MIN_SERIES_LEN};

pub const BURN_IN: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArfimaParams {
    pub d: f64,
    pub phi: f64,
    pub theta: f64,
    /// Innovation variance.
    pub sigma2: f64,
}

impl ArfimaParams {
    pub fn new(d: f64, phi: f64, theta: f64, sigma2: f64) -> Result<Self> {
        let p = Self { d, phi, theta, sigma2 };
        p.validate()?;
        Ok(p)
    }

    /// Unit-variance fractional noise, ARFIMA(0,d,0).
    pub fn fractional_noise(d: f64) -> Result<Self> {
        Self::new(d, 0.0, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > -1.0 && self.d < 0.5) {
            return Err(Error::domain(format!("d = {} outside (-1, 1/2)", self.d)));
        }
        if !(self.phi.abs() < 1.0) {
            return Err(Error::domain(format!("|phi| = {} is not below 1", self.phi.abs())));
        }
        if !(self.theta.abs() < 1.0) {
            return Err(Error::domain(format!("|theta| = {} is not below 1", self.theta.abs())));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::domain(format!("sigma2 = {} must be positive", self.sigma2)));
        }
        Ok(())
    }
}

/// MA(∞) weights of `(1 − B)^{-d}`: `ψ_0 = 1`, `ψ_k = ψ_{k−1}(k − 1 + d)/k`.
pub fn fracdiff_ma_coefficients(d: f64, count: usize) -> Result<Vec<f64>> {
    if !(d > -1.0 && d < 0.5) {
        return Err(Error::domain(format!("d = {d} outside (-1, 1/2)")));
    }
    if count == 0 {
        return Err(Error::invalid("coefficient count must be positive"));
    }
    let mut psi = Vec::with_capacity(count);
    psi.push(1.0);
    for k in 1..count {
        let kf = k as f64;
        psi.push(psi[k - 1] * (kf - 1.0 + d) / kf);
    }
    Ok(psi)
}

/// Simulates `n` observations; identical `(params, n, seed)` give identical output.
pub fn simulate(params: &ArfimaParams, n: usize, seed: u64) -> Result<TimeSeries> {
    params.validate()?;
    if n < MIN_SERIES_LEN {
        return Err(Error::invalid(format!("n = {n} is below the minimum of {MIN_SERIES_LEN}")));
    }
    let total = n + BURN_IN;
    let taps = 2 * total;
    let psi = fracdiff_ma_coefficients(params.d, taps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = params.sigma2.sqrt();
    // innovations e_0 .. e_{taps+total-2}; output u_t uses e_{t..t+taps-1}
    let eps: Vec<f64> = (0..taps + total - 1)
        .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    let noise = if params.d == 0.0 {
        eps[taps - 1..].to_vec()
    } else {
        let full = convolve(&eps, &psi);
        full[taps - 1..taps - 1 + total].to_vec()
    };

    let mut x = Vec::with_capacity(total);
    let mut prev_x = 0.0;
    let mut prev_u = 0.0;
    for &u in &noise {
        let v = params.phi * prev_x + u + params.theta * prev_u;
        x.push(v);
        prev_x = v;
        prev_u = u;
    }
    TimeSeries::new(x.split_off(BURN_IN))
}

/// Linear convolution through the FFT.
fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    let size = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pad = |v: &[f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (dst, &src) in buf.iter_mut().zip(v) {
            dst.re = src;
        }
        buf
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa[..len].iter().map(|z| z.re * scale).collect()
}

/// Exact spectral density
/// `f(λ) = (σ²/2π) |1 + θe^{−iλ}|² / |1 − φe^{−iλ}|² · (2 sin(λ/2))^{−2d}`.
///
/// `λ = 0` is only admitted for `d = 0`.
pub fn spectral_density(params: &ArfimaParams, lambda: f64) -> Result<f64> {
    params.validate()?;
    if !(0.0..=PI).contains(&lambda) {
        return Err(Error::domain(format!("frequency {lambda} outside (0, π]")));
    }
    if lambda == 0.0 && params.d != 0.0 {
        return Err(Error::domain("spectral density has a pole or zero at the origin when d ≠ 0"));
    }
    let c = lambda.cos();
    let ma = 1.0 + 2.0 * params.theta * c + params.theta * params.theta;
    let ar = 1.0 - 2.0 * params.phi * c + params.phi * params.phi;
    let long = if params.d == 0.0 { 1.0 } else { (2.0 * (lambda / 2.0).sin()).powf(-2.0 * params.d) };
    Ok(params.sigma2 / (2.0 * PI) * ma / ar * long)
}
