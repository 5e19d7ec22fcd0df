//! Whittle pseudo-likelihood for ARFIMA(0,d,0) and ARFIMA(1,d,1), and a
//! random-walk Metropolis chain on it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arfima::ArfimaParams;
use crate::baselines::ls::{fit_ls, ls_design};
use crate::error::{Error, Result};
use crate::model::{D_LOWER, D_UPPER};
use crate::sampler::{ChainConfig, PosteriorDraws, Tuning, D_CLAMP_MARGIN};
use crate::spectral::{periodogram, pooled_log_periodogram, Periodogram, TimeSeries};
use crate::stats::inv_gamma_ln_pdf;

const SIGMA2_SHAPE: f64 = 0.1;
const SIGMA2_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParametricModel {
    /// ARFIMA(0,d,0)
    #[default]
    FractionalNoise,
    /// ARFIMA(1,d,1)
    Arfima11,
}

/// Periodogram with the trigonometric terms the density needs.
struct WhittleData {
    cos: Vec<f64>,
    log_2sin: Vec<f64>,
    ordinates: Vec<f64>,
}

impl WhittleData {
    fn new(pg: &Periodogram) -> Self {
        Self {
            cos: pg.frequencies().iter().map(|l| l.cos()).collect(),
            log_2sin: pg.frequencies().iter().map(|l| (2.0 * (l / 2.0).sin()).ln()).collect(),
            ordinates: pg.ordinates().to_vec(),
        }
    }

    /// `log(f/σ²)` at ordinate `j`.
    #[inline]
    fn log_shape(&self, j: usize, d: f64, phi: f64, theta: f64) -> f64 {
        let c = self.cos[j];
        let ma = 1.0 + 2.0 * theta * c + theta * theta;
        let ar = 1.0 - 2.0 * phi * c + phi * phi;
        ma.ln() - ar.ln() - 2.0 * d * self.log_2sin[j] - (2.0 * PI).ln()
    }

    fn neg_loglik(&self, p: &ArfimaParams) -> f64 {
        let ls2 = p.sigma2.ln();
        let mut total = 0.0;
        for (j, &i) in self.ordinates.iter().enumerate() {
            let lf = ls2 + self.log_shape(j, p.d, p.phi, p.theta);
            total += lf + i * (-lf).exp();
        }
        total
    }
}

/// `Σ_j [log f(λ_j) + I(λ_j)/f(λ_j)]` over all Fourier frequencies.
pub fn whittle_neg_loglik(series: &TimeSeries, params: &ArfimaParams) -> Result<f64> {
    whittle_from_periodogram(&periodogram(series), params)
}

pub fn whittle_from_periodogram(pg: &Periodogram, params: &ArfimaParams) -> Result<f64> {
    params.validate()?;
    let data = WhittleData::new(pg);
    let value = data.neg_loglik(params);
    if !value.is_finite() {
        return Err(Error::domain("spectral density vanishes or diverges at a Fourier frequency"));
    }
    Ok(value)
}

/// Innovation variance minimizing the Whittle objective for a fixed shape:
/// the mean of `I(λ_j)/(f(λ_j)/σ²)`.
pub fn profile_sigma2(pg: &Periodogram, d: f64, phi: f64, theta: f64) -> Result<f64> {
    ArfimaParams::new(d, phi, theta, 1.0)?;
    let data = WhittleData::new(pg);
    let total: f64 = (0..data.ordinates.len())
        .map(|j| data.ordinates[j] * (-data.log_shape(j, d, phi, theta)).exp())
        .sum();
    Ok(total / data.ordinates.len() as f64)
}

fn log_prior(p: &ArfimaParams) -> f64 {
    if p.validate().is_err() {
        return f64::NEG_INFINITY;
    }
    // uniform on d, φ, θ; σ² is sampled on the log scale
    inv_gamma_ln_pdf(p.sigma2, SIGMA2_SHAPE, SIGMA2_SCALE) + p.sigma2.ln()
}

/// Componentwise random-walk Metropolis on `(d, φ, θ, log σ²)` against the
/// Whittle pseudo-posterior. `c` holds `log(σ²/2π)`.
pub fn run_param_chain(
    series: &TimeSeries,
    model: ParametricModel,
    config: &ChainConfig,
) -> Result<PosteriorDraws> {
    config.validate()?;
    let pg = periodogram(series);
    let data = WhittleData::new(&pg);
    let n = series.len();
    let d0 = pooled_log_periodogram(&pg, ls_design(n))
        .and_then(|s| fit_ls(&s))
        .map(|e| e.d_hat)
        .unwrap_or(0.0)
        .clamp(D_LOWER + D_CLAMP_MARGIN, D_UPPER - D_CLAMP_MARGIN);
    let mut p = ArfimaParams { d: d0, phi: 0.0, theta: 0.0, sigma2: profile_sigma2(&pg, d0, 0.0, 0.0)? };
    let target = |p: &ArfimaParams| -> f64 {
        let lp = log_prior(p);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp - data.neg_loglik(p)
    };
    let mut current = target(&p);
    if !current.is_finite() {
        return Err(Error::numeric("Whittle posterior is not finite at the starting point"));
    }

    let mut tuning = Tuning::for_parametric(&config.proposals);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let kept = config.kept_draws();
    let mut draws = PosteriorDraws {
        d: Vec::with_capacity(kept),
        c: Vec::with_capacity(kept),
        auxiliary: BTreeMap::new(),
        states: Vec::new(),
        acceptance: BTreeMap::new(),
        seed: config.seed,
    };
    let (mut phis, mut thetas, mut sigmas) = (Vec::new(), Vec::new(), Vec::new());
    for it in 0..config.iterations {
        tuning.begin_iteration(it, config.adapt && it < config.burn_in);
        let (d, t) = tuning.metropolis("d", 0, p.d, current, |v| target(&ArfimaParams { d: v, ..p }), &mut rng);
        p.d = d;
        current = t;
        if model == ParametricModel::Arfima11 {
            let (phi, t) =
                tuning.metropolis("phi", 0, p.phi, current, |v| target(&ArfimaParams { phi: v, ..p }), &mut rng);
            p.phi = phi;
            current = t;
            let (theta, t) =
                tuning.metropolis("theta", 0, p.theta, current, |v| target(&ArfimaParams { theta: v, ..p }), &mut rng);
            p.theta = theta;
            current = t;
        }
        let (ls2, t) = tuning.metropolis(
            "log_sigma2",
            0,
            p.sigma2.ln(),
            current,
            |v| target(&ArfimaParams { sigma2: v.exp(), ..p }),
            &mut rng,
        );
        p.sigma2 = ls2.exp();
        current = t;
        if !current.is_finite() {
            return Err(Error::Chain {
                iteration: it,
                source: Box::new(Error::numeric("Whittle posterior became non-finite")),
            });
        }
        if config.is_kept(it) {
            draws.d.push(p.d);
            draws.c.push((p.sigma2 / (2.0 * PI)).ln());
            phis.push(p.phi);
            thetas.push(p.theta);
            sigmas.push(p.sigma2);
        }
    }
    draws.auxiliary.insert("phi".into(), phis);
    draws.auxiliary.insert("theta".into(), thetas);
    draws.auxiliary.insert("sigma2".into(), sigmas);
    draws.acceptance = tuning.acceptance_rates();
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize) -> TimeSeries {
        TimeSeries::new((0..n).map(|t| ((t * 37 % 11) as f64 - 5.0) * 0.3 + (t as f64 * 0.7).cos()).collect()).unwrap()
    }

    #[test]
    fn white_noise_at_unit_density_sums_ordinates() {
        let s = series(64);
        let p = ArfimaParams::new(0.0, 0.0, 0.0, 2.0 * PI).unwrap();
        let pg = periodogram(&s);
        let expected: f64 = pg.ordinates().iter().sum();
        assert!((whittle_neg_loglik(&s, &p).unwrap() - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn three_point_expansion() {
        // n = 7 gives three Fourier frequencies
        let s = TimeSeries::new(vec![0.3, -1.2, 0.8, 2.0, -0.5, 0.1, 1.1]).unwrap();
        let p = ArfimaParams::new(0.2, 0.4, -0.3, 1.5).unwrap();
        let pg = periodogram(&s);
        let mut expected = 0.0;
        for (&l, &i) in pg.frequencies().iter().zip(pg.ordinates()) {
            let ma = (1.0 - 0.3 * l.cos()).powi(2) + (0.3 * l.sin()).powi(2);
            let ar = (1.0 - 0.4 * l.cos()).powi(2) + (0.4 * l.sin()).powi(2);
            let f = 1.5 / (2.0 * PI) * ma / ar * (4.0 * (l / 2.0).sin().powi(2)).powf(-0.2);
            expected += f.ln() + i / f;
        }
        assert_eq!(pg.len(), 3);
        assert!((whittle_neg_loglik(&s, &p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn profile_variance_minimizes_objective() {
        let s = series(200);
        let pg = periodogram(&s);
        let best = profile_sigma2(&pg, 0.1, 0.3, 0.2).unwrap();
        let f = |s2: f64| whittle_from_periodogram(&pg, &ArfimaParams::new(0.1, 0.3, 0.2, s2).unwrap()).unwrap();
        // golden-section search on log σ²
        let (mut lo, mut hi) = ((best / 100.0).ln(), (best * 100.0).ln());
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if f(a.exp()) < f(b.exp()) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let numeric = (0.5 * (lo + hi)).exp();
        assert!((numeric - best).abs() < 1e-6 * best, "{numeric} vs {best}");
    }

    #[test]
    fn chain_respects_supports_and_is_deterministic() {
        let p = ArfimaParams::new(0.2, 0.3, 0.1, 1.0).unwrap();
        let s = crate::arfima::simulate(&p, 512, 4).unwrap();
        let cfg = ChainConfig { iterations: 1_500, burn_in: 500, thin: 2, seed: 11, ..Default::default() };
        let a = run_param_chain(&s, ParametricModel::Arfima11, &cfg).unwrap();
        assert_eq!(a.d.len(), cfg.kept_draws());
        assert!(a.d.iter().all(|&d| d > -1.0 && d < 0.5));
        assert!(a.auxiliary["phi"].iter().chain(&a.auxiliary["theta"]).all(|v| v.abs() < 1.0));
        assert!(a.acceptance.values().all(|&r| r > 0.0 && r < 1.0));
        assert_eq!(a, run_param_chain(&s, ParametricModel::Arfima11, &cfg).unwrap());
    }
}
