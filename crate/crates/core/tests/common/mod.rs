//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use longmem::model::{Atom, Component, KernelKind, ModelState, Priors, StickState};
use longmem::sampler::{ChainConfig, Sampler};
use longmem::spectral::{regressor, RegressionSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};
use statrs::function::gamma::gamma_ur;

/// `|Σ_t x_t e^{−iλ_j t}|² / (2πn)` by direct double sum, `j = 1..⌊n/2⌋`.
pub fn dft_periodogram(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (1..=n / 2)
        .map(|j| {
            let l = 2.0 * PI * j as f64 / n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                re += v * (l * t as f64).cos();
                im += v * (l * t as f64).sin();
            }
            (re * re + im * im) / (2.0 * PI * n as f64)
        })
        .collect()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) }
}

fn normal(rng: &mut impl Rng, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).unwrap().sample(rng)
}

fn inv_gamma(rng: &mut impl Rng, shape: f64, scale: f64) -> f64 {
    scale / Gamma::new(shape, 1.0).unwrap().sample(rng)
}

pub fn random_atom(rng: &mut impl Rng) -> Atom {
    Atom {
        weight: rng.random_range(0.05..0.95),
        mean: rng.random_range(-3.0..3.0),
        sd1: rng.random_range(0.1..3.0),
        sd2: rng.random_range(0.1..3.0),
    }
}

pub fn random_sticks(rng: &mut impl Rng, h: usize, support: (f64, f64)) -> StickState {
    let mut sticks: Vec<f64> = (0..h).map(|_| rng.random_range(0.01..0.99)).collect();
    sticks[h - 1] = 1.0;
    StickState {
        sticks,
        knots: (0..h).map(|_| rng.random_range(support.0..=support.1)).collect(),
        bandwidth: rng.random_range(0.05..3.0),
        kernel: if rng.random::<bool>() { KernelKind::DoubleExponential } else { KernelKind::SquaredExponential },
        a: rng.random_range(0.1..9.9),
        b: rng.random_range(0.1..9.9),
        support,
    }
}

pub fn random_state(rng: &mut impl Rng, h: usize, m: usize, support: (f64, f64)) -> ModelState {
    ModelState {
        c: rng.random_range(-2.0..2.0),
        d: rng.random_range(-0.9..0.45),
        atoms: (0..h).map(|_| random_atom(rng)).collect(),
        sticks: random_sticks(rng, h, support),
        allocations: (0..m).map(|_| rng.random_range(0..h)).collect(),
        components: (0..m)
            .map(|_| if rng.random::<bool>() { Component::First } else { Component::Second })
            .collect(),
        nu: rng.random_range(0.05..0.95),
        base_variance: rng.random_range(0.1..3.0),
    }
}

/// Stick-breaking weights written out term by term.
pub fn brute_weights(s: &StickState, lambda: f64) -> Vec<f64> {
    let h = s.sticks.len();
    let w = |k: usize| {
        let dist = (lambda - s.knots[k]).abs() / s.bandwidth;
        match s.kernel {
            KernelKind::DoubleExponential => (-dist).exp(),
            KernelKind::SquaredExponential => (-dist * dist).exp(),
        }
    };
    (0..h)
        .map(|k| {
            let mut p: f64 = (0..k).map(|l| 1.0 - s.sticks[l] * w(l)).product();
            if k + 1 < h {
                p *= s.sticks[k] * w(k);
            }
            p
        })
        .collect()
}

pub fn brute_kernel(u: f64, a: &Atom) -> f64 {
    let g = |z: f64, m: f64, s: f64| (-(z - m) * (z - m) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
    let m2 = -a.mean * a.weight / (1.0 - a.weight);
    a.weight * g(u, a.mean, a.sd1) + (1.0 - a.weight) * g(u, m2, a.sd2)
}

pub fn brute_loglik(y: &[f64], x: &[f64], lambda: &[f64], s: &ModelState) -> f64 {
    (0..y.len())
        .map(|j| {
            let u = y[j] - s.c - s.d * x[j];
            let p = brute_weights(&s.sticks, lambda[j]);
            p.iter().zip(&s.atoms).map(|(p, a)| p * brute_kernel(u, a)).sum::<f64>().ln()
        })
        .sum()
}

/// `∫ u b(u) du` by composite Simpson over each component's ±14σ range.
pub fn kernel_first_moment(a: &Atom) -> f64 {
    let m2 = -a.mean * a.weight / (1.0 - a.weight);
    let lo = (a.mean - 14.0 * a.sd1).min(m2 - 14.0 * a.sd2);
    let hi = (a.mean + 14.0 * a.sd1).max(m2 + 14.0 * a.sd2);
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let f = |u: f64| u * brute_kernel(u, a);
    let mut s = f(lo) + f(hi);
    for i in 1..steps {
        let u = lo + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(u) } else { 2.0 * f(u) };
    }
    s * h / 3.0
}

/// Fourier grid `λ_j = 2πj/n`, `j = 1..=m`, with its regressors.
pub fn regression_grid(m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let lambda: Vec<f64> = (1..=m).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let x = lambda.iter().map(|&l| regressor(l).unwrap()).collect();
    (lambda, x)
}

/// One draw of every parameter from the prior (allocations left empty).
pub fn prior_draw(rng: &mut impl Rng, p: &Priors, h: usize, support: (f64, f64), kernel: KernelKind) -> ModelState {
    let a = rng.random_range(0.0..p.stick_hyper_max);
    let b = rng.random_range(0.0..p.stick_hyper_max);
    let beta = Beta::new(a.max(1e-300), b.max(1e-300)).unwrap();
    let mut sticks: Vec<f64> = (0..h).map(|_| beta.sample(rng).clamp(1e-300, 1.0 - 1e-16)).collect();
    sticks[h - 1] = 1.0;
    let base_variance = inv_gamma(rng, p.base_variance_shape, p.base_variance_scale);
    let atoms = (0..h)
        .map(|_| Atom {
            weight: rng.random_range(0.0..1.0f64).max(1e-12),
            mean: normal(rng, 0.0, base_variance.sqrt()),
            sd1: inv_gamma(rng, p.atom_variance_shape, p.atom_variance_scale).sqrt(),
            sd2: inv_gamma(rng, p.atom_variance_shape, p.atom_variance_scale).sqrt(),
        })
        .collect();
    let nu: f64 = rng.random_range(0.0..1.0f64).max(1e-12);
    ModelState {
        c: normal(rng, 0.0, p.c_variance.sqrt()),
        d: rng.random_range(-1.0..0.5),
        atoms,
        sticks: StickState {
            sticks,
            knots: (0..h).map(|_| rng.random_range(support.0..support.1)).collect(),
            bandwidth: inv_gamma(rng, p.bandwidth_shape, nu * nu / 2.0),
            kernel,
            a,
            b,
            support,
        },
        allocations: Vec::new(),
        components: Vec::new(),
        nu,
        base_variance,
    }
}

/// Draws allocations, sub-components and responses given the parameters.
pub fn simulate_responses(rng: &mut impl Rng, s: &mut ModelState, x: &[f64], lambda: &[f64]) -> Vec<f64> {
    s.allocations.clear();
    s.components.clear();
    let mut y = Vec::with_capacity(x.len());
    for (&xj, &lj) in x.iter().zip(lambda) {
        let p = brute_weights(&s.sticks, lj);
        let mut u = rng.random::<f64>() * p.iter().sum::<f64>();
        let mut h = p.len() - 1;
        for (k, &pk) in p.iter().enumerate() {
            if u < pk {
                h = k;
                break;
            }
            u -= pk;
        }
        let a = s.atoms[h];
        let first = rng.random::<f64>() < a.weight;
        let e = if first {
            normal(rng, a.mean, a.sd1)
        } else {
            normal(rng, -a.mean * a.weight / (1.0 - a.weight), a.sd2)
        };
        s.allocations.push(h);
        s.components.push(if first { Component::First } else { Component::Second });
        y.push(s.c + s.d * xj + e);
    }
    y
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Marginal CDF of `ξ` when `ξ | ν ~ IG(shape, ν²/2)` and `ν ~ U(0, 1)`:
/// `∫_0^1 Q(shape, ν²/(2x)) dν` by Simpson's rule.
pub fn bandwidth_marginal_cdf(x: f64, shape: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let steps = 2_000;
    let h = 1.0 / steps as f64;
    let f = |nu: f64| if nu == 0.0 { 1.0 } else { gamma_ur(shape, nu * nu / (2.0 * x)) };
    let mut s = f(0.0) + f(1.0);
    for i in 1..steps {
        let nu = i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(nu) } else { 2.0 * f(nu) };
    }
    s * h / 3.0
}

pub struct GewekeOutcome {
    pub ks_d: f64,
    pub ks_c: f64,
    pub ks_xi: f64,
}

/// Priors used for the joint-distribution check. The base variance of the atom
/// means is kept away from the extreme tails of IG(0.01, 0.01), whose draws
/// overflow the simulated responses.
pub fn geweke_priors() -> Priors {
    Priors { base_variance_shape: 3.0, base_variance_scale: 2.0, ..Priors::default() }
}

/// Independent cycles of: parameters from the prior, responses given the
/// parameters, `sweeps` sampler sweeps started at the generating state. The
/// final states are draws from the prior when every update leaves the
/// posterior invariant.
pub fn geweke(cycles: usize, sweeps: usize, seed: u64) -> GewekeOutcome {
    const H: usize = 3;
    const M: usize = 20;
    let n = 2 * M;
    let (lambda, x) = regression_grid(M, n);
    let support = (2.0 * PI / n as f64, PI);
    let priors = geweke_priors();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ds, mut cs, mut xis) = (Vec::new(), Vec::new(), Vec::new());
    for cycle in 0..cycles {
        let mut state = prior_draw(&mut rng, &priors, H, support, KernelKind::DoubleExponential);
        let y = simulate_responses(&mut rng, &mut state, &x, &lambda);
        let data = RegressionSample::from_columns(y, x.clone(), lambda.clone(), n).unwrap();
        let config = ChainConfig {
            iterations: sweeps + 1,
            burn_in: 0,
            thin: 1,
            seed: seed ^ (cycle as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            components: H,
            adapt: false,
            priors,
            ..ChainConfig::default()
        };
        let mut sampler = Sampler::new(&data, &config, state).unwrap();
        for it in 0..sweeps {
            sampler.set_adapting(it, false);
            sampler.sweep().unwrap();
        }
        let s = sampler.state();
        ds.push(s.d);
        cs.push(s.c);
        xis.push(s.sticks.bandwidth);
    }
    let c_sd = priors.c_variance.sqrt();
    GewekeOutcome {
        ks_d: ks_statistic(&ds, |v| ((v + 1.0) / 1.5).clamp(0.0, 1.0)),
        ks_c: ks_statistic(&cs, |v| std_normal_cdf(v / c_sd)),
        ks_xi: ks_statistic(&xis, |v| bandwidth_marginal_cdf(v, priors.bandwidth_shape)),
    }
}

pub fn state_for(data: &RegressionSample, atoms: Vec<Atom>, c: f64, d: f64) -> ModelState {
    let h = atoms.len();
    let support = data.frequency_support();
    let mut sticks = vec![0.5; h];
    sticks[h - 1] = 1.0;
    ModelState {
        c,
        d,
        atoms,
        sticks: StickState {
            sticks,
            knots: (0..h).map(|k| support.0 + (k as f64 + 0.5) * (support.1 - support.0) / h as f64).collect(),
            bandwidth: 1.0,
            kernel: KernelKind::DoubleExponential,
            a: 1.0,
            b: 1.0,
            support,
        },
        allocations: vec![0; data.len()],
        components: vec![Component::First; data.len()],
        nu: 0.5,
        base_variance: 1.0,
    }
}

pub fn grid_sample(m: usize, n: usize, f: impl Fn(usize, f64) -> f64) -> RegressionSample {
    let (lambda, x) = regression_grid(m, n);
    let y = x.iter().enumerate().map(|(j, &xj)| f(j, xj)).collect();
    RegressionSample::from_columns(y, x, lambda, n).unwrap()
}

/// `(P + X'WX)^{-1} X'W(y − m)` for the exact Gaussian conditional.
pub fn gls_oracle(data: &RegressionSample, s: &ModelState, prior_var: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let (mut a, mut b, mut c, mut r0, mut r1) = (1.0 / prior_var, 0.0, 0.0, 0.0, 0.0);
    for j in 0..data.len() {
        let atom = s.atoms[s.allocations[j]];
        let (m, sd) = match s.components[j] {
            Component::First => (atom.mean, atom.sd1),
            Component::Second => (-atom.mean * atom.weight / (1.0 - atom.weight), atom.sd2),
        };
        let (x, y) = (data.regressors()[j], data.responses()[j]);
        let w = 1.0 / (sd * sd);
        a += w;
        b += w * x;
        c += w * x * x;
        r0 += w * (y - m);
        r1 += w * x * (y - m);
    }
    let det = a * c - b * b;
    let cov = [[c / det, -b / det], [-b / det, a / det]];
    ([cov[0][0] * r0 + cov[0][1] * r1, cov[1][0] * r0 + cov[1][1] * r1], cov)
}
