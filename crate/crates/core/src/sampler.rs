//! Blocked Metropolis-within-Gibbs sampler for the semiparametric model.
//!
//! One sweep updates, in order:
//!
//! 1. allocations `s_j` and kernel sub-components, from their exact categorical
//!    conditionals;
//! 2. atoms: `σ²_1h, σ²_2h` (inverse-gamma), `μ_h` (Gaussian, honouring the
//!    zero-mean tie), `π_h` (random walk on the logit scale);
//! 3. sticks `V_h`, knots `ψ_h`, bandwidth `ξ`, `ν`, `a`, `b` by random-walk
//!    Metropolis against their full conditionals, and `σ²_θ` by its
//!    inverse-gamma conditional;
//! 4. `(c, d)` jointly from the bivariate normal conditional, with `d`
//!    truncated to `(−1, 1/2)`.
//!
//! Proposal scales adapt by Robbins–Monro towards 0.44 acceptance during
//! burn-in and are frozen afterwards.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    kernel_weight, Atom, Component, KernelKind, ModelState, Priors, StickState, D_LOWER, D_UPPER,
};
use crate::spectral::RegressionSample;
use crate::stats::{
    beta_ln_pdf, inv_gamma_ln_pdf, kde_mode, log_sum_exp, mean, ols_line,
    quantile_sorted, sorted_copy, std_normal_cdf, std_normal_quantile, variance,
};

const TARGET_ACCEPTANCE: f64 = 0.44;
const MAX_REJECTION_TRIES: usize = 100_000;
/// Distance kept from the boundary of `(−1, 1/2)` when the least-squares start falls outside.
pub const D_CLAMP_MARGIN: f64 = 1e-3;

/// Initial random-walk scales per Metropolis block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProposalScales {
    /// Sticks, on the logit scale.
    pub stick: f64,
    /// Knots, in radians.
    pub knot: f64,
    /// Kernel bandwidth, on the log scale.
    pub bandwidth: f64,
    /// `ν`, on the logit scale.
    pub nu: f64,
    /// Beta hyperparameters `a`, `b`.
    pub stick_hyper: f64,
    /// Atom weights `π_h`, on the logit scale.
    pub atom_weight: f64,
    /// Memory parameter of the parametric chain.
    pub d: f64,
    /// AR and MA coefficients of the parametric chain.
    pub arma: f64,
    /// Innovation variance of the parametric chain, on the log scale.
    pub log_sigma2: f64,
}

impl Default for ProposalScales {
    fn default() -> Self {
        Self {
            stick: 1.0,
            knot: 0.3,
            bandwidth: 0.3,
            nu: 1.0,
            stick_hyper: 1.0,
            atom_weight: 0.5,
            d: 0.02,
            arma: 0.05,
            log_sigma2: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Truncation level `H`.
    pub components: usize,
    pub kernel: KernelKind,
    pub proposals: ProposalScales,
    /// Adapt proposal scales during burn-in.
    pub adapt: bool,
    /// Store the full model state at every kept iteration.
    pub keep_states: bool,
    pub priors: Priors,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 10_000,
            thin: 5,
            seed: 0,
            components: 30,
            kernel: KernelKind::DoubleExponential,
            proposals: ProposalScales::default(),
            adapt: true,
            keep_states: false,
            priors: Priors::default(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "need 0 ≤ burn_in < iterations, got burn_in = {}, iterations = {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be at least 1"));
        }
        if self.components == 0 {
            return Err(Error::invalid("at least one mixture component is required"));
        }
        Ok(())
    }

    /// Number of draws a chain with this configuration keeps.
    pub fn kept_draws(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    pub(crate) fn is_kept(&self, iteration: usize) -> bool {
        iteration >= self.burn_in && (iteration - self.burn_in + 1) % self.thin == 0
    }
}

/// Kept draws of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub d: Vec<f64>,
    /// Intercept draws; for the parametric chain, `log(σ²/2π)`.
    pub c: Vec<f64>,
    /// Other monitored scalars, keyed by name.
    pub auxiliary: BTreeMap<String, Vec<f64>>,
    pub states: Vec<ModelState>,
    /// Acceptance rate of each Metropolis block over the whole run.
    pub acceptance: BTreeMap<String, f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub median: f64,
    pub map: f64,
    /// Equal-tailed 95% interval from the 2.5% and 97.5% empirical quantiles.
    pub interval: (f64, f64),
    pub ess: f64,
    pub chains: usize,
}

pub const MIN_SUMMARY_DRAWS: usize = 100;

pub fn summarize(draws: &PosteriorDraws) -> Result<PosteriorSummary> {
    summarize_values(&draws.d)
}

pub fn summarize_values(values: &[f64]) -> Result<PosteriorSummary> {
    if values.len() < MIN_SUMMARY_DRAWS {
        return Err(Error::invalid(format!(
            "{} draws, at least {MIN_SUMMARY_DRAWS} required for a summary",
            values.len()
        )));
    }
    let sorted = sorted_copy(values);
    Ok(PosteriorSummary {
        mean: mean(values),
        median: quantile_sorted(&sorted, 0.5),
        map: kde_mode(values),
        interval: (quantile_sorted(&sorted, 0.025), quantile_sorted(&sorted, 0.975)),
        ess: effective_sample_size(values),
        chains: 1,
    })
}

/// Effective sample size from the autocorrelations, truncated by Geyer's
/// initial monotone sequence.
pub fn effective_sample_size(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 4 {
        return n as f64;
    }
    let acov = autocovariance(values);
    let m = mean(values);
    if acov[0] <= 1e-26 * m.mul_add(m, 1.0) {
        return n as f64;
    }
    let rho: Vec<f64> = acov.iter().map(|g| g / acov[0]).collect();
    let mut sum_pairs = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while k + 1 < n {
        let pair = rho[k] + rho[k + 1];
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum_pairs += pair;
        prev = pair;
        k += 2;
    }
    let tau = (2.0 * sum_pairs - 1.0).max(1.0 / n as f64);
    n as f64 / tau
}

fn autocovariance(values: &[f64]) -> Vec<f64> {
    use rustfft::{num_complex::Complex64, FftPlanner};
    let n = values.len();
    let m = mean(values);
    let size = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (b, v) in buf.iter_mut().zip(values) {
        b.re = v - m;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    buf[..n].iter().map(|z| z.re / (size as f64 * n as f64)).collect()
}

/// Starting state: `(c, d)` from least squares (with `d` pulled inside
/// `(−1, 1/2)`), atoms around the residual spread, evenly spaced knots.
pub fn init_state(data: &RegressionSample, config: &ChainConfig) -> Result<ModelState> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("regression sample is empty"));
    }
    let (c, slope) = ols_line(data.regressors(), data.responses())?;
    let d = slope.clamp(D_LOWER + D_CLAMP_MARGIN, D_UPPER - D_CLAMP_MARGIN);
    let residuals: Vec<f64> = data
        .responses()
        .iter()
        .zip(data.regressors())
        .map(|(y, x)| y - c - d * x)
        .collect();
    let spread = if residuals.len() > 1 { variance(&residuals).sqrt() } else { 0.0 };
    let spread = if spread.is_finite() && spread > 1e-3 { spread } else { 1e-3 };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x1d87_2b41_c5e3_a9f0);
    let h_max = config.components;
    let atoms = (0..h_max)
        .map(|_| Atom {
            weight: 0.5,
            mean: 0.5 * spread * standard_normal(&mut rng),
            sd1: spread,
            sd2: spread,
        })
        .collect();
    let support = data.frequency_support();
    let (lo, hi) = support;
    let knots = (0..h_max).map(|h| lo + (h as f64 + 0.5) * (hi - lo) / h_max as f64).collect();
    let mut sticks = vec![0.5; h_max];
    sticks[h_max - 1] = 1.0;
    let mut state = ModelState {
        c,
        d,
        atoms,
        sticks: StickState {
            sticks,
            knots,
            bandwidth: (hi - lo) / 4.0,
            kernel: config.kernel,
            a: 1.0,
            b: 1.0,
            support,
        },
        allocations: vec![0; data.len()],
        components: vec![Component::First; data.len()],
        nu: 0.5,
        base_variance: spread * spread,
    };
    let weights = WeightCache::build(&state.sticks, data.frequencies());
    sample_allocations(&mut state, data, &weights, &mut rng);
    Ok(state)
}

/// Exact Gaussian conditional of `(c, d)` given allocations, before truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdConditional {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

/// Per-block Metropolis bookkeeping with burn-in adaptation.
#[derive(Debug, Clone)]
pub struct Tuning {
    log_scales: BTreeMap<&'static str, Vec<f64>>,
    attempts: BTreeMap<&'static str, u64>,
    accepts: BTreeMap<&'static str, u64>,
    adapting: bool,
    step: u64,
}

impl Tuning {
    fn new(scales: &ProposalScales, components: usize) -> Self {
        let mut log_scales = BTreeMap::new();
        let per = |s: f64, k: usize| vec![s.ln(); k];
        log_scales.insert("stick", per(scales.stick, components));
        log_scales.insert("knot", per(scales.knot, components));
        log_scales.insert("atom_weight", per(scales.atom_weight, components));
        log_scales.insert("bandwidth", per(scales.bandwidth, 1));
        log_scales.insert("nu", per(scales.nu, 1));
        log_scales.insert("stick_hyper", per(scales.stick_hyper, 2));
        log_scales.insert("d", per(scales.d, 1));
        log_scales.insert("phi", per(scales.arma, 1));
        log_scales.insert("theta", per(scales.arma, 1));
        log_scales.insert("log_sigma2", per(scales.log_sigma2, 1));
        Self { log_scales, attempts: BTreeMap::new(), accepts: BTreeMap::new(), adapting: false, step: 0 }
    }

    pub(crate) fn for_parametric(scales: &ProposalScales) -> Self {
        Self::new(scales, 0)
    }

    #[inline]
    fn scale(&self, block: &'static str, idx: usize) -> f64 {
        self.log_scales[block][idx].exp()
    }

    fn record(&mut self, block: &'static str, idx: usize, accepted: bool) {
        *self.attempts.entry(block).or_default() += 1;
        if accepted {
            *self.accepts.entry(block).or_default() += 1;
        }
        if self.adapting {
            let gain = (self.step as f64 + 1.0).powf(-0.6);
            let acc = if accepted { 1.0 } else { 0.0 };
            let s = &mut self.log_scales.get_mut(block).expect("known block")[idx];
            *s = (*s + gain * (acc - TARGET_ACCEPTANCE)).clamp(-12.0, 4.0);
        }
    }

    pub(crate) fn begin_iteration(&mut self, iteration: usize, adapting: bool) {
        self.step = iteration as u64;
        self.adapting = adapting;
    }

    pub fn acceptance_rates(&self) -> BTreeMap<String, f64> {
        self.attempts
            .iter()
            .map(|(k, &n)| {
                let a = self.accepts.get(k).copied().unwrap_or(0);
                (k.to_string(), a as f64 / n.max(1) as f64)
            })
            .collect()
    }

    /// Metropolis step for a scalar on an unconstrained scale.
    pub(crate) fn metropolis<R: Rng + ?Sized>(
        &mut self,
        block: &'static str,
        idx: usize,
        current: f64,
        current_target: f64,
        target: impl FnOnce(f64) -> f64,
        rng: &mut R,
    ) -> (f64, f64) {
        let proposal = current + self.scale(block, idx) * standard_normal(rng);
        let prop_target = target(proposal);
        let accepted = prop_target.is_finite()
            && (prop_target - current_target >= 0.0 || rng.random::<f64>().ln() < prop_target - current_target);
        self.record(block, idx, accepted);
        if accepted {
            (proposal, prop_target)
        } else {
            (current, current_target)
        }
    }
}

/// Kernel weights `w(λ_j, ψ_h)` laid out row-major by observation.
#[derive(Debug, Clone)]
struct WeightCache {
    w: Vec<f64>,
    h_max: usize,
}

impl WeightCache {
    fn build(sticks: &StickState, lambda: &[f64]) -> Self {
        let h_max = sticks.len();
        let mut w = Vec::with_capacity(lambda.len() * h_max);
        for &l in lambda {
            for h in 0..h_max {
                w.push(sticks.kernel_at(l, h));
            }
        }
        Self { w, h_max }
    }

    #[inline]
    fn row(&self, j: usize) -> &[f64] {
        &self.w[j * self.h_max..(j + 1) * self.h_max]
    }

    fn refresh_column(&mut self, sticks: &StickState, lambda: &[f64], h: usize) {
        for (j, &l) in lambda.iter().enumerate() {
            self.w[j * self.h_max + h] = sticks.kernel_at(l, h);
        }
    }
}

/// Chain state plus everything needed to advance it.
pub struct Sampler<'a> {
    data: &'a RegressionSample,
    priors: Priors,
    state: ModelState,
    tuning: Tuning,
    rng: ChaCha8Rng,
    weights: WeightCache,
}

impl<'a> Sampler<'a> {
    /// Starts a sampler from `state`; the random stream is seeded from `config.seed`.
    pub fn new(data: &'a RegressionSample, config: &ChainConfig, state: ModelState) -> Result<Self> {
        config.validate()?;
        if state.allocations.len() != data.len() || state.components.len() != data.len() {
            return Err(Error::invalid("state allocations do not match the data length"));
        }
        let h_max = state.num_components();
        if h_max == 0 || state.sticks.len() != h_max || state.sticks.knots.len() != h_max {
            return Err(Error::invalid("atoms, sticks and knots must have the same length"));
        }
        if state.allocations.iter().any(|&s| s >= h_max) {
            return Err(Error::invalid("allocation refers to a missing atom"));
        }
        let weights = WeightCache::build(&state.sticks, data.frequencies());
        Ok(Self {
            data,
            priors: config.priors,
            tuning: Tuning::new(&config.proposals, h_max),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            weights,
            state,
        })
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    /// Replaces the state, e.g. between simulation-based checks.
    pub fn set_state(&mut self, state: ModelState) -> Result<()> {
        if state.allocations.len() != self.data.len() || state.num_components() != self.state.num_components() {
            return Err(Error::invalid("replacement state does not match the sampler"));
        }
        self.weights = WeightCache::build(&state.sticks, self.data.frequencies());
        self.state = state;
        Ok(())
    }

    pub fn into_state(self) -> ModelState {
        self.state
    }

    pub fn tuning(&self) -> &Tuning {
        &self.tuning
    }

    pub fn set_adapting(&mut self, iteration: usize, adapting: bool) {
        self.tuning.begin_iteration(iteration, adapting);
    }

    /// One full sweep in the fixed order allocations → atoms → weights → (c, d).
    pub fn sweep(&mut self) -> Result<()> {
        self.update_allocations();
        self.update_atoms();
        self.update_sticks_knots_bandwidth();
        self.update_cd()
    }

    pub fn update_allocations(&mut self) {
        sample_allocations(&mut self.state, self.data, &self.weights, &mut self.rng);
    }

    /// Normalized conditional probabilities of `s_j = h`, `h = 1..H`.
    pub fn allocation_probabilities(&self, j: usize) -> Vec<f64> {
        let st = &self.state;
        let u = st.residual(self.data.responses()[j], self.data.regressors()[j]);
        let mut p = vec![0.0; st.num_components()];
        st.sticks.weights_into(self.data.frequencies()[j], &mut p);
        let logs: Vec<f64> = p.iter().zip(&st.atoms).map(|(w, a)| w.ln() + a.ln_pdf(u)).collect();
        let norm = log_sum_exp(&logs);
        logs.iter().map(|l| (l - norm).exp()).collect()
    }

    /// Conditional of `(c, d)` given allocations and sub-components.
    pub fn cd_conditional(&self) -> CdConditional {
        let st = &self.state;
        // precision matrix entries and right-hand side
        let (mut p00, mut p01, mut p11) = (1.0 / self.priors.c_variance, 0.0, 0.0);
        let (mut r0, mut r1) = (0.0, 0.0);
        for (j, (&y, &x)) in self.data.responses().iter().zip(self.data.regressors()).enumerate() {
            let atom = &st.atoms[st.allocations[j]];
            let (m, sd) = match st.components[j] {
                Component::First => (atom.mean, atom.sd1),
                Component::Second => (atom.second_mean(), atom.sd2),
            };
            let w = 1.0 / (sd * sd);
            p00 += w;
            p01 += w * x;
            p11 += w * x * x;
            r0 += w * (y - m);
            r1 += w * x * (y - m);
        }
        let det = p00 * p11 - p01 * p01;
        let cov = [[p11 / det, -p01 / det], [-p01 / det, p00 / det]];
        let mean = [cov[0][0] * r0 + cov[0][1] * r1, cov[1][0] * r0 + cov[1][1] * r1];
        CdConditional { mean, cov }
    }

    pub fn update_cd(&mut self) -> Result<()> {
        let cond = self.cd_conditional();
        let var_d = cond.cov[1][1];
        if !(var_d > 0.0 && var_d.is_finite() && cond.mean[1].is_finite()) {
            return Err(Error::numeric("(c, d) conditional is degenerate"));
        }
        let sd_d = var_d.sqrt();
        let d = truncated_normal(cond.mean[1], sd_d, D_LOWER, D_UPPER, &mut self.rng)?;
        let c_mean = cond.mean[0] + cond.cov[0][1] / var_d * (d - cond.mean[1]);
        let c_var = (cond.cov[0][0] - cond.cov[0][1] * cond.cov[0][1] / var_d).max(0.0);
        let c = c_mean + c_var.sqrt() * standard_normal(&mut self.rng);
        if !c.is_finite() {
            return Err(Error::numeric("intercept draw is not finite"));
        }
        self.state.c = c;
        self.state.d = d;
        Ok(())
    }

    pub fn update_atoms(&mut self) {
        let h_max = self.state.num_components();
        let mut stats = vec![AtomStats::default(); h_max];
        for (j, (&y, &x)) in self.data.responses().iter().zip(self.data.regressors()).enumerate() {
            let r = self.state.residual(y, x);
            stats[self.state.allocations[j]].push(self.state.components[j], r);
        }
        let priors = self.priors;
        let base_var = self.state.base_variance;
        for (h, s) in stats.iter().enumerate() {
            let atom = self.state.atoms[h];
            let next = if s.n1 + s.n2 == 0 {
                draw_atom_from_prior(&priors, base_var, &mut self.rng)
            } else {
                update_occupied_atom(atom, s, &priors, base_var, h, &mut self.tuning, &mut self.rng)
            };
            self.state.atoms[h] = next;
        }
    }

    /// Log full conditional of stick `V_h` at `v` (up to a constant), given allocations.
    pub fn log_stick_conditional(&self, h: usize, v: f64) -> f64 {
        let st = &self.state;
        if !(v > 0.0 && v < 1.0) {
            return f64::NEG_INFINITY;
        }
        let mut lp = beta_ln_pdf(v, st.sticks.a, st.sticks.b);
        for (j, &s) in st.allocations.iter().enumerate() {
            let w = self.weights.row(j)[h];
            if s == h {
                lp += (v * w).ln();
            } else if s > h {
                lp += (1.0 - v * w).ln();
            }
        }
        lp
    }

    pub fn update_sticks_knots_bandwidth(&mut self) {
        let h_max = self.state.num_components();
        let lambda = self.data.frequencies();
        let (lo, hi) = self.state.sticks.support;

        // observations ordered by allocation, so {j : s_j ≥ h} is a suffix
        let mut order: Vec<usize> = (0..self.data.len()).collect();
        order.sort_by_key(|&j| self.state.allocations[j]);
        let mut start = vec![order.len(); h_max + 1];
        for (pos, &j) in order.iter().enumerate().rev() {
            start[self.state.allocations[j]] = pos;
        }
        for h in (0..h_max).rev() {
            start[h] = start[h].min(start[h + 1]);
        }

        for h in 0..h_max.saturating_sub(1) {
            let own = &order[start[h]..start[h + 1]];
            let later = &order[start[h + 1]..];

            // stick, logit scale
            let a = self.state.sticks.a;
            let b = self.state.sticks.b;
            let weights = &self.weights;
            let stick_target = |logit_v: f64| -> f64 {
                let v = logistic(logit_v);
                if !(v > 0.0 && v < 1.0) {
                    return f64::NEG_INFINITY;
                }
                let mut lp = beta_ln_pdf(v, a, b) + v.ln() + (1.0 - v).ln();
                lp += own.len() as f64 * v.ln();
                for &j in later {
                    lp += (1.0 - v * weights.row(j)[h]).ln();
                }
                lp
            };
            let cur = logit(self.state.sticks.sticks[h]);
            let cur_t = stick_target(cur);
            let (next, _) = self.tuning.metropolis("stick", h, cur, cur_t, stick_target, &mut self.rng);
            self.state.sticks.sticks[h] = logistic(next);

            // knot, restricted to Λ
            let v = self.state.sticks.sticks[h];
            let xi = self.state.sticks.bandwidth;
            let kind = self.state.sticks.kernel;
            let knot_target = |psi: f64| -> f64 {
                if !(psi >= lo && psi <= hi) {
                    return f64::NEG_INFINITY;
                }
                let mut lp = 0.0;
                for &j in own {
                    lp += kernel_weight(lambda[j], psi, xi, kind).ln();
                }
                for &j in later {
                    lp += (1.0 - v * kernel_weight(lambda[j], psi, xi, kind)).ln();
                }
                lp
            };
            let cur = self.state.sticks.knots[h];
            let cur_t = knot_target(cur);
            let (next, _) = self.tuning.metropolis("knot", h, cur, cur_t, knot_target, &mut self.rng);
            if next != cur {
                self.state.sticks.knots[h] = next;
                self.weights.refresh_column(&self.state.sticks, lambda, h);
            }
        }
        // the last knot does not enter the weights: refresh from its prior
        let last = h_max - 1;
        self.state.sticks.knots[last] = lo + (hi - lo) * self.rng.random::<f64>();
        self.weights.refresh_column(&self.state.sticks, lambda, last);

        self.update_bandwidth();
        self.update_hyperparameters();
    }

    fn update_bandwidth(&mut self) {
        let h_max = self.state.num_components();
        let lambda = self.data.frequencies();
        let st = &self.state;
        let shape = self.priors.bandwidth_shape;
        let scale = st.nu * st.nu / 2.0;
        let sticks = &st.sticks;
        let allocations = &st.allocations;
        let log_weights = |xi: f64| -> f64 {
            let mut lp = 0.0;
            for (j, &s) in allocations.iter().enumerate() {
                let l = lambda[j];
                for h in 0..s.min(h_max - 1) {
                    lp += (1.0 - sticks.sticks[h] * kernel_weight(l, sticks.knots[h], xi, sticks.kernel)).ln();
                }
                if s < h_max - 1 {
                    lp += kernel_weight(l, sticks.knots[s], xi, sticks.kernel).ln();
                }
            }
            lp
        };
        let target = |log_xi: f64| -> f64 {
            let xi = log_xi.exp();
            if !(xi > 0.0 && xi.is_finite()) {
                return f64::NEG_INFINITY;
            }
            inv_gamma_ln_pdf(xi, shape, scale) + log_xi + log_weights(xi)
        };
        let cur = sticks.bandwidth.ln();
        let cur_t = target(cur);
        let (next, _) = self.tuning.metropolis("bandwidth", 0, cur, cur_t, target, &mut self.rng);
        if next != cur {
            self.state.sticks.bandwidth = next.exp();
            self.weights = WeightCache::build(&self.state.sticks, lambda);
        }
    }

    fn update_hyperparameters(&mut self) {
        let priors = self.priors;
        let xi = self.state.sticks.bandwidth;

        // ν on the logit scale; ξ ~ IG(shape, ν²/2)
        let shape = priors.bandwidth_shape;
        let nu_target = |logit_nu: f64| -> f64 {
            let nu = logistic(logit_nu);
            if !(nu > 0.0 && nu < 1.0) {
                return f64::NEG_INFINITY;
            }
            inv_gamma_ln_pdf(xi, shape, nu * nu / 2.0) + nu.ln() + (1.0 - nu).ln()
        };
        let cur = logit(self.state.nu);
        let cur_t = nu_target(cur);
        let (next, _) = self.tuning.metropolis("nu", 0, cur, cur_t, nu_target, &mut self.rng);
        self.state.nu = logistic(next);

        // a and b, uniform on (0, max)
        let h_max = self.state.num_components();
        let free_sticks: Vec<f64> = self.state.sticks.sticks[..h_max - 1].to_vec();
        let max_ab = priors.stick_hyper_max;
        for idx in 0..2 {
            let other = if idx == 0 { self.state.sticks.b } else { self.state.sticks.a };
            let target = |value: f64| -> f64 {
                if !(value > 0.0 && value < max_ab) {
                    return f64::NEG_INFINITY;
                }
                let (a, b) = if idx == 0 { (value, other) } else { (other, value) };
                free_sticks.iter().map(|&v| beta_ln_pdf(v, a, b)).sum()
            };
            let cur = if idx == 0 { self.state.sticks.a } else { self.state.sticks.b };
            let cur_t = target(cur);
            let (next, _) = self.tuning.metropolis("stick_hyper", idx, cur, cur_t, target, &mut self.rng);
            if idx == 0 {
                self.state.sticks.a = next;
            } else {
                self.state.sticks.b = next;
            }
        }

        // σ²_θ | μ_1..μ_H is inverse gamma
        let ss: f64 = self.state.atoms.iter().map(|a| a.mean * a.mean).sum();
        self.state.base_variance = inv_gamma_draw(
            priors.base_variance_shape + h_max as f64 / 2.0,
            priors.base_variance_scale + ss / 2.0,
            &mut self.rng,
        );
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct AtomStats {
    n1: usize,
    s1: f64,
    ss1: f64,
    n2: usize,
    s2: f64,
    ss2: f64,
}

impl AtomStats {
    fn push(&mut self, comp: Component, r: f64) {
        match comp {
            Component::First => {
                self.n1 += 1;
                self.s1 += r;
                self.ss1 += r * r;
            }
            Component::Second => {
                self.n2 += 1;
                self.s2 += r;
                self.ss2 += r * r;
            }
        }
    }
}

/// Inverse-gamma conditional `(shape, scale)` of a component variance given
/// `n` residuals with sum `s` and sum of squares `ss` around mean `m`.
pub fn variance_conditional(priors: &Priors, n: usize, s: f64, ss: f64, m: f64) -> (f64, f64) {
    let sq = (ss - 2.0 * m * s + n as f64 * m * m).max(0.0);
    (priors.atom_variance_shape + n as f64 / 2.0, priors.atom_variance_scale + sq / 2.0)
}

fn update_occupied_atom<R: Rng + ?Sized>(
    atom: Atom,
    s: &AtomStats,
    priors: &Priors,
    base_var: f64,
    h: usize,
    tuning: &mut Tuning,
    rng: &mut R,
) -> Atom {
    let mut atom = atom;
    let (shape1, scale1) = variance_conditional(priors, s.n1, s.s1, s.ss1, atom.mean);
    atom.sd1 = inv_gamma_draw(shape1, scale1, rng).sqrt();
    let (shape2, scale2) = variance_conditional(priors, s.n2, s.s2, s.ss2, atom.second_mean());
    atom.sd2 = inv_gamma_draw(shape2, scale2, rng).sqrt();

    // μ: the second mean is −κμ, so the conditional stays Gaussian
    let kappa = atom.weight / (1.0 - atom.weight);
    let v1 = atom.sd1 * atom.sd1;
    let v2 = atom.sd2 * atom.sd2;
    let prec = s.n1 as f64 / v1 + kappa * kappa * s.n2 as f64 / v2 + 1.0 / base_var;
    let centre = (s.s1 / v1 - kappa * s.s2 / v2) / prec;
    atom.mean = centre + standard_normal(rng) / prec.sqrt();

    // π on the logit scale
    let (n1, n2) = (s.n1 as f64, s.n2 as f64);
    let mu = atom.mean;
    let weight_target = |logit_p: f64| -> f64 {
        let p = logistic(logit_p);
        if !(p > 0.0 && p < 1.0) {
            return f64::NEG_INFINITY;
        }
        let m2 = -mu * p / (1.0 - p);
        let sq2 = s.ss2 - 2.0 * m2 * s.s2 + n2 * m2 * m2;
        (n1 + 1.0) * p.ln() + (n2 + 1.0) * (1.0 - p).ln() - sq2 / (2.0 * v2)
    };
    let cur = logit(atom.weight);
    let cur_t = weight_target(cur);
    let (next, _) = tuning.metropolis("atom_weight", h, cur, cur_t, weight_target, rng);
    atom.weight = logistic(next);
    atom
}

fn draw_atom_from_prior<R: Rng + ?Sized>(priors: &Priors, base_var: f64, rng: &mut R) -> Atom {
    let weight = loop {
        let p: f64 = rng.random();
        if p > 0.0 {
            break p;
        }
    };
    Atom {
        weight,
        mean: base_var.sqrt() * standard_normal(rng),
        sd1: inv_gamma_draw(priors.atom_variance_shape, priors.atom_variance_scale, rng).sqrt(),
        sd2: inv_gamma_draw(priors.atom_variance_shape, priors.atom_variance_scale, rng).sqrt(),
    }
}

fn sample_allocations<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &RegressionSample,
    weights: &WeightCache,
    rng: &mut R,
) {
    let h_max = state.num_components();
    let consts: Vec<[f64; 6]> = state
        .atoms
        .iter()
        .map(|a| {
            let inv_root_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
            [
                a.weight * inv_root_2pi / a.sd1,
                a.mean,
                0.5 / (a.sd1 * a.sd1),
                (1.0 - a.weight) * inv_root_2pi / a.sd2,
                a.second_mean(),
                0.5 / (a.sd2 * a.sd2),
            ]
        })
        .collect();
    let mut probs = vec![0.0; h_max];
    for j in 0..data.len() {
        let u = state.residual(data.responses()[j], data.regressors()[j]);
        let w = weights.row(j);
        let mut remaining = 1.0;
        let mut total = 0.0;
        for h in 0..h_max {
            let p = if h + 1 < h_max {
                let v = state.sticks.sticks[h] * w[h];
                let p = v * remaining;
                remaining *= 1.0 - v;
                p
            } else {
                remaining
            };
            let k = &consts[h];
            let (z1, z2) = (u - k[1], u - k[4]);
            let dens = k[0] * (-z1 * z1 * k[2]).exp() + k[3] * (-z2 * z2 * k[5]).exp();
            probs[h] = p * dens;
            total += probs[h];
        }
        if !(total > 0.0 && total.is_finite()) {
            // far tails: fall back to log space
            let mut sw = vec![0.0; h_max];
            state.sticks.weights_into(data.frequencies()[j], &mut sw);
            let logs: Vec<f64> = sw.iter().zip(&state.atoms).map(|(w, a)| w.ln() + a.ln_pdf(u)).collect();
            let norm = log_sum_exp(&logs);
            total = 0.0;
            for h in 0..h_max {
                probs[h] = (logs[h] - norm).exp();
                total += probs[h];
            }
        }
        let mut target = rng.random::<f64>() * total;
        let mut chosen = h_max - 1;
        for (h, &p) in probs.iter().enumerate() {
            if target < p {
                chosen = h;
                break;
            }
            target -= p;
        }
        // guard against picking a zero-probability tail through rounding
        if probs[chosen] <= 0.0 {
            chosen = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(h, _)| h)
                .unwrap_or(0);
        }
        state.allocations[j] = chosen;
        let (l1, l2) = state.atoms[chosen].component_ln_densities(u);
        let p_first = 1.0 / (1.0 + (l2 - l1).exp());
        state.components[j] = if rng.random::<f64>() < p_first { Component::First } else { Component::Second };
    }
}

/// Normal draw truncated to `(lo, hi)`: inverse CDF while the interval has
/// usable mass, exponential-proposal rejection in the far tail.
pub fn truncated_normal<R: Rng + ?Sized>(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
    // work in the lower tail where the CDF keeps relative precision
    let flip = a > 0.0;
    let (a, b) = if flip { (-b, -a) } else { (a, b) };
    let (pa, pb) = (std_normal_cdf(a), std_normal_cdf(b));
    let unflip = |z: f64| if flip { -z } else { z };
    for _ in 0..MAX_REJECTION_TRIES {
        let z = if pb - pa > 1e-280 {
            let u = pa + (pb - pa) * rng.random::<f64>();
            std_normal_quantile(u).clamp(a, b)
        } else {
            // the whole interval lies far below zero: sample −z above −b
            let tail = -b;
            let rate = 0.5 * (tail + (tail * tail + 4.0).sqrt());
            let e: f64 = -(1.0 - rng.random::<f64>()).ln() / rate;
            let t = tail + e;
            if rng.random::<f64>() >= (-0.5 * (t - rate) * (t - rate)).exp() {
                continue;
            }
            -t
        };
        let x = mean + sd * unflip(z);
        if x > lo && x < hi {
            return Ok(x);
        }
    }
    Err(Error::numeric(format!(
        "truncated normal draw stalled: N({mean}, {sd}²) on ({lo}, {hi})"
    )))
}

#[inline]
pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

pub(crate) fn inv_gamma_draw<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    // tiny shapes can underflow the gamma draw
    scale / g.max(f64::MIN_POSITIVE)
}

#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Runs a chain from the least-squares start and keeps thinned post-burn-in draws.
pub fn run_chain(data: &RegressionSample, config: &ChainConfig) -> Result<PosteriorDraws> {
    let state = init_state(data, config)?;
    let mut sampler = Sampler::new(data, config, state)?;
    let kept = config.kept_draws();
    let mut draws = PosteriorDraws {
        d: Vec::with_capacity(kept),
        c: Vec::with_capacity(kept),
        auxiliary: BTreeMap::new(),
        states: Vec::new(),
        acceptance: BTreeMap::new(),
        seed: config.seed,
    };
    let mut xi = Vec::with_capacity(kept);
    let mut occupied = Vec::with_capacity(kept);
    for it in 0..config.iterations {
        sampler.set_adapting(it, config.adapt && it < config.burn_in);
        sampler
            .sweep()
            .map_err(|e| Error::Chain { iteration: it, source: Box::new(e) })?;
        if config.is_kept(it) {
            let st = sampler.state();
            draws.d.push(st.d);
            draws.c.push(st.c);
            xi.push(st.sticks.bandwidth);
            let mut used = vec![false; st.num_components()];
            for &s in &st.allocations {
                used[s] = true;
            }
            occupied.push(used.iter().filter(|&&u| u).count() as f64);
            if config.keep_states {
                draws.states.push(st.clone());
            }
        }
    }
    draws.auxiliary.insert("xi".into(), xi);
    draws.auxiliary.insert("occupied_components".into(), occupied);
    draws.acceptance = sampler.tuning().acceptance_rates();
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_sample(m: usize, c: f64, d: f64) -> RegressionSample {
        let n = 2 * m;
        let lambda: Vec<f64> = (1..=m).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64).collect();
        let x: Vec<f64> = lambda.iter().map(|&l| crate::spectral::regressor(l).unwrap()).collect();
        let y: Vec<f64> = x.iter().map(|v| c + d * v).collect();
        RegressionSample::from_columns(y, x, lambda, n).unwrap()
    }

    #[test]
    fn init_recovers_noiseless_line() {
        let data = linear_sample(200, 1.0, 0.3);
        let cfg = ChainConfig { seed: 9, ..Default::default() };
        let s = init_state(&data, &cfg).unwrap();
        assert!((s.c - 1.0).abs() < 1e-8 && (s.d - 0.3).abs() < 1e-8);
        assert_eq!(s, init_state(&data, &cfg).unwrap());
    }

    #[test]
    fn init_clamps_out_of_range_slope() {
        let data = linear_sample(100, 0.0, 0.6);
        let s = init_state(&data, &ChainConfig::default()).unwrap();
        assert!((s.d - (0.5 - D_CLAMP_MARGIN)).abs() < 1e-12);
        let data = linear_sample(100, 0.0, -1.4);
        let s = init_state(&data, &ChainConfig::default()).unwrap();
        assert!((s.d - (-1.0 + D_CLAMP_MARGIN)).abs() < 1e-12);
    }

    #[test]
    fn init_rejects_constant_regressor() {
        let data = RegressionSample::from_columns(vec![1.0, 2.0, 3.0], vec![0.5; 3], vec![0.1, 0.2, 0.3], 100).unwrap();
        assert!(matches!(init_state(&data, &ChainConfig::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn config_validation() {
        let bad = ChainConfig { burn_in: 10, iterations: 10, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ChainConfig { thin: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let cfg = ChainConfig { iterations: 103, burn_in: 10, thin: 5, ..Default::default() };
        assert_eq!(cfg.kept_draws(), 18);
        assert_eq!((0..103).filter(|&i| cfg.is_kept(i)).count(), 18);
    }

    #[test]
    fn truncated_normal_respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(m, s) in &[(0.0, 1.0), (3.0, 0.1), (-5.0, 0.01), (0.49, 1e-4), (40.0, 1.0)] {
            for _ in 0..200 {
                let x = truncated_normal(m, s, -1.0, 0.5, &mut rng).unwrap();
                assert!(x > -1.0 && x < 0.5);
            }
        }
    }

    #[test]
    fn ess_of_constant_and_iid() {
        assert_eq!(effective_sample_size(&[0.3; 200]), 200.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..10_000).map(|_| standard_normal(&mut rng)).collect();
        let ess = effective_sample_size(&xs);
        assert!((ess - 10_000.0).abs() < 1_000.0, "ess {ess}");
        // AR(1) with coefficient 0.9 has τ = 19
        let mut ar = vec![0.0; 20_000];
        for t in 1..ar.len() {
            ar[t] = 0.9 * ar[t - 1] + standard_normal(&mut rng);
        }
        let ess = effective_sample_size(&ar);
        assert!(ess > 20_000.0 / 30.0 && ess < 20_000.0 / 12.0, "ess {ess}");
    }

    #[test]
    fn summary_of_constant_draws() {
        let s = summarize_values(&[0.3; 150]).unwrap();
        assert!((s.mean - 0.3).abs() < 1e-12);
        assert_eq!((s.median, s.map), (0.3, 0.3));
        assert_eq!(s.interval, (0.3, 0.3));
        assert!(summarize_values(&[0.3; 99]).is_err());
    }

    #[test]
    fn summary_interval_is_empirical_quantiles() {
        let xs: Vec<f64> = (0..=1000).rev().map(|i| i as f64 / 1000.0).collect();
        let s = summarize_values(&xs).unwrap();
        assert_eq!(s.interval, (0.025, 0.975));
        assert!(s.interval.0 <= s.median && s.median <= s.interval.1);
    }
}
