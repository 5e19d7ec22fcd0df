//! Semiparametric error model for the log-periodogram regression.
//!
//! Residuals `u = y − c − d·X(λ)` follow a frequency-dependent mixture
//!
//! ```text
//! f(u | λ) = Σ_h p_h(λ) b(u; π_h, μ_h, σ_1h, σ_2h)
//! b(u; π, μ, σ1, σ2) = π N(u; μ, σ1²) + (1 − π) N(u; −μπ/(1 − π), σ2²)
//! ```
//!
//! whose kernel `b` has mean zero for every atom. The weights come from a
//! kernel stick-breaking construction truncated at `H` components:
//! `p_h(λ) = V_h w(λ, ψ_h) Π_{l<h} (1 − V_l w(λ, ψ_l))` for `h < H`, and the last
//! component takes the remaining stick so that the weights sum to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{beta_ln_pdf, inv_gamma_ln_pdf, normal_ln_pdf};

/// Zero-mean two-component Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// Weight of the first component (`π`).
    pub weight: f64,
    /// Mean of the first component (`μ`).
    pub mean: f64,
    pub sd1: f64,
    pub sd2: f64,
}

impl Atom {
    pub fn new(weight: f64, mean: f64, sd1: f64, sd2: f64) -> Result<Self> {
        let atom = Self { weight, mean, sd1, sd2 };
        if !atom.is_valid() {
            return Err(Error::invalid(format!("invalid atom {atom:?}")));
        }
        Ok(atom)
    }

    pub fn is_valid(&self) -> bool {
        self.weight > 0.0
            && self.weight < 1.0
            && self.mean.is_finite()
            && self.sd1 > 0.0
            && self.sd2 > 0.0
            && self.sd1.is_finite()
            && self.sd2.is_finite()
    }

    /// Mean of the second component, `−μπ/(1 − π)`.
    #[inline]
    pub fn second_mean(&self) -> f64 {
        -self.mean * self.weight / (1.0 - self.weight)
    }

    /// Log densities of the two weighted components, `log π N(u; μ, σ1²)` and
    /// `log (1−π) N(u; μ₂, σ2²)`.
    #[inline]
    pub fn component_ln_densities(&self, u: f64) -> (f64, f64) {
        (
            self.weight.ln() + normal_ln_pdf(u, self.mean, self.sd1),
            (1.0 - self.weight).ln() + normal_ln_pdf(u, self.second_mean(), self.sd2),
        )
    }

    pub fn ln_pdf(&self, u: f64) -> f64 {
        let (a, b) = self.component_ln_densities(u);
        let hi = a.max(b);
        hi + (-(a - b).abs()).exp().ln_1p()
    }
}

pub fn kernel_pdf(u: f64, atom: &Atom) -> f64 {
    atom.ln_pdf(u).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `exp(−(λ − ψ)²/ξ²)`
    SquaredExponential,
    /// `exp(−|λ − ψ|/ξ)`
    #[default]
    DoubleExponential,
}

#[inline]
pub fn kernel_weight(lambda: f64, knot: f64, bandwidth: f64, kind: KernelKind) -> f64 {
    let dist = (lambda - knot).abs() / bandwidth;
    match kind {
        KernelKind::SquaredExponential => (-dist * dist).exp(),
        KernelKind::DoubleExponential => (-dist).exp(),
    }
}

/// Sticks, knots and kernel bandwidth of the kernel stick-breaking weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickState {
    /// `V_1..V_H`; the last entry is pinned to one by truncation.
    pub sticks: Vec<f64>,
    /// Knots `ψ_h` in the support `Λ`.
    pub knots: Vec<f64>,
    /// Kernel bandwidth `ξ`.
    pub bandwidth: f64,
    pub kernel: KernelKind,
    /// Shared beta hyperparameters of the sticks.
    pub a: f64,
    pub b: f64,
    /// Bounds of `Λ = [2π/n, π]`.
    pub support: (f64, f64),
}

impl StickState {
    pub fn len(&self) -> usize {
        self.sticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sticks.is_empty()
    }

    #[inline]
    pub fn kernel_at(&self, lambda: f64, h: usize) -> f64 {
        kernel_weight(lambda, self.knots[h], self.bandwidth, self.kernel)
    }

    /// Writes `p_1(λ), …, p_H(λ)` into `out`.
    pub fn weights_into(&self, lambda: f64, out: &mut [f64]) {
        let h_max = self.len();
        let mut remaining = 1.0;
        for h in 0..h_max - 1 {
            let v = self.sticks[h] * self.kernel_at(lambda, h);
            out[h] = v * remaining;
            remaining *= 1.0 - v;
        }
        out[h_max - 1] = remaining;
    }
}

pub fn mixture_weights(sticks: &StickState, lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; sticks.len()];
    sticks.weights_into(lambda, &mut out);
    out
}

/// Which of the two kernel components an observation is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    First,
    Second,
}

/// Full parameter state of the semiparametric model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    /// Intercept `c`.
    pub c: f64,
    /// Memory parameter `d ∈ (−1, 1/2)`.
    pub d: f64,
    pub atoms: Vec<Atom>,
    pub sticks: StickState,
    /// Zero-based component index of each observation.
    pub allocations: Vec<usize>,
    pub components: Vec<Component>,
    /// Hyperparameter `ν` of the bandwidth prior.
    pub nu: f64,
    /// Variance `σ²_θ` of the base distribution of atom means.
    pub base_variance: f64,
}

impl ModelState {
    pub fn num_components(&self) -> usize {
        self.atoms.len()
    }

    #[inline]
    pub fn residual(&self, y: f64, x: f64) -> f64 {
        y - self.c - self.d * x
    }
}

/// Prior hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Priors {
    /// Variance of the normal prior on `c`.
    pub c_variance: f64,
    /// Upper bound of the uniform priors on the beta hyperparameters `a`, `b`.
    pub stick_hyper_max: f64,
    /// Inverse-gamma shape and scale of `σ²_θ`.
    pub base_variance_shape: f64,
    pub base_variance_scale: f64,
    /// Inverse-gamma shape and scale of the atom variances `σ²_1h`, `σ²_2h`.
    pub atom_variance_shape: f64,
    pub atom_variance_scale: f64,
    /// Inverse-gamma shape of `ξ`; its scale is `ν²/2`.
    pub bandwidth_shape: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self {
            c_variance: 1_000.0,
            stick_hyper_max: 10.0,
            base_variance_shape: 0.01,
            base_variance_scale: 0.01,
            atom_variance_shape: 2.0,
            atom_variance_scale: 1.0,
            bandwidth_shape: 1.5,
        }
    }
}

pub const D_LOWER: f64 = -1.0;
pub const D_UPPER: f64 = 0.5;

/// `Σ_j log Σ_h p_h(λ_j) b(y_j − c − d x_j; atom_h)`.
pub fn loglik(y: &[f64], x: &[f64], lambda: &[f64], state: &ModelState) -> Result<f64> {
    if y.len() != x.len() || y.len() != lambda.len() {
        return Err(Error::invalid("y, x and lambda must have equal length"));
    }
    let h_max = state.num_components();
    let mut weights = vec![0.0; h_max];
    let mut terms = vec![0.0; h_max];
    let mut total = 0.0;
    for ((&yj, &xj), &lj) in y.iter().zip(x).zip(lambda) {
        let u = state.residual(yj, xj);
        state.sticks.weights_into(lj, &mut weights);
        for h in 0..h_max {
            terms[h] = weights[h].ln() + state.atoms[h].ln_pdf(u);
        }
        total += crate::stats::log_sum_exp(&terms);
    }
    if !total.is_finite() {
        return Err(Error::numeric(format!("log-likelihood is not finite ({total})")));
    }
    Ok(total)
}

/// Sum of all log prior densities; `−∞` outside the supports.
///
/// Atom weights `π_h` are uniform on (0, 1); atom variances carry
/// inverse-gamma priors on `σ²`.
pub fn log_prior(state: &ModelState, priors: &Priors) -> f64 {
    let ninf = f64::NEG_INFINITY;
    if !(state.d > D_LOWER && state.d < D_UPPER) {
        return ninf;
    }
    let sticks = &state.sticks;
    let (lo, hi) = sticks.support;
    let max_ab = priors.stick_hyper_max;
    if !(sticks.a > 0.0 && sticks.a < max_ab && sticks.b > 0.0 && sticks.b < max_ab) {
        return ninf;
    }
    if !(state.nu > 0.0 && state.nu < 1.0) || !(sticks.bandwidth > 0.0) || !(state.base_variance > 0.0) {
        return ninf;
    }
    let mut lp = normal_ln_pdf(state.c, 0.0, priors.c_variance.sqrt());
    lp += -(D_UPPER - D_LOWER).ln();
    lp += -2.0 * max_ab.ln();
    lp += inv_gamma_ln_pdf(
        state.base_variance,
        priors.base_variance_shape,
        priors.base_variance_scale,
    );
    lp += inv_gamma_ln_pdf(sticks.bandwidth, priors.bandwidth_shape, state.nu * state.nu / 2.0);
    let h_max = sticks.len();
    for h in 0..h_max {
        let psi = sticks.knots[h];
        if !(psi >= lo && psi <= hi) {
            return ninf;
        }
        lp -= (hi - lo).ln();
        if h + 1 < h_max {
            lp += beta_ln_pdf(sticks.sticks[h], sticks.a, sticks.b);
        }
        let atom = &state.atoms[h];
        if !atom.is_valid() {
            return ninf;
        }
        lp += normal_ln_pdf(atom.mean, 0.0, state.base_variance.sqrt());
        for sd in [atom.sd1, atom.sd2] {
            lp += inv_gamma_ln_pdf(sd * sd, priors.atom_variance_shape, priors.atom_variance_scale);
        }
    }
    if lp.is_nan() {
        ninf
    } else {
        lp
    }
}
