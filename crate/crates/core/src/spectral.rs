//! Fourier frequencies, the raw periodogram and the pooled log-periodogram
//! regression design.
//!
//! The periodogram is computed with an FFT but agrees with the direct
//! trigonometric double sum
//!
//! ```text
//! I(λ_j) = (1/2πn) [ (Σ x_t cos λ_j t)² + (Σ x_t sin λ_j t)² ],  λ_j = 2πj/n,
//! ```
//!
//! for `j = 1..=⌊n/2⌋`. No mean is removed: at the harmonic frequencies the
//! ordinates are already invariant to additive constants.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SERIES_LEN: usize = 4;

/// Real-valued, equally spaced observations. Holds at least four finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_SERIES_LEN {
            return Err(Error::invalid(format!(
                "series has {} values, at least {MIN_SERIES_LEN} required",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("value at index {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Periodogram ordinates at `λ_j = 2πj/n`, `j = 1..=⌊n/2⌋`.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    frequencies: Vec<f64>,
    ordinates: Vec<f64>,
    n: usize,
}

impl Periodogram {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    /// Length of the originating series.
    pub fn series_len(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }
}

/// Which regressor the log-periodogram is regressed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressorKind {
    /// `-log(4 sin²(λ/2))`
    #[default]
    SinSquared,
    /// `-2 log λ`, the small-frequency equivalent.
    LogFrequency,
}

/// Pooling, trimming and bandwidth of a log-periodogram regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionDesign {
    /// Number of adjacent ordinates summed per response (`K`).
    pub pooling: usize,
    /// Number of low frequencies skipped (`ℓ`).
    pub trim: usize,
    /// Largest frequency index used (`m`).
    pub bandwidth: usize,
    pub regressor: RegressorKind,
}

impl RegressionDesign {
    /// Every ordinate `j = 1..=⌊n/2⌋`, unpooled.
    pub fn full_band(n: usize) -> Self {
        Self {
            pooling: 1,
            trim: 0,
            bandwidth: n / 2,
            regressor: RegressorKind::SinSquared,
        }
    }
}

/// Responses and regressors of the pooled log-periodogram regression
/// `y_j = c + d X_j + u_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    responses: Vec<f64>,
    regressors: Vec<f64>,
    frequencies: Vec<f64>,
    indices: Vec<usize>,
    design: RegressionDesign,
    series_len: usize,
}

impl RegressionSample {
    /// Builds a sample from explicit columns. Frequencies must lie in `(0, π]`
    /// and `series_len` fixes the knot support `[2π/n, π]`.
    pub fn from_columns(
        responses: Vec<f64>,
        regressors: Vec<f64>,
        frequencies: Vec<f64>,
        series_len: usize,
    ) -> Result<Self> {
        let m = responses.len();
        if m == 0 || regressors.len() != m || frequencies.len() != m {
            return Err(Error::invalid("columns must be non-empty and of equal length"));
        }
        if responses.iter().chain(&regressors).any(|v| !v.is_finite()) {
            return Err(Error::invalid("responses and regressors must be finite"));
        }
        if frequencies.iter().any(|&l| !(l > 0.0 && l <= PI)) {
            return Err(Error::domain("frequencies must lie in (0, π]"));
        }
        Ok(Self {
            responses,
            regressors,
            frequencies,
            indices: (1..=m).collect(),
            design: RegressionDesign {
                pooling: 1,
                trim: 0,
                bandwidth: m,
                regressor: RegressorKind::SinSquared,
            },
            series_len: series_len.max(2),
        })
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn regressors(&self) -> &[f64] {
        &self.regressors
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Frequency indices `j` of the grid `ℓ+K, ℓ+2K, …, ≤ m`.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn design(&self) -> &RegressionDesign {
        &self.design
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// The set `Λ = [2π/n, π]` where kernel knots live.
    pub fn frequency_support(&self) -> (f64, f64) {
        (2.0 * PI / self.series_len as f64, PI)
    }
}

pub fn fourier_frequencies(n: usize) -> Result<Vec<f64>> {
    if n < MIN_SERIES_LEN {
        return Err(Error::invalid(format!("n = {n} is below the minimum of {MIN_SERIES_LEN}")));
    }
    let step = 2.0 * PI / n as f64;
    // rounding can push j = n/2 a hair past π
    Ok((1..=n / 2).map(|j| (step * j as f64).min(PI)).collect())
}

pub fn periodogram(series: &TimeSeries) -> Periodogram {
    let x = series.values();
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let norm = 1.0 / (2.0 * PI * n as f64);
    let half = n / 2;
    let ordinates = buf[1..=half].iter().map(|z| z.norm_sqr() * norm).collect();
    Periodogram {
        frequencies: fourier_frequencies(n).expect("series length already validated"),
        ordinates,
        n,
    }
}

/// `-log(4 sin²(λ/2))` for `λ ∈ (0, π]`.
pub fn regressor(lambda: f64) -> Result<f64> {
    regressor_of_kind(lambda, RegressorKind::SinSquared)
}

pub fn regressor_of_kind(lambda: f64, kind: RegressorKind) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= PI) {
        return Err(Error::domain(format!("frequency {lambda} outside (0, π]")));
    }
    Ok(match kind {
        RegressorKind::SinSquared => {
            let s = (lambda / 2.0).sin();
            -(4.0 * s * s).ln()
        }
        RegressorKind::LogFrequency => -2.0 * lambda.ln(),
    })
}

/// Robinson's pooled response `y_j = log Σ_{k=1}^{K} I(λ_{j+k-K})` on the grid
/// `j = ℓ+K, ℓ+2K, …, ≤ m`, paired with the regressor at `λ_j`.
pub fn pooled_log_periodogram(pg: &Periodogram, design: RegressionDesign) -> Result<RegressionSample> {
    let RegressionDesign { pooling: k, trim, bandwidth: m, regressor: kind } = design;
    if k == 0 {
        return Err(Error::InvalidBandwidth("pooling K must be positive".into()));
    }
    if trim + k > m || m > pg.len() {
        return Err(Error::InvalidBandwidth(format!(
            "need ℓ + K ≤ m ≤ ⌊n/2⌋, got ℓ = {trim}, K = {k}, m = {m}, ⌊n/2⌋ = {}",
            pg.len()
        )));
    }
    let ords = pg.ordinates();
    let freqs = pg.frequencies();
    let mut responses = Vec::new();
    let mut regressors = Vec::new();
    let mut frequencies = Vec::new();
    let mut indices = Vec::new();
    let mut j = trim + k;
    while j <= m {
        // ordinates are stored from j = 1, so index j lives at j - 1
        let pooled: f64 = ords[j - k..j].iter().sum();
        if pooled <= 0.0 {
            return Err(Error::Degenerate(format!(
                "pooled periodogram sum is zero at frequency index {j}"
            )));
        }
        let lambda = freqs[j - 1];
        responses.push(pooled.ln());
        regressors.push(regressor_of_kind(lambda, kind)?);
        frequencies.push(lambda);
        indices.push(j);
        j += k;
    }
    Ok(RegressionSample {
        responses,
        regressors,
        frequencies,
        indices,
        design,
        series_len: pg.series_len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (1..=n / 2)
            .map(|j| {
                let l = 2.0 * PI * j as f64 / n as f64;
                let (mut c, mut s) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let tt = (t + 1) as f64;
                    c += v * (l * tt).cos();
                    s += v * (l * tt).sin();
                }
                (c * c + s * s) / (2.0 * PI * n as f64)
            })
            .collect()
    }

    #[test]
    fn frequencies_small_cases() {
        let f = fourier_frequencies(8).unwrap();
        let want = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI];
        for (a, b) in f.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(fourier_frequencies(4).unwrap(), vec![PI / 2.0, PI]);
        let big = fourier_frequencies(10_000).unwrap();
        assert_eq!(big.len(), 5_000);
        assert!((big[0] - 2.0 * PI / 10_000.0).abs() < 1e-18);
        assert!(*big.last().unwrap() <= PI);
        assert!(matches!(fourier_frequencies(3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn constant_series_has_zero_ordinates() {
        for n in [4, 9, 64, 101] {
            let pg = periodogram(&TimeSeries::new(vec![7.0; n]).unwrap());
            assert!(pg.ordinates().iter().all(|&v| v.abs() < 1e-20 * 49.0 * n as f64 + 1e-24));
        }
    }

    #[test]
    fn cosine_concentrates_at_first_frequency() {
        let n = 64;
        let l1 = 2.0 * PI / n as f64;
        let x: Vec<f64> = (1..=n).map(|t| (l1 * t as f64).cos()).collect();
        let pg = periodogram(&TimeSeries::new(x.clone()).unwrap());
        let oracle = direct(&x);
        // direct sum: (n/2)² / (2πn) = n / 8π
        assert!((oracle[0] - n as f64 / (8.0 * PI)).abs() < 1e-10);
        assert!((pg.ordinates()[0] - oracle[0]).abs() < 1e-10 * oracle[0]);
        assert!(pg.ordinates()[1..].iter().all(|&v| v < 1e-20));
    }

    #[test]
    fn fft_matches_direct_sum() {
        let x: Vec<f64> = (0..37).map(|t| ((t * t) as f64 * 0.37).sin() + 0.1 * t as f64).collect();
        let pg = periodogram(&TimeSeries::new(x.clone()).unwrap());
        let oracle = direct(&x);
        let scale = oracle.iter().cloned().fold(0.0, f64::max);
        for (a, b) in pg.ordinates().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn regressor_values() {
        assert!((regressor(PI).unwrap() + 4f64.ln()).abs() < 1e-12);
        assert!((regressor(0.01).unwrap() - 9.210_34).abs() < 1e-4);
        assert!((regressor(0.01).unwrap() - regressor_of_kind(0.01, RegressorKind::LogFrequency).unwrap()).abs() < 1e-4);
        assert!(regressor(PI / 3.0).unwrap().abs() < 1e-12);
        assert!(regressor(0.0).is_err());
        assert!(regressor(PI + 1e-9).is_err());
        assert!(regressor(-1.0).is_err());
    }

    fn pg_from(ordinates: Vec<f64>) -> Periodogram {
        let n = 2 * ordinates.len();
        Periodogram { frequencies: fourier_frequencies(n).unwrap(), ordinates, n }
    }

    #[test]
    fn pooling_grid_and_values() {
        let pg = pg_from((1..=12).map(|v| v as f64).collect());
        let d = RegressionDesign { pooling: 3, trim: 1, bandwidth: 10, regressor: RegressorKind::SinSquared };
        let s = pooled_log_periodogram(&pg, d).unwrap();
        assert_eq!(s.indices(), &[4, 7, 10]);
        // j = 4 pools ordinates 2, 3, 4
        assert!((s.responses()[0] - 9f64.ln()).abs() < 1e-15);
        assert!((s.regressors()[0] - regressor(pg.frequencies()[3]).unwrap()).abs() < 1e-15);

        let ones = pg_from(vec![1.0; 10]);
        let d = RegressionDesign { pooling: 2, trim: 0, bandwidth: 10, regressor: RegressorKind::SinSquared };
        let s = pooled_log_periodogram(&ones, d).unwrap();
        assert!(s.responses().iter().all(|&y| (y - 2f64.ln()).abs() < 1e-15));

        let d = RegressionDesign { pooling: 1, trim: 0, bandwidth: 6, regressor: RegressorKind::SinSquared };
        let s = pooled_log_periodogram(&pg, d).unwrap();
        assert_eq!(s.indices(), &[1, 2, 3, 4, 5, 6]);
        for (y, o) in s.responses().iter().zip(pg.ordinates()) {
            assert_eq!(*y, o.ln());
        }
    }

    #[test]
    fn pooling_errors() {
        let pg = pg_from(vec![1.0, 0.0, 2.0, 3.0]);
        let d = RegressionDesign { pooling: 1, trim: 0, bandwidth: 4, regressor: RegressorKind::SinSquared };
        assert!(matches!(pooled_log_periodogram(&pg, d), Err(Error::Degenerate(_))));
        let d = RegressionDesign { pooling: 3, trim: 2, bandwidth: 4, regressor: RegressorKind::SinSquared };
        assert!(matches!(pooled_log_periodogram(&pg, d), Err(Error::InvalidBandwidth(_))));
        let d = RegressionDesign { pooling: 1, trim: 0, bandwidth: 5, regressor: RegressorKind::SinSquared };
        assert!(matches!(pooled_log_periodogram(&pg, d), Err(Error::InvalidBandwidth(_))));
    }

    #[test]
    fn last_frequency_never_exceeds_pi() {
        for n in 4..2_000 {
            let f = fourier_frequencies(n).unwrap();
            assert!(*f.last().unwrap() <= PI);
        }
        assert_eq!(*fourier_frequencies(200).unwrap().last().unwrap(), PI);
    }

    #[test]
    fn series_validation() {
        assert!(TimeSeries::new(vec![1.0, 2.0, 3.0]).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN, 3.0, 4.0]).is_err());
        assert_eq!(TimeSeries::new(vec![1.0; 4]).unwrap().len(), 4);
    }
}
