//! Replicated simulation study over ARFIMA scenarios.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arfima::{simulate, ArfimaParams};
use crate::error::{Error, Result};
use crate::harness::estimate::{estimate, EstimateSettings, Method};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub d: f64,
    pub phi: f64,
    pub theta: f64,
}

impl Scenario {
    pub fn params(&self) -> Result<ArfimaParams> {
        ArfimaParams::new(self.d, self.phi, self.theta, 1.0)
    }
}

/// The 50-scenario grid: `d ∈ {0.05, 0.10, …, 0.45, 0.49}` crossed with
/// `(φ, θ) ∈ {(0, 0), (0.8, 0.1), (0.5, 0.1), (0.1, 0.5), (0.1, 0.8)}`.
pub fn default_scenarios() -> Vec<Scenario> {
    let ds = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.49];
    let shapes = [(0.0, 0.0), (0.8, 0.1), (0.5, 0.1), (0.1, 0.5), (0.1, 0.8)];
    shapes
        .iter()
        .flat_map(|&(phi, theta)| ds.iter().map(move |&d| Scenario { d, phi, theta }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub scenarios: Vec<Scenario>,
    pub replicates: usize,
    pub n: usize,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    pub workers: usize,
    pub estimation: EstimateSettings,
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() || self.methods.is_empty() {
            return Err(Error::invalid("a study needs at least one scenario and one method"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        if self.n < 64 {
            return Err(Error::invalid(format!("series length {} is below 64", self.n)));
        }
        for s in &self.scenarios {
            s.params()?;
        }
        self.estimation.chain.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub scenario: usize,
    pub replicate: usize,
    pub method: Method,
    pub seed: u64,
    pub estimate: Option<f64>,
    pub interval: Option<(f64, f64)>,
    pub error: Option<String>,
}

/// Summary of one scenario × method cell over its successful replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scenario: Scenario,
    pub method: Method,
    pub mean_estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub coverage: f64,
    pub n_replicates: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub aggregates: Vec<Aggregate>,
    pub records: Vec<ReplicateRecord>,
    pub n: usize,
    pub base_seed: u64,
    pub runtime_seconds: f64,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(base) ⊕ scenario) ⊕ replicate)`.
pub fn replicate_seed(base: u64, scenario: usize, replicate: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ scenario as u64) ^ replicate as u64)
}

fn method_seed(seed: u64, method: Method) -> u64 {
    splitmix64(seed ^ (method as u64 + 1).wrapping_mul(0x2545_f491_4f6c_dd1d))
}

fn run_replicate(spec: &StudySpec, scenario: usize, replicate: usize) -> Vec<ReplicateRecord> {
    let seed = replicate_seed(spec.base_seed, scenario, replicate);
    let series = spec.scenarios[scenario].params().and_then(|p| simulate(&p, spec.n, seed));
    spec.methods
        .iter()
        .map(|&method| {
            let result = series
                .as_ref()
                .map_err(|e| Error::invalid(e.to_string()))
                .and_then(|s| estimate(s, method, &spec.estimation, method_seed(seed, method)));
            let (estimate, interval, error) = match result {
                Ok(e) => (Some(e.point), Some(e.interval), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            ReplicateRecord { scenario, replicate, method, seed, estimate, interval, error }
        })
        .collect()
}

/// Runs every scenario × replicate × method. Replicates run on `workers`
/// threads; results are ordered by (scenario, replicate, method) regardless of
/// completion order. Fails when more than 10% of the records failed.
pub fn run_study(spec: &StudySpec) -> Result<StudyResult> {
    spec.validate()?;
    let start = Instant::now();
    let tasks: Vec<(usize, usize)> = (0..spec.scenarios.len())
        .flat_map(|s| (0..spec.replicates).map(move |r| (s, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let records: Vec<ReplicateRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(s, r)| run_replicate(spec, s, r))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed * 10 > records.len() {
        let first = records.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(Error::numeric(format!(
            "{failed} of {} replicate fits failed; first error: {first}",
            records.len()
        )));
    }
    Ok(StudyResult {
        aggregates: aggregate(&spec.scenarios, &spec.methods, &records),
        records,
        n: spec.n,
        base_seed: spec.base_seed,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Per scenario × method means and coverage of the true `d`.
pub fn aggregate(scenarios: &[Scenario], methods: &[Method], records: &[ReplicateRecord]) -> Vec<Aggregate> {
    let mut out = Vec::with_capacity(scenarios.len() * methods.len());
    for (i, scenario) in scenarios.iter().enumerate() {
        for &method in methods {
            let cell: Vec<&ReplicateRecord> =
                records.iter().filter(|r| r.scenario == i && r.method == method).collect();
            let ok: Vec<(f64, (f64, f64))> =
                cell.iter().filter_map(|r| Some((r.estimate?, r.interval?))).collect();
            let k = ok.len();
            let avg = |f: &dyn Fn(&(f64, (f64, f64))) -> f64| {
                if k == 0 { f64::NAN } else { ok.iter().map(f).sum::<f64>() / k as f64 }
            };
            let covered = ok.iter().filter(|(_, (lo, hi))| *lo <= scenario.d && scenario.d <= *hi).count();
            out.push(Aggregate {
                scenario: *scenario,
                method,
                mean_estimate: avg(&|e| e.0),
                ci_lo: avg(&|e| e.1 .0),
                ci_hi: avg(&|e| e.1 .1),
                coverage: if k == 0 { f64::NAN } else { covered as f64 / k as f64 },
                n_replicates: k,
                failures: cell.len() - k,
            });
        }
    }
    out
}
