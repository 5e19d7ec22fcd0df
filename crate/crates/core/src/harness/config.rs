//! TOML configuration. Every section and key is optional; missing values take
//! the defaults printed by `longmem --print-config`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::ParametricModel;
use crate::error::{Error, Result};
use crate::harness::estimate::{EstimateSettings, Method};
use crate::harness::study::{default_scenarios, Scenario, StudySpec};
use crate::sampler::ChainConfig;
use crate::spectral::{RegressionDesign, RegressorKind};

/// Pooling, trim and bandwidth; unset values use the method's default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandSettings {
    pub pooling: usize,
    pub trim: Option<usize>,
    pub bandwidth: Option<usize>,
    pub regressor: RegressorKind,
}

impl Default for BandSettings {
    fn default() -> Self {
        Self { pooling: 1, trim: None, bandwidth: None, regressor: RegressorKind::SinSquared }
    }
}

impl BandSettings {
    pub fn design(&self, default_trim: usize, default_bandwidth: usize) -> RegressionDesign {
        RegressionDesign {
            pooling: self.pooling,
            trim: self.trim.unwrap_or(default_trim),
            bandwidth: self.bandwidth.unwrap_or(default_bandwidth),
            regressor: self.regressor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudySettings {
    pub replicates: usize,
    pub n: usize,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    /// Worker threads for replicates.
    pub workers: usize,
    pub scenarios: Vec<Scenario>,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            replicates: 50,
            n: 10_000,
            methods: Method::ALL.to_vec(),
            base_seed: 0,
            workers: 1,
            scenarios: default_scenarios(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParametricSettings {
    pub model: ParametricModel,
}

impl Default for ParametricSettings {
    fn default() -> Self {
        Self { model: ParametricModel::Arfima11 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub chain: ChainConfig,
    pub semiparametric: BandSettings,
    pub ls: BandSettings,
    pub parametric: ParametricSettings,
    pub study: StudySettings,
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.chain.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable")
    }

    pub fn estimate_settings(&self) -> EstimateSettings {
        EstimateSettings {
            chain: self.chain.clone(),
            semiparametric: self.semiparametric,
            ls: self.ls,
            parametric_model: self.parametric.model,
        }
    }

    pub fn study_spec(&self) -> StudySpec {
        let s = &self.study;
        StudySpec {
            scenarios: s.scenarios.clone(),
            replicates: s.replicates,
            n: s.n,
            methods: s.methods.clone(),
            base_seed: s.base_seed,
            workers: s.workers,
            estimation: self.estimate_settings(),
        }
    }
}
