//! JSON configuration files, one schema per subcommand.
//!
//! Every file carries `"version": 1` and is rejected on unknown keys. The
//! `--seed` flag overrides the file seed; the resolved configuration is
//! embedded verbatim in every output file.

use serde::{Deserialize, Serialize};

use qmetro::channels::{DependentFamily, FunctionForm};
use qmetro::schemes::{SchemeKind, SchemeSpec};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

fn default_seed() -> u64 {
    0
}

fn default_d() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Domain upper bound t; the shared parameter lives in [0, t].
    pub t: f64,
    pub functions: Vec<FunctionForm>,
}

impl FamilyConfig {
    pub fn build(&self) -> Result<DependentFamily, CliError> {
        DependentFamily::from_forms(&self.functions, self.t).map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub n: usize,
    #[serde(default = "default_d")]
    pub d: usize,
}

impl SchemeConfig {
    pub fn build(&self) -> Result<SchemeSpec, CliError> {
        SchemeSpec::new(self.kind, self.n, self.d).map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuChannelsConfig {
    pub d: usize,
    /// One parameter vector of length d²−1 per channel.
    pub thetas: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfiConfig {
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub scheme: SchemeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub su_channels: Option<SuChannelsConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub scheme: SchemeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_true: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub su_channels: Option<SuChannelsConfig>,
    pub shots_n: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaryConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub scheme: SchemeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_true: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub su_channels: Option<SuChannelsConfig>,
    pub shots_n: u64,
    pub trials: u64,
    pub vary: VaryConfig,
}

fn default_restarts() -> usize {
    32
}

fn default_random_inputs() -> usize {
    1000
}

fn default_random_thetas() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyLemmaConfig {
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Random probe states per θ-point for the bound sweep.
    #[serde(default = "default_random_inputs")]
    pub random_inputs: usize,
    /// Random θ-points beside the origin.
    #[serde(default = "default_random_thetas")]
    pub random_thetas: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConfig {
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub family: FamilyConfig,
    pub theta_true: f64,
    pub total_shots: u64,
}

/// Parses a config file after checking the version marker.
pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, CliError> {
    let probe: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
    match probe.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == CONFIG_VERSION as u64 => {}
        Some(v) => {
            return Err(CliError::Config(format!(
                "unsupported config version {v}, expected {CONFIG_VERSION}"
            )))
        }
        None => {
            return Err(CliError::Config(
                "config must carry a numeric \"version\" field".into(),
            ))
        }
    }
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
}
