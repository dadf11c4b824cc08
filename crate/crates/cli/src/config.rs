//! Config files, flag merging and the manifest written into every output.

use std::fs;
use std::path::{Path, PathBuf};

use rainbow_core::geometry::{Material, PerturbationKind, ResonatorArray};
use rainbow_core::io::{parse_json, ArrayConfig, MaterialConfig};
use rainbow_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bem,
    Dilute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Normalize {
    /// Unit amplitude `c_n = 1`.
    Amplitude,
    /// Unit discrete L2 norm.
    UnitL2,
}

/// Optional `run` section of a config file. Every key mirrors a command-line
/// flag; flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrapolate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<PerturbationKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<Normalize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impulse: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub array: Option<ArrayConfig>,
    #[serde(default)]
    pub run: RunConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", p.display())))?;
                parse_json(&text)
            }
        }
    }

    pub fn material(&self) -> Result<Material> {
        self.material
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("config key `material` is required".into()))?
            .resolve()
    }

    pub fn array(&self) -> Result<ResonatorArray> {
        let material = self.material()?;
        self.array
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("config key `array` is required".into()))?
            .build(material)
    }
}

/// Resolved inputs of one run, echoed into every output file.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub material: Option<&'a MaterialConfig>,
    pub array: Option<&'a ArrayConfig>,
    pub run: &'a RunConfig,
}

impl Manifest<'_> {
    /// `# `-comment body: tool versions, SHA-256 of the resolved config and
    /// the config itself as one-line JSON.
    pub fn render(&self) -> String {
        let json = serde_json::to_string(self).expect("manifest serializes");
        let digest = Sha256::digest(json.as_bytes());
        let hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!(
            "rainbow {} (rainbow-core {})\nconfig_sha256={hash}\nconfig={json}",
            env!("CARGO_PKG_VERSION"),
            rainbow_core::VERSION
        )
    }
}
