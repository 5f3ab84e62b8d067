//! Experiment configuration and the shipped presets.
//!
//! A preset is a TOML file whose tables mirror [`ExperimentConfig`]; any
//! omitted field keeps its default. The built-in presets are embedded in the
//! binary and can be listed with [`preset_names`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::codec::StateEncoding;
use crate::error::{Error, Result};
use crate::policy::ActionSpace;
use crate::reward::RewardSpec;
use crate::trainer::TrainConfig;
use crate::value_net::{NetworkShape, NetworkWidths};
use crate::world::ScenarioConfig;

/// The seven compared training versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Version {
    #[serde(rename = "SARL")]
    Sarl,
    #[serde(rename = "SARL-SFM")]
    Sfm,
    #[serde(rename = "SARL-SFM2")]
    Sfm2,
    #[serde(rename = "SARL-SFM3")]
    Sfm3,
    #[serde(rename = "SARL-SFM4")]
    Sfm4,
    #[serde(rename = "SARL-SFM5")]
    Sfm5,
    #[serde(rename = "SARL-SFM6")]
    Sfm6,
}

impl Version {
    pub const ALL: [Version; 7] = [
        Version::Sarl,
        Version::Sfm,
        Version::Sfm2,
        Version::Sfm3,
        Version::Sfm4,
        Version::Sfm5,
        Version::Sfm6,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Version::Sarl => "SARL",
            Version::Sfm => "SARL-SFM",
            Version::Sfm2 => "SARL-SFM2",
            Version::Sfm3 => "SARL-SFM3",
            Version::Sfm4 => "SARL-SFM4",
            Version::Sfm5 => "SARL-SFM5",
            Version::Sfm6 => "SARL-SFM6",
        }
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Version {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Version::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub version: Version,
    #[serde(default = "plain")]
    pub state_encoding: StateEncoding,
    #[serde(default)]
    pub reward: RewardSpec,
    #[serde(default)]
    pub network: NetworkWidths,
    #[serde(default)]
    pub actions: ActionSpace,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
}

fn plain() -> StateEncoding {
    StateEncoding::Plain
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// A built-in preset by name, or else a preset file at that path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match builtin(name_or_path) {
            Some(text) => Self::from_toml(text),
            None if Path::new(name_or_path).is_file() => Self::from_file(Path::new(name_or_path)),
            None => Err(Error::UnknownPreset(name_or_path.to_string())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.reward.validate()?;
        self.actions.validate()?;
        self.train.validate()?;
        self.scenario.validate()?;
        self.network_shape()?;
        Ok(())
    }

    pub fn network_shape(&self) -> Result<NetworkShape> {
        NetworkShape::new(self.state_encoding, &self.network)
    }

    pub fn scenario(&self) -> Arc<ScenarioConfig> {
        Arc::new(self.scenario.clone())
    }
}

const PRESETS: [(&str, &str); 10] = [
    ("SARL", include_str!("../presets/sarl.toml")),
    ("SARL-SFM", include_str!("../presets/sarl-sfm.toml")),
    ("SARL-SFM2", include_str!("../presets/sarl-sfm2.toml")),
    ("SARL-SFM3", include_str!("../presets/sarl-sfm3.toml")),
    ("SARL-SFM4", include_str!("../presets/sarl-sfm4.toml")),
    ("SARL-SFM5", include_str!("../presets/sarl-sfm5.toml")),
    ("SARL-SFM6", include_str!("../presets/sarl-sfm6.toml")),
    ("SARL-all-envs", include_str!("../presets/sarl-all-envs.toml")),
    ("SARL-SFM6-all-envs", include_str!("../presets/sarl-sfm6-all-envs.toml")),
    ("desk", include_str!("../presets/desk.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Source text of a built-in preset.
pub fn builtin(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = builtin(name).ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    ExperimentConfig::from_toml(text)
}
