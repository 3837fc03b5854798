use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use vesselrbf::model::ModelConfig;
use vesselrbf::training::TrainConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Full-size model and schedule.
    Paper,
    /// Laptop-scale model and schedule.
    Desk,
}

/// Model and training configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn from_profile(profile: Profile) -> Self {
        match profile {
            Profile::Paper => Self { model: ModelConfig::paper(128), train: TrainConfig::paper() },
            Profile::Desk => Self { model: ModelConfig::desk(), train: TrainConfig::desk() },
        }
    }

    /// Applies `section.field=value` overrides (e.g. `model.d=64`,
    /// `train.epochs=10`), then validates both configurations.
    /// Values are parsed as JSON, falling back to a bare string.
    pub fn with_overrides(self, overrides: &[String]) -> Result<Self> {
        let mut tree = serde_json::to_value(&self).expect("config serializes");
        for item in overrides {
            let (key, raw) =
                item.split_once('=').ok_or_else(|| CliError::usage(format!("override `{item}` is not key=value")))?;
            let (section, field) = key.split_once('.').ok_or_else(|| {
                CliError::usage(format!("override key `{key}` must be model.<field> or train.<field>"))
            })?;
            let slot = tree
                .get_mut(section)
                .and_then(|s| s.get_mut(field))
                .ok_or_else(|| CliError::usage(format!("unknown configuration field `{key}`")))?;
            *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        }
        let cfg: RunConfig =
            serde_json::from_value(tree).map_err(|e| CliError::usage(format!("invalid override: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| CliError::usage(e))?;
        self.train.validate().map_err(|e| CliError::usage(e))?;
        Ok(())
    }
}
