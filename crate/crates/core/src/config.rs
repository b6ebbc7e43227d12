//! Engine configuration, read from TOML.
//!
//! Every field has a default, so an empty file is a valid configuration:
//!
//! | key | default |
//! |-----|---------|
//! | `current_date` | today (UTC) |
//! | `seed` | 7 |
//! | `terminal.gate_lanes` | 2 |
//! | `terminal.clear_minutes` | 1.0 |
//! | `terminal.load_minutes` | 25.0 |
//! | `terminal.inspect_minutes` | 5.0 |
//! | `terminal.rehandle_minutes` | 6.0 |
//! | `terminal.yard_truck_limit` | 60 |
//! | `terminal.blocks_per_day` | 9 |
//! | `terminal.block_length_minutes` | 60 |
//! | `terminal.max_tier` | 4 |
//! | `weights.rehandle` / `relocation` / `zorder` | 1.0 / 2.0 / 1.0 |
//! | `budget.max_nodes` | 5000 |
//! | `yard.length_bays` × `width_rows` | 6 × 4 |
//! | `yard.entry_gate` / `exit_gate` | (6, 0) / (−1, 0) |
//! | `coefficients` | published discriminant functions |

use std::path::Path;

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, TerminalParams, YardLayout};
use crate::placement::{ObjectiveWeights, PlacementError, SearchBudget};
use crate::zscore::DiscriminantCoefficients;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("writing config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Planning date used for free-day arithmetic.
    pub current_date: Option<NaiveDate>,
    pub seed: u64,
    pub terminal: TerminalParams,
    pub weights: ObjectiveWeights,
    pub budget: SearchBudget,
    pub yard: YardLayout,
    pub coefficients: DiscriminantCoefficients,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            current_date: None,
            seed: 7,
            terminal: TerminalParams::default(),
            weights: ObjectiveWeights::default(),
            budget: SearchBudget::default(),
            yard: YardLayout::default(),
            coefficients: DiscriminantCoefficients::default(),
        }
    }
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: EngineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.terminal.validate()?;
        self.yard.validate(self.terminal.max_tier)?;
        self.weights.validate()?;
        if self.budget.max_nodes == 0 {
            return Err(PlacementError::ZeroBudget.into());
        }
        Ok(())
    }

    pub fn planning_date(&self) -> NaiveDate {
        self.current_date.unwrap_or_else(|| Utc::now().date_naive())
    }
}
