//! Application configuration: game, risk and calibration settings plus an
//! optional synthetic-scenario block for the simulator, loadable from TOML
//! or JSON with every field defaulted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::coop::GaConfig;
use crate::game::GameConfig;
use crate::model::StaticObject;
use crate::risk::RiskParams;

/// Synthetic-scenario description for the `simulate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateSpec {
    pub id: String,
    /// Initial speeds (left_turn, straight), m/s.
    pub v0: (f64, f64),
    /// Path distances to the conflict point (left_turn, straight), m.
    pub dist: (f64, f64),
    pub static_objects: Vec<StaticObject>,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        SimulateSpec {
            id: "synthetic".into(),
            v0: (6.0, 7.0),
            dist: (20.0, 25.0),
            static_objects: Vec::new(),
        }
    }
}

/// Top-level configuration file contents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub game: GameConfig,
    pub risk: RiskParams,
    pub ga: GaConfig,
    /// Calibration grid resolution over [0, 1].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSpec>,
}

impl AppConfig {
    pub fn grid_step(&self) -> f64 {
        self.grid_step.unwrap_or(0.05)
    }

    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        self.risk.validate()?;
        self.ga.validate()?;
        if let Some(step) = self.grid_step {
            if !(step > 0.0 && step <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "grid_step must lie in (0, 1], got {step}"
                )));
            }
        }
        Ok(())
    }
}

/// Load a configuration file; the format is chosen by extension (`.toml` or
/// `.json`), defaulting to TOML.
pub fn load_config<P: AsRef<Path>>(path: P) -> Result<AppConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let location = path.display().to_string();
    let is_json = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let config: AppConfig = if is_json {
        serde_json::from_str(&text).map_err(|e| Error::ParseError {
            location,
            message: format!("invalid JSON config: {e}"),
        })?
    } else {
        toml::from_str(&text).map_err(|e| Error::ParseError {
            location,
            message: format!("invalid TOML config: {e}"),
        })?
    };
    config.validate()?;
    Ok(config)
}
