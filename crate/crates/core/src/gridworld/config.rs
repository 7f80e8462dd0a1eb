use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::goal::GoalTemplate;

/// Relative sampling weights of goal templates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateWeights {
    pub pick_place: f64,
    pub slice: f64,
    pub heat_place: f64,
    pub cool_place: f64,
    pub clean_place: f64,
    pub examine: f64,
    pub slice_place: f64,
}

impl Default for TemplateWeights {
    fn default() -> Self {
        TemplateWeights {
            pick_place: 1.0,
            slice: 1.0,
            heat_place: 1.0,
            cool_place: 1.0,
            clean_place: 1.0,
            examine: 1.0,
            slice_place: 2.0,
        }
    }
}

impl TemplateWeights {
    pub fn get(&self, t: GoalTemplate) -> f64 {
        match t {
            GoalTemplate::PickPlace => self.pick_place,
            GoalTemplate::Slice => self.slice,
            GoalTemplate::HeatPlace => self.heat_place,
            GoalTemplate::CoolPlace => self.cool_place,
            GoalTemplate::CleanPlace => self.clean_place,
            GoalTemplate::Examine => self.examine,
            GoalTemplate::SlicePlace => self.slice_place,
        }
    }
}

/// Environment and generator configuration, read from TOML.
///
/// ```toml
/// width = 15
/// height = 15
/// radius = 14
/// num_objects = 7
/// num_receptacles = 5
/// max_episode_len = 150
/// teleport_navigation = false
/// [template_weights]
/// slice_place = 2.0
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub width: usize,
    pub height: usize,
    /// Observation radius; the window side is `2 * radius + 1`.
    pub radius: usize,
    /// How many catalog objects are placed (the first `num_objects` of the catalog).
    pub num_objects: usize,
    /// How many catalog receptacles are placed.
    pub num_receptacles: usize,
    pub template_weights: TemplateWeights,
    pub max_episode_len: usize,
    /// Layout retries before reset gives up.
    pub max_retries: usize,
    /// Replace every navigation span with a single teleport action.
    pub teleport_navigation: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            width: 15,
            height: 15,
            radius: 14,
            num_objects: 7,
            num_receptacles: 5,
            template_weights: TemplateWeights::default(),
            max_episode_len: 150,
            max_retries: 200,
            teleport_navigation: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Toml {
        path: String,
        #[source]
        source: toml::de::Error,
    },
}

impl EnvConfig {
    pub fn teleport(&self) -> Self {
        EnvConfig {
            teleport_navigation: true,
            ..self.clone()
        }
    }

    pub fn window_side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.width < 4 || self.height < 4 {
            return bad("width and height must be at least 4");
        }
        if self.radius < 1 {
            return bad("radius must be at least 1");
        }
        if self.num_objects > crate::corpus::Object::ALL.len() {
            return bad("num_objects exceeds the object catalog");
        }
        if self.num_receptacles > crate::corpus::Receptacle::ALL.len() {
            return bad("num_receptacles exceeds the receptacle catalog");
        }
        if self.num_objects + self.num_receptacles + 1 > self.width * self.height {
            return bad("grid too small for the requested entities");
        }
        let w = &self.template_weights;
        if GoalTemplate::ALL
            .iter()
            .any(|&t| !(w.get(t).is_finite() && w.get(t) >= 0.0))
        {
            return bad("template weights must be finite and non-negative");
        }
        if self.max_episode_len == 0 {
            return bad("max_episode_len must be positive");
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: EnvConfig = toml::from_str(s).map_err(|source| ConfigError::Toml {
            path: "<string>".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: p.clone(),
            source,
        })?;
        let cfg: EnvConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Toml { path: p, source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}
