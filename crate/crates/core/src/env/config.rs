use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::hashing::json_hash;
use crate::logic::{Macros, ParseError};

use super::grid::GridWorld;
use super::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StartSpec {
    Uniform,
    Fixed { x: usize, y: usize },
}

/// Grid-world environment settings as stored in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    #[serde(default = "defaults::width")]
    pub width: usize,
    #[serde(default = "defaults::height")]
    pub height: usize,
    #[serde(default = "defaults::slip")]
    pub slip: f64,
    #[serde(default = "defaults::horizon")]
    pub horizon: usize,
    #[serde(default = "defaults::start")]
    pub start: StartSpec,
    /// Named predicate conjunctions, e.g. `a = "x > 1 & x < 3 & y > 1 & y < 3"`.
    #[serde(default)]
    pub macros: BTreeMap<String, String>,
}

mod defaults {
    use super::StartSpec;

    pub fn width() -> usize {
        10
    }
    pub fn height() -> usize {
        8
    }
    pub fn slip() -> f64 {
        0.2
    }
    pub fn horizon() -> usize {
        200
    }
    pub fn start() -> StartSpec {
        StartSpec::Uniform
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            width: defaults::width(),
            height: defaults::height(),
            slip: defaults::slip(),
            horizon: defaults::horizon(),
            start: defaults::start(),
            macros: BTreeMap::new(),
        }
    }
}

impl EnvConfig {
    /// The 10x8 grid with point goals a=(2,2), b=(5,5), c=(2,7).
    pub fn standard_grid() -> Self {
        let macros = [
            ("a", "x > 1 & x < 3 & y > 1 & y < 3"),
            ("b", "x > 4 & x < 6 & y > 4 & y < 6"),
            ("c", "x > 1 & x < 3 & y > 6 & y < 8"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        EnvConfig {
            macros,
            ..EnvConfig::default()
        }
    }

    /// Same grid with region `c` coinciding with `a`, so the two tasks'
    /// progress conditions overlap.
    pub fn overlap_grid() -> Self {
        let mut cfg = Self::standard_grid();
        cfg.macros.insert("c".into(), cfg.macros["a"].clone());
        cfg
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.width == 0 || self.height == 0 {
            return Err(EnvError::Config("grid dimensions must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.slip) {
            return Err(EnvError::Config(format!("slip {} outside [0, 1]", self.slip)));
        }
        if let StartSpec::Fixed { x, y } = self.start {
            if x >= self.width || y >= self.height {
                return Err(EnvError::Config(format!("fixed start ({x}, {y}) outside the grid")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridWorld, EnvError> {
        self.validate()?;
        Ok(GridWorld::new(self.width, self.height, self.slip, self.start))
    }

    pub fn features(&self) -> BTreeSet<String> {
        ["x", "y"].iter().map(|s| s.to_string()).collect()
    }

    pub fn parsed_macros(&self) -> Result<Macros, ParseError> {
        Macros::parse(
            self.macros.iter().map(|(k, v)| (k.as_str(), v.as_str())),
            &self.features(),
        )
    }

    pub fn hash(&self) -> String {
        json_hash(self)
    }
}
