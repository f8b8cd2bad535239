use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const DEFAULT_EXACT_THRESHOLD: usize = 30;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ELEMENT_CAP: usize = 4096;
pub const DEFAULT_STATE_CAP: usize = 256;
pub const DEFAULT_TOLERANCE: f64 = 0.02;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    E,
    #[serde(rename = "2")]
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::E => x.ln(),
            LogBase::Two => x.log2(),
        }
    }

    /// Converts a value in nats to this base.
    pub fn from_nats(self, v: f64) -> f64 {
        match self {
            LogBase::E => v,
            LogBase::Two => v / std::f64::consts::LN_2,
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogBase::E => "e",
            LogBase::Two => "2",
        })
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "e" | "ln" => Ok(LogBase::E),
            "2" => Ok(LogBase::Two),
            other => Err(Error::Parse(format!("unknown log base {other:?} (expected e or 2)"))),
        }
    }
}

/// Solver and estimator knobs shared by the entropy modules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub exact_threshold: usize,
    pub log_base: LogBase,
    pub seed: u64,
    /// Largest explicit join kept in memory; deeper levels use the word search.
    pub element_cap: usize,
    /// Tuples kept per level by the word search.
    pub state_cap: usize,
    pub piece_cap: usize,
    pub tolerance: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
            log_base: LogBase::E,
            seed: DEFAULT_SEED,
            element_cap: DEFAULT_ELEMENT_CAP,
            state_cap: DEFAULT_STATE_CAP,
            piece_cap: crate::piecewise::DEFAULT_PIECE_CAP,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}
