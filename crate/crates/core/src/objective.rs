use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// What a mechanism is optimized for.
///
/// Under `Consumers` every consumer contributes a payoff of one; under
/// `Welfare` a consumer contributes their utility `v - p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Consumers,
    Welfare,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Consumers => "consumers",
            Objective::Welfare => "welfare",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consumers" => Ok(Objective::Consumers),
            "welfare" => Ok(Objective::Welfare),
            other => Err(format!(
                "unknown objective `{other}` (expected `consumers` or `welfare`)"
            )),
        }
    }
}
