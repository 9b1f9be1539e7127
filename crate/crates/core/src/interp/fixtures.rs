use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const DEFAULT_FETCH_COST: u64 = 1000;
pub const DEFAULT_ALLOC_COST: u64 = 10;
pub const DEFAULT_BUILTIN_COST: u64 = 1;

/// Deterministic stand-in for the environment a program runs in: canned
/// network responses and per-builtin step costs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixtures {
    #[serde(default)]
    pub responses: BTreeMap<String, String>,
    #[serde(default)]
    pub step_costs: BTreeMap<String, u64>,
}

impl Fixtures {
    pub fn with_response(mut self, url: impl Into<String>, body: impl Into<String>) -> Self {
        self.responses.insert(url.into(), body.into());
        self
    }

    /// Step cost of a builtin; fetch 1000, alloc 10, anything else 1 unless
    /// overridden.
    pub fn cost(&self, builtin: &str) -> u64 {
        if let Some(&c) = self.step_costs.get(builtin) {
            return c;
        }
        match builtin {
            "fetch" => DEFAULT_FETCH_COST,
            "alloc" => DEFAULT_ALLOC_COST,
            _ => DEFAULT_BUILTIN_COST,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
