use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

use super::config::PipelineConfig;

pub const SCHEMA: &str = "blenderlab-cert/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Transitivity,
    Tangency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Hypothesis label the check instantiates.
    pub hypothesis: String,
    pub status: CheckStatus,
    pub required_for: Vec<Verdict>,
    pub margin: Option<f64>,
    pub parameters: Value,
    pub witnesses: Value,
    pub message: Option<String>,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub transitivity: bool,
    pub tangency: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: String,
    pub checks: Vec<CheckRecord>,
    pub verdicts: Verdicts,
    pub overall: bool,
    pub provenance: Provenance,
}

pub fn config_digest(cfg: &PipelineConfig) -> String {
    let text = serde_json::to_string(cfg).unwrap_or_default();
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl Certificate {
    /// Aggregates records; a verdict holds iff every check it requires passes.
    pub fn assemble(cfg: &PipelineConfig, checks: Vec<CheckRecord>) -> Self {
        let holds = |v: Verdict| {
            checks
                .iter()
                .filter(|c| c.required_for.contains(&v))
                .all(CheckRecord::passed)
        };
        let verdicts = Verdicts {
            transitivity: holds(Verdict::Transitivity),
            tangency: holds(Verdict::Tangency),
        };
        let overall = checks
            .iter()
            .filter(|c| !c.required_for.is_empty())
            .all(CheckRecord::passed);
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            schema: SCHEMA.into(),
            checks,
            verdicts,
            overall,
            provenance: Provenance {
                config_sha256: config_digest(cfg),
                seed: cfg.seed,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                timestamp_unix,
            },
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the timestamp removed, for reproducibility comparisons.
    pub fn reproducible_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.provenance.timestamp_unix = 0;
        copy.to_json()
    }
}
