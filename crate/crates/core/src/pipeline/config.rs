use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    /// Blender cover spacing; derived from the Lipschitz bound when absent.
    pub blender: Option<f64>,
    pub tangency_base: f64,
    pub tangency_plane: f64,
    /// Spacing of the target net for globalization.
    pub coverage: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            blender: None,
            tangency_base: 0.004,
            tangency_plane: 0.004,
            coverage: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfsConfig {
    pub budget: usize,
    pub max_word_len: usize,
    pub transition_len: usize,
    pub transition_budget: usize,
}

impl Default for BfsConfig {
    fn default() -> Self {
        Self {
            budget: 2_000_000,
            max_word_len: 400,
            transition_len: 5,
            transition_budget: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    pub eta: Vec<f64>,
    pub trials: usize,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            eta: vec![0.0, 1e-4, 1e-3, 1e-2],
            trials: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalizationConfig {
    /// Lower and upper corners of the compact target.
    pub domain: [Vec<f64>; 2],
    /// Chart scale of the globalizing bump families.
    pub chart_eps: f64,
    /// Translation length per unit of the arc parameter.
    pub step_per_eps: f64,
    pub seed_radius: f64,
}

impl Default for GlobalizationConfig {
    fn default() -> Self {
        Self {
            domain: [vec![0.0, 0.0], vec![3.0, 3.0]],
            chart_eps: 3.2,
            step_per_eps: 0.1,
            seed_radius: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dimension: usize,
    pub ell: usize,
    /// Arc parameter; `0` is the identity endpoint.
    pub eps: f64,
    pub nu: f64,
    pub alpha: f64,
    pub window: usize,
    /// Center of the first blending region.
    pub anchor: Vec<f64>,
    pub hyperbolicity_samples: usize,
    pub net: NetConfig,
    pub bfs: BfsConfig,
    pub perturbation: PerturbationConfig,
    pub globalization: GlobalizationConfig,
    pub seed: u64,
    pub output: Option<String>,
    /// Names of checks to skip.
    pub disabled: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dimension: 2,
            ell: 1,
            eps: 0.5,
            nu: 0.2,
            alpha: 1.0,
            window: 32,
            anchor: vec![1.0, 1.5],
            hyperbolicity_samples: 100,
            net: NetConfig::default(),
            bfs: BfsConfig::default(),
            perturbation: PerturbationConfig::default(),
            globalization: GlobalizationConfig::default(),
            seed: 7,
            output: None,
            disabled: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let c = self.dimension;
        if c == 0 || c % 2 != 0 {
            return Err(Error::Param(format!("dimension must be even and positive, got {c}")));
        }
        if self.ell == 0 || 2 * self.ell > c {
            return Err(Error::Param(format!("need 0 < ℓ ≤ c/2, got ℓ = {}", self.ell)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::Param(format!("eps must be nonnegative, got {}", self.eps)));
        }
        if self.anchor.len() != c || self.globalization.domain.iter().any(|v| v.len() != c) {
            return Err(Error::Dimension("anchor and domain corners must live in R^c".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn is_disabled(&self, check: &str) -> bool {
        self.disabled.iter().any(|d| d == check)
    }
}
