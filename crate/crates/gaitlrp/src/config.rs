//! JSON run configuration for reproducible pipeline invocations. Every key is
//! optional and falls back to the documented default; CLI flags override file
//! values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::ChannelLayout;
use crate::error::{Error, Result};
use crate::eval::PipelineConfig;
use crate::lrp::{ExplainTarget, LrpConfig, LrpRule};
use crate::nn::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Samples per stance-phase curve; inputs are resampled to this length.
    pub t: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// `"epsilon"` or `"alpha_beta"`.
    pub rule: String,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `"ground_truth"` or `"predicted"`.
    pub target: String,
    /// Feed the literal 1x(6T) concatenated vector instead of 6 channels.
    pub flat_input: bool,
    /// Average left/right into 3 channels before normalization.
    pub side_average: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t: 100,
            learning_rate: 0.01,
            batch_size: 16,
            epochs: 100,
            rule: "epsilon".to_string(),
            epsilon: 1e-6,
            alpha: 1.0,
            beta: 0.0,
            target: "ground_truth".to_string(),
            flat_input: false,
            side_average: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 2 {
            return Err(Error::InvalidConfig("t must be >= 2".into()));
        }
        self.train_config(0)?.validate()?;
        self.lrp_config()?.validate()
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        Ok(TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
        })
    }

    pub fn lrp_config(&self) -> Result<LrpConfig> {
        let rule = match self.rule.as_str() {
            "epsilon" => LrpRule::Epsilon { epsilon: self.epsilon },
            "alpha_beta" => LrpRule::AlphaBeta {
                alpha: self.alpha,
                beta: self.beta,
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown LRP rule `{other}` (use epsilon or alpha_beta)"
                )))
            }
        };
        let target = match self.target.as_str() {
            "ground_truth" => ExplainTarget::GroundTruth,
            "predicted" => ExplainTarget::Predicted,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown explain target `{other}` (use ground_truth or predicted)"
                )))
            }
        };
        let cfg = LrpConfig { rule, target };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            layout: if self.side_average {
                ChannelLayout::SideAveraged
            } else {
                ChannelLayout::SixChannel
            },
            flat_input: self.flat_input,
        }
    }
}
