//! Run configuration: one TOML file, every table optional, flags override.

use std::path::Path;

use anyhow::{Context, Result};
use mmlda::evaluation::ExtrapolationOptions;
use mmlda::models::Z_RS;
use mmlda::tuning::SearchBudget;
use mmlda::{ArchitectureKind, ModelDefaults, SimulatorParams, TrainingSchedule};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every stage; `--seed` wins over this.
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub simulator: SimulatorParams,
    pub split: SplitConfig,
    pub model: ModelConfig,
    pub schedule: TrainingSchedule,
    pub evaluation: EvaluationConfig,
    pub tuning: TuningConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub architecture: ArchitectureKind,
    #[serde(flatten)]
    pub defaults: ModelDefaults,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: ArchitectureKind::Ecm,
            defaults: ModelDefaults::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Inference schedule for unseen blocks.
    pub inference: TrainingSchedule,
    pub n_trials: u32,
    pub reps: usize,
    /// Node whose θ̂ is exported.
    pub export_node: String,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        let e = ExtrapolationOptions::default();
        Self {
            inference: TrainingSchedule::default(),
            n_trials: e.n_trials,
            reps: e.reps,
            export_node: Z_RS.to_string(),
        }
    }
}

impl EvaluationConfig {
    pub fn extrapolation(&self) -> ExtrapolationOptions {
        ExtrapolationOptions {
            n_trials: self.n_trials,
            reps: self.reps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningConfig {
    /// Share of training days held out to score candidates.
    pub heldout_fraction: f64,
    #[serde(flatten)]
    pub budget: SearchBudget,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            heldout_fraction: 0.2,
            budget: SearchBudget::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(self.simulator.seed)
    }

    pub fn validate(&self) -> Result<()> {
        TrainingSchedule::new(self.schedule.inner_iterations, self.schedule.global_passes)
            .context("[schedule]")?;
        TrainingSchedule::new(
            self.evaluation.inference.inner_iterations,
            self.evaluation.inference.global_passes,
        )
        .context("[evaluation.inference]")?;
        self.model
            .defaults
            .weights
            .validate()
            .context("[model.weights]")?;
        self.simulator.validate().context("[simulator]")?;
        self.tuning.budget.validate().context("[tuning]")?;
        anyhow::ensure!(
            self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0,
            "[split] train_fraction must lie in (0, 1)"
        );
        anyhow::ensure!(
            self.tuning.heldout_fraction > 0.0 && self.tuning.heldout_fraction < 1.0,
            "[tuning] heldout_fraction must lie in (0, 1)"
        );
        Ok(())
    }
}
