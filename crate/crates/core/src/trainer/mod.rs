//! Continual training across ascending problem sizes: task-size schedule,
//! experience replay of earlier sizes, REINFORCE with a shared multi-start
//! baseline and KL regularization towards a frozen exemplar policy.

mod exemplar;
mod loss;
mod optim;
mod run;
mod schedule;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::EvalOptions;
use crate::instances::{InstanceSet, ProblemKind};
use crate::policy::PolicyConfig;

pub use exemplar::{maybe_update_exemplar, ExemplarStore, RegularizationMode};
pub use loss::{
    advantages, combined_gradient, combined_spec, kl_regularization_loss, kl_term, task_loss, KlForm, LossTerm,
};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub use run::{run_training, training_step, StepStats, TrainLogRecord, TrainOptions, TrainOutcome};
pub use schedule::{current_task_size, replay_choice, sample_training_size, SizeSchedule};

/// Architecture hyperparameters; the problem kind comes from the training
/// configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub n_heads: usize,
    pub n_encoder_layers: usize,
    pub feedforward_dim: usize,
    pub logit_clip: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = PolicyConfig::new(ProblemKind::Tsp);
        ModelConfig {
            embed_dim: p.embed_dim,
            n_heads: p.n_heads,
            n_encoder_layers: p.n_encoder_layers,
            feedforward_dim: p.feedforward_dim,
            logit_clip: p.logit_clip,
        }
    }
}

impl ModelConfig {
    pub fn policy(&self, kind: ProblemKind) -> PolicyConfig {
        PolicyConfig {
            kind,
            embed_dim: self.embed_dim,
            n_heads: self.n_heads,
            n_encoder_layers: self.n_encoder_layers,
            feedforward_dim: self.feedforward_dim,
            logit_clip: self.logit_clip,
        }
    }
}

/// Evaluation sets used at the end of training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Empty: the training sizes.
    pub sizes: Vec<usize>,
    /// Instances per size; `None` picks [`desk_eval_count`].
    pub count: Option<usize>,
    pub seed: u64,
    /// Starts per instance; `None` uses every customer.
    pub n_starts: Option<usize>,
    pub augment: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            sizes: Vec::new(),
            count: None,
            seed: 1234,
            n_starts: None,
            augment: true,
        }
    }
}

impl EvalConfig {
    pub fn options(&self, workers: usize) -> EvalOptions {
        EvalOptions {
            n_starts: self.n_starts,
            augment: self.augment,
            workers,
        }
    }

    /// Generates the evaluation instance sets for `kind`.
    pub fn instance_sets(&self, kind: ProblemKind, schedule: &SizeSchedule) -> Result<Vec<InstanceSet>> {
        let sizes = if self.sizes.is_empty() { &schedule.sizes } else { &self.sizes };
        sizes
            .iter()
            .map(|&n| InstanceSet::generate(kind, n, self.count.unwrap_or_else(|| desk_eval_count(n)), self.seed))
            .collect()
    }
}

/// Evaluation set size per problem size: 1000 up to 20, 200 up to 50, 64 above.
pub fn desk_eval_count(size: usize) -> usize {
    match size {
        0..=20 => 1000,
        21..=50 => 200,
        _ => 64,
    }
}

/// Everything that determines a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub problem: ProblemKind,
    pub seed: u64,
    pub model: ModelConfig,
    pub schedule: SizeSchedule,
    /// Weight of the regularization term in `α L_R + (1 - α) L_T`.
    pub alpha: f64,
    /// Experience replay of earlier sizes.
    pub replay: bool,
    pub regularization: RegularizationMode,
    /// Epochs between intra-task exemplar refreshes.
    pub intra_interval: Option<usize>,
    pub kl_form: KlForm,
    pub n_starts: usize,
    pub optimizer: OptimizerConfig,
    /// Epoch after which the first exemplar is taken; defaults to the first
    /// regular refresh. The regularization weight is zero until then.
    pub warmup_epochs: Option<usize>,
    pub eval: Option<EvalConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            problem: ProblemKind::Tsp,
            seed: 0,
            model: ModelConfig::default(),
            schedule: SizeSchedule {
                sizes: vec![10, 15, 20],
                epochs: 30,
                steps_per_epoch: 100,
                batch_size: 32,
                halve_batch_above: None,
            },
            alpha: 0.1,
            replay: true,
            regularization: RegularizationMode::Inter,
            intra_interval: None,
            kl_form: KlForm::Chosen,
            n_starts: 8,
            optimizer: OptimizerConfig::default(),
            warmup_epochs: None,
            eval: None,
        }
    }
}

impl TrainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn policy(&self) -> PolicyConfig {
        self.model.policy(self.problem)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.policy().validate()?;
        self.optimizer.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.n_starts < 2 {
            return Err(Error::DegenerateBaseline {
                n_starts: self.n_starts,
            });
        }
        let smallest = self.schedule.sizes[0];
        if self.n_starts > smallest {
            return Err(Error::Config(format!(
                "n_starts {} exceeds the smallest size {smallest}",
                self.n_starts
            )));
        }
        if self.regularization != RegularizationMode::Intra && self.intra_interval.is_some() {
            return Err(Error::Config("intra_interval is only used with intra regularization".into()));
        }
        ExemplarStore::new(self.regularization, &self.schedule, self.intra_interval, self.warmup_epochs)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_string(self)?;
        Ok(hex::encode(Sha256::digest(json.as_bytes())))
    }
}
