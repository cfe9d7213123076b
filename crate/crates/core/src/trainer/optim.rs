use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::OptimizerSnapshot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Rescale the gradient to this global L2 norm when it is larger.
    pub max_grad_norm: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_grad_norm: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("adam betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if matches!(self.max_grad_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::Config("max_grad_norm must be positive".into()));
        }
        Ok(())
    }
}

/// Descent step on a loss: plain SGD or Adam.
#[derive(Clone, Debug)]
pub struct Optimizer {
    config: OptimizerConfig,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, n_params: usize) -> Self {
        let moments = if config.kind == OptimizerKind::Adam { n_params } else { 0 };
        Optimizer {
            config,
            step: 0,
            m: vec![0.0; moments],
            v: vec![0.0; moments],
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, weights: &mut [f64], grad: &[f64]) -> Result<()> {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::numeric("gradient"));
        }
        let mut scale = 1.0;
        if let Some(c) = self.config.max_grad_norm {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > c {
                scale = c / norm;
            }
        }
        self.step += 1;
        let lr = self.config.learning_rate;
        match self.config.kind {
            OptimizerKind::Sgd => {
                for (w, g) in weights.iter_mut().zip(grad) {
                    *w -= lr * scale * g;
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (self.config.beta1, self.config.beta2, self.config.epsilon);
                let c1 = 1.0 - b1.powi(self.step as i32);
                let c2 = 1.0 - b2.powi(self.step as i32);
                for i in 0..weights.len() {
                    let g = grad[i] * scale;
                    self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
                    self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
                    weights[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + eps);
                }
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::numeric("parameter update"));
        }
        Ok(())
    }

    pub fn snapshot(&self) -> OptimizerSnapshot {
        OptimizerSnapshot {
            kind: match self.config.kind {
                OptimizerKind::Sgd => "sgd".into(),
                OptimizerKind::Adam => "adam".into(),
            },
            step: self.step,
            first_moment: self.m.clone(),
            second_moment: self.v.clone(),
        }
    }

    pub fn restore(config: OptimizerConfig, n_params: usize, snap: &OptimizerSnapshot) -> Result<Self> {
        let mut opt = Optimizer::new(config, n_params);
        let expected = match opt.config.kind {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        };
        if snap.kind != expected || snap.first_moment.len() != opt.m.len() || snap.second_moment.len() != opt.v.len() {
            return Err(Error::Checkpoint(format!(
                "optimizer state ({}) does not match the configured {expected} optimizer",
                snap.kind
            )));
        }
        opt.step = snap.step;
        opt.m.clone_from(&snap.first_moment);
        opt.v.clone_from(&snap.second_moment);
        Ok(opt)
    }
}
