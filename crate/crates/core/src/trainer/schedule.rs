use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ascending-size curriculum: each size owns one contiguous task interval of
/// `epochs / sizes.len()` epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeSchedule {
    pub sizes: Vec<usize>,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    /// Sizes strictly above this threshold train with half the batch.
    #[serde(default)]
    pub halve_batch_above: Option<usize>,
}

impl SizeSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Config("schedule needs at least one size".into()));
        }
        if self.sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("schedule sizes must be strictly ascending".into()));
        }
        if let [a, b, ..] = self.sizes[..] {
            let n = b - a;
            if self.sizes.windows(2).any(|w| w[1] - w[0] != n) {
                return Err(Error::Config("schedule sizes must be equally spaced".into()));
            }
        }
        if self.epochs == 0 || self.steps_per_epoch == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs, steps_per_epoch and batch_size must be positive".into()));
        }
        if self.epochs % self.sizes.len() != 0 {
            return Err(Error::Config(format!(
                "epochs {} not divisible by the number of sizes {}",
                self.epochs,
                self.sizes.len()
            )));
        }
        Ok(())
    }

    pub fn task_count(&self) -> usize {
        self.sizes.len()
    }

    /// Epochs per task, `E_p = E / K`.
    pub fn task_interval(&self) -> usize {
        self.epochs / self.sizes.len()
    }

    /// 1-based task index of a 1-based epoch.
    pub fn task_index(&self, epoch: usize) -> Result<usize> {
        if epoch == 0 || epoch > self.epochs {
            return Err(Error::Config(format!("epoch {epoch} outside 1..={}", self.epochs)));
        }
        Ok((epoch - 1) / self.task_interval() + 1)
    }

    pub fn batch_size_for(&self, size: usize) -> usize {
        match self.halve_batch_above {
            Some(t) if size > t => (self.batch_size / 2).max(1),
            _ => self.batch_size,
        }
    }
}

/// `N_i = N_1 + n * floor((epoch - 1) / E_p)`.
pub fn current_task_size(epoch: usize, schedule: &SizeSchedule) -> Result<usize> {
    Ok(schedule.sizes[schedule.task_index(epoch)? - 1])
}

/// Replay rule given the two uniform draws: `eps < 0.5` keeps the current
/// size, otherwise `u` picks uniformly among the previous ones.
pub fn replay_choice(sizes: &[usize], task_index: usize, eps: f64, u: f64) -> usize {
    if task_index <= 1 || eps < 0.5 {
        return sizes[task_index.max(1) - 1];
    }
    let prev = task_index - 1;
    sizes[((u * prev as f64) as usize).min(prev - 1)]
}

/// Problem size of the next mini-batch during task `task_index` (1-based).
/// No randomness is consumed in the first task or with replay disabled.
pub fn sample_training_size<R: Rng + ?Sized>(
    sizes: &[usize],
    task_index: usize,
    replay_enabled: bool,
    rng: &mut R,
) -> usize {
    if task_index <= 1 || !replay_enabled {
        return sizes[task_index.max(1) - 1];
    }
    let eps: f64 = rng.gen();
    if eps < 0.5 {
        sizes[task_index - 1]
    } else {
        sizes[rng.gen_range(0..task_index - 1)]
    }
}
