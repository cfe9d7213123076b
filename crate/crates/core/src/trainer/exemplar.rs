use serde::{Deserialize, Serialize};

use super::SizeSchedule;
use crate::error::{Error, Result};
use crate::policy::PolicyParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizationMode {
    None,
    /// Exemplar refreshed once per task boundary.
    #[default]
    Inter,
    /// Exemplar refreshed `M` times within each task interval.
    Intra,
}

/// Frozen exemplar policy and its refresh schedule.
#[derive(Clone, Debug)]
pub struct ExemplarStore {
    mode: RegularizationMode,
    snapshot: Option<PolicyParams>,
    update_interval: usize,
    task_interval: usize,
    total_epochs: usize,
    warmup: Option<usize>,
    last_update_epoch: Option<usize>,
}

impl ExemplarStore {
    /// `intra_interval` is required in intra mode and must divide the task
    /// interval. `warmup` adds one extra snapshot at the end of that epoch.
    pub fn new(
        mode: RegularizationMode,
        schedule: &SizeSchedule,
        intra_interval: Option<usize>,
        warmup: Option<usize>,
    ) -> Result<Self> {
        let task_interval = schedule.task_interval();
        let update_interval = match mode {
            RegularizationMode::None | RegularizationMode::Inter => task_interval,
            RegularizationMode::Intra => {
                let e = intra_interval
                    .ok_or_else(|| Error::Config("intra regularization needs intra_interval".into()))?;
                if e == 0 || task_interval % e != 0 {
                    return Err(Error::Config(format!(
                        "intra_interval {e} must divide the task interval {task_interval}"
                    )));
                }
                e
            }
        };
        if let Some(w) = warmup {
            if w == 0 || w >= schedule.epochs {
                return Err(Error::Config(format!(
                    "warmup epochs {w} must lie in 1..{}",
                    schedule.epochs
                )));
            }
        }
        Ok(ExemplarStore {
            mode,
            snapshot: None,
            update_interval,
            task_interval,
            total_epochs: schedule.epochs,
            warmup,
            last_update_epoch: None,
        })
    }

    pub fn mode(&self) -> RegularizationMode {
        self.mode
    }

    pub fn snapshot(&self) -> Option<&PolicyParams> {
        self.snapshot.as_ref()
    }

    pub fn update_interval(&self) -> usize {
        self.update_interval
    }

    /// `M`: exemplar refreshes per task interval.
    pub fn updates_per_task(&self) -> usize {
        self.task_interval / self.update_interval
    }

    pub fn last_update_epoch(&self) -> Option<usize> {
        self.last_update_epoch
    }

    /// Installs an exemplar directly (a pre-trained policy or a restored
    /// checkpoint).
    pub fn install(&mut self, params: PolicyParams, epoch: Option<usize>) {
        self.snapshot = Some(params);
        self.last_update_epoch = epoch;
    }

    pub fn is_update_epoch(&self, epoch: usize) -> bool {
        if self.mode == RegularizationMode::None || epoch == 0 || epoch >= self.total_epochs {
            return false;
        }
        epoch % self.update_interval == 0 || self.warmup == Some(epoch)
    }

    /// Every epoch whose end triggers a snapshot.
    pub fn update_epochs(&self) -> Vec<usize> {
        (1..self.total_epochs).filter(|&e| self.is_update_epoch(e)).collect()
    }
}

/// Called after epoch `epoch` finishes: deep-copies `current` into the store
/// when the schedule says so. Returns whether a snapshot was taken.
pub fn maybe_update_exemplar(store: &mut ExemplarStore, epoch: usize, current: &PolicyParams) -> bool {
    if !store.is_update_epoch(epoch) {
        return false;
    }
    store.snapshot = Some(current.clone());
    store.last_update_epoch = Some(epoch);
    true
}
