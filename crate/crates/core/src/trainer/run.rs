use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    combined_gradient, kl_term, maybe_update_exemplar, sample_training_size, task_loss, ExemplarStore, KlForm,
    Optimizer, RegularizationMode, TrainConfig,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, EvalSet};
use crate::instances::{generate, VrpInstance};
use crate::policy::{
    trace_rollout, Checkpoint, DecodeMode, ExemplarSnapshot, PolicyParams, RngState, RolloutBatch,
};

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub epoch: usize,
    pub step: usize,
    pub sampled_size: usize,
    pub task_loss: f64,
    pub kl_loss: f64,
    pub mean_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_s: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub task_loss: f64,
    /// Zero when no regularization term was used.
    pub kl_loss: f64,
    pub mean_cost: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Run directory for the log, checkpoints and final report.
    pub out_dir: Option<PathBuf>,
    /// Adds elapsed seconds to every log line.
    pub timestamps: bool,
    pub workers: usize,
    pub resume: Option<Checkpoint>,
    /// Exemplar in place before the first snapshot (a pre-trained policy).
    pub initial_exemplar: Option<PolicyParams>,
    /// Prepared evaluation sets; when empty they are generated from the
    /// configuration's `eval` section, if any.
    pub eval_sets: Vec<EvalSet>,
    /// One summary line per epoch on stderr.
    pub progress: bool,
}

pub struct TrainOutcome {
    pub params: PolicyParams,
    /// Checkpoints at every task boundary, the last one after the final epoch.
    pub checkpoints: Vec<Checkpoint>,
    pub checkpoint_paths: Vec<PathBuf>,
    pub log: Vec<TrainLogRecord>,
    pub report: Option<EvalReport>,
}

fn merge(parts: Vec<(RolloutBatch, Vec<crate::policy::Trace>)>, n_starts: usize) -> (RolloutBatch, Vec<crate::policy::Trace>) {
    let mut batch = RolloutBatch {
        instances: Vec::with_capacity(parts.len()),
        n_starts,
        tours: Vec::with_capacity(parts.len()),
        step_logprobs: Vec::with_capacity(parts.len()),
        costs: Vec::with_capacity(parts.len()),
    };
    let mut traces = Vec::with_capacity(parts.len());
    for (b, t) in parts {
        batch.instances.extend(b.instances);
        batch.tours.extend(b.tours);
        batch.step_logprobs.extend(b.step_logprobs);
        batch.costs.extend(b.costs);
        traces.extend(t);
    }
    (batch, traces)
}

/// One update on a fresh batch: sample `n_starts` tours per instance, form
/// `α L_R + (1 - α) L_T` (task loss only when `exemplar` is `None` or
/// `alpha == 0`) and apply the optimizer. Each instance decodes with its own
/// generator seeded from `rng`, so results do not depend on thread count.
#[allow(clippy::too_many_arguments)]
pub fn training_step<R: RngCore + ?Sized>(
    params: &mut PolicyParams,
    exemplar: Option<&PolicyParams>,
    alpha: f64,
    kl_form: KlForm,
    instances: &[VrpInstance],
    n_starts: usize,
    optimizer: &mut Optimizer,
    rng: &mut R,
) -> Result<StepStats> {
    let seeds: Vec<u64> = instances.iter().map(|_| rng.next_u64()).collect();
    let current = &*params;
    let parts = instances
        .par_iter()
        .zip(&seeds)
        .map(|(inst, &seed)| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            trace_rollout(current, std::slice::from_ref(inst), DecodeMode::Sample, n_starts, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let (batch, traces) = merge(parts, n_starts);
    let task = task_loss(&batch)?;
    let reg = match exemplar {
        Some(ex) if alpha > 0.0 => Some(kl_term(ex, &batch, &traces, kl_form)?),
        _ => None,
    };
    let grad = combined_gradient(params, &traces, &task, reg.as_ref(), alpha)?;
    drop(traces);
    optimizer.step(params.weights_mut(), &grad)?;
    Ok(StepStats {
        task_loss: task.value,
        kl_loss: reg.map_or(0.0, |r| r.value),
        mean_cost: batch.mean_cost(),
    })
}

struct RunState {
    rng: ChaCha8Rng,
    params: PolicyParams,
    optimizer: Optimizer,
    store: ExemplarStore,
    next_epoch: usize,
}

fn initial_state(config: &TrainConfig, hash: &str, options: &TrainOptions) -> Result<RunState> {
    let mut store = ExemplarStore::new(
        config.regularization,
        &config.schedule,
        config.intra_interval,
        config.warmup_epochs,
    )?;
    if let Some(ck) = &options.resume {
        if ck.config_hash != hash {
            return Err(Error::Checkpoint(
                "checkpoint was produced by a different configuration".into(),
            ));
        }
        if ck.policy != config.policy() {
            return Err(Error::Checkpoint("checkpoint architecture differs from the configuration".into()));
        }
        let params = ck.params()?;
        let rng = ck
            .rng
            .as_ref()
            .ok_or_else(|| Error::Checkpoint("checkpoint has no generator state".into()))?
            .restore()?;
        let optimizer = match &ck.optimizer {
            Some(s) => Optimizer::restore(config.optimizer.clone(), params.len(), s)?,
            None => return Err(Error::Checkpoint("checkpoint has no optimizer state".into())),
        };
        if let (Some(ex), Some(snap)) = (ck.exemplar_params()?, &ck.exemplar) {
            store.install(ex, Some(snap.taken_at_epoch));
        }
        return Ok(RunState {
            rng,
            params,
            optimizer,
            store,
            next_epoch: ck.epoch + 1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = PolicyParams::init(config.policy(), &mut rng)?;
    if let Some(ex) = &options.initial_exemplar {
        if ex.config() != params.config() {
            return Err(Error::Config("initial exemplar architecture differs from the configuration".into()));
        }
        store.install(ex.clone(), None);
    }
    Ok(RunState {
        optimizer: Optimizer::new(config.optimizer.clone(), params.len()),
        rng,
        params,
        store,
        next_epoch: 1,
    })
}

fn checkpoint(config: &TrainConfig, hash: &str, st: &RunState, epoch: usize) -> Result<Checkpoint> {
    let task = config.schedule.task_index(epoch)?;
    let mut ck = Checkpoint::new(&st.params, epoch, task, config.seed, hash.to_string());
    ck.rng = Some(RngState::capture(&st.rng));
    ck.optimizer = Some(st.optimizer.snapshot());
    ck.exemplar = st.store.snapshot().map(|ex| ExemplarSnapshot {
        weights: ex.weights().to_vec(),
        taken_at_epoch: st.store.last_update_epoch().unwrap_or(0),
    });
    Ok(ck)
}

struct LogFile {
    out: Option<BufWriter<File>>,
}

impl LogFile {
    fn write(&mut self, rec: &TrainLogRecord) -> Result<()> {
        if let Some(w) = &mut self.out {
            let line = serde_json::to_string(rec)?;
            writeln!(w, "{line}").map_err(|e| Error::io("train_log.jsonl", e))?;
        }
        Ok(())
    }
}

/// Runs the continual-learning loop from scratch or from `options.resume`.
pub fn run_training(config: &TrainConfig, options: &TrainOptions) -> Result<TrainOutcome> {
    config.validate()?;
    crate::eval::run_parallel(options.workers, || run_inner(config, options))
}

fn run_inner(config: &TrainConfig, options: &TrainOptions) -> Result<TrainOutcome> {
    let hash = config.hash()?;
    let mut st = initial_state(config, &hash, options)?;
    let sched = &config.schedule;
    let t0 = Instant::now();

    let ck_dir = options.out_dir.as_ref().map(|d| d.join("checkpoints"));
    let mut log_file = LogFile { out: None };
    if let (Some(dir), Some(ck_dir)) = (&options.out_dir, &ck_dir) {
        fs::create_dir_all(ck_dir).map_err(|e| Error::io(ck_dir, e))?;
        let path = dir.join("train_log.jsonl");
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        log_file.out = Some(BufWriter::new(f));
    }

    let mut outcome = TrainOutcome {
        params: st.params.clone(),
        checkpoints: Vec::new(),
        checkpoint_paths: Vec::new(),
        log: Vec::with_capacity(sched.epochs * sched.steps_per_epoch),
        report: None,
    };
    for epoch in st.next_epoch..=sched.epochs {
        let task = sched.task_index(epoch)?;
        let mut cost_sum = 0.0;
        let mut kl_sum = 0.0;
        for step in 1..=sched.steps_per_epoch {
            let wrap = |e: Error| Error::Training {
                epoch,
                step,
                source: Box::new(e),
            };
            let size = sample_training_size(&sched.sizes, task, config.replay, &mut st.rng);
            let instances = (0..sched.batch_size_for(size))
                .map(|_| generate(config.problem, size, &mut st.rng))
                .collect::<Result<Vec<_>>>()
                .map_err(wrap)?;
            let exemplar = match config.regularization {
                RegularizationMode::None => None,
                _ => st.store.snapshot(),
            };
            let stats = training_step(
                &mut st.params,
                exemplar,
                config.alpha,
                config.kl_form,
                &instances,
                config.n_starts,
                &mut st.optimizer,
                &mut st.rng,
            )
            .map_err(wrap)?;
            cost_sum += stats.mean_cost;
            kl_sum += stats.kl_loss;
            let rec = TrainLogRecord {
                epoch,
                step,
                sampled_size: size,
                task_loss: stats.task_loss,
                kl_loss: stats.kl_loss,
                mean_cost: stats.mean_cost,
                elapsed_s: options.timestamps.then(|| t0.elapsed().as_secs_f64()),
            };
            log_file.write(&rec)?;
            outcome.log.push(rec);
        }
        maybe_update_exemplar(&mut st.store, epoch, &st.params);
        if options.progress {
            let steps = sched.steps_per_epoch as f64;
            eprintln!(
                "epoch {epoch}/{} task {task} mean_cost {:.4} kl {:.5} ({:.0}s)",
                sched.epochs,
                cost_sum / steps,
                kl_sum / steps,
                t0.elapsed().as_secs_f64()
            );
        }
        if epoch % sched.task_interval() == 0 {
            let ck = checkpoint(config, &hash, &st, epoch)?;
            if let Some(dir) = &ck_dir {
                let path = dir.join(format!("epoch-{epoch:05}.json"));
                ck.save(&path)?;
                outcome.checkpoint_paths.push(path);
            }
            outcome.checkpoints.push(ck);
        }
    }
    if let Some(w) = &mut log_file.out {
        w.flush().map_err(|e| Error::io("train_log.jsonl", e))?;
    }
    outcome.params = st.params;

    let mut sets = options.eval_sets.clone();
    if sets.is_empty() {
        if let Some(ev) = &config.eval {
            for s in ev.instance_sets(config.problem, sched)? {
                sets.push(EvalSet::new(s, options.workers)?);
            }
        }
    }
    if !sets.is_empty() {
        let opts = config.eval.clone().unwrap_or_default().options(options.workers);
        let last = outcome.checkpoint_paths.last().map(|p| p.display().to_string());
        let report = evaluate(&outcome.params, &sets, &opts, "trained", last)?;
        if let Some(dir) = &options.out_dir {
            let csv = dir.join("eval_report.csv");
            fs::write(&csv, report.to_csv()).map_err(|e| Error::io(&csv, e))?;
            let jl = dir.join("eval_report.jsonl");
            fs::write(&jl, report.to_jsonl()?).map_err(|e| Error::io(&jl, e))?;
        }
        outcome.report = Some(report);
    }
    Ok(outcome)
}
