//! Evaluation protocol: greedy multi-start decoding with optional ×8
//! augmentation, optimality gaps against a reference solver, report
//! formatting and forgetting curves across checkpoints.

mod report;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{augment, AugmentationId, InstanceSet, VrpInstance};
use crate::policy::{rollout, DecodeMode, PolicyParams};
use crate::routing::{brute_force_optimal, cycle_cost, nearest_neighbor, oracle_limit, two_opt};

pub use report::{EvalReport, SizeRecord};

/// `100 * (obj - reference) / reference`.
pub fn gap(obj: f64, reference: f64) -> Result<f64> {
    if !(reference > 0.0) || !reference.is_finite() {
        return Err(Error::Config(format!("gap reference must be positive, got {reference}")));
    }
    Ok(100.0 * (obj - reference) / reference)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMethod {
    BruteForce,
    TwoOptNearestNeighbor,
}

impl std::fmt::Display for ReferenceMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReferenceMethod::BruteForce => "brute_force",
            ReferenceMethod::TwoOptNearestNeighbor => "two_opt_nn",
        })
    }
}

/// Reference cost of one instance: exact when the oracle accepts the size,
/// otherwise 2-opt applied to nearest neighbor.
pub fn reference_cost(instance: &VrpInstance) -> Result<(f64, ReferenceMethod)> {
    if instance.customers() <= oracle_limit(instance.kind) {
        Ok((brute_force_optimal(instance)?.1, ReferenceMethod::BruteForce))
    } else {
        let tour = two_opt(instance, &nearest_neighbor(instance));
        Ok((cycle_cost(instance, tour.nodes()), ReferenceMethod::TwoOptNearestNeighbor))
    }
}

/// An instance set with its reference costs, computed once and shared by
/// every method compared on it.
#[derive(Clone, Debug)]
pub struct EvalSet {
    pub set: InstanceSet,
    pub hash: String,
    pub reference: Vec<f64>,
    pub method: ReferenceMethod,
}

impl EvalSet {
    pub fn new(set: InstanceSet, workers: usize) -> Result<Self> {
        if set.instances.is_empty() {
            return Err(Error::Empty("evaluation set has no instances"));
        }
        let refs = run_parallel(workers, || {
            set.instances.par_iter().map(reference_cost).collect::<Result<Vec<_>>>()
        })?;
        let method = refs[0].1;
        Ok(EvalSet {
            hash: set.hash()?,
            reference: refs.into_iter().map(|r| r.0).collect(),
            method,
            set,
        })
    }

    pub fn size(&self) -> usize {
        self.set.size
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalOptions {
    /// Starts per instance; `None` uses every customer.
    pub n_starts: Option<usize>,
    pub augment: bool,
    pub workers: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            n_starts: None,
            augment: true,
            workers: 1,
        }
    }
}

/// Runs `f` inside a pool of `workers` threads (at least one).
pub(crate) fn run_parallel<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Best greedy cost of one instance over starts and (optionally) the eight
/// symmetries of the unit square. Costs are measured on the original
/// coordinates.
pub fn best_cost(params: &PolicyParams, instance: &VrpInstance, n_starts: Option<usize>, use_augmentation: bool) -> Result<f64> {
    let starts = n_starts.unwrap_or(instance.customers()).min(instance.customers());
    let transforms: Vec<AugmentationId> = if use_augmentation {
        AugmentationId::all().collect()
    } else {
        vec![AugmentationId::IDENTITY]
    };
    let mut best = f64::INFINITY;
    let mut unused = rand::rngs::mock::StepRng::new(0, 0);
    for t in transforms {
        let inst = augment(instance, t);
        let rb = rollout(params, std::slice::from_ref(&inst), DecodeMode::Greedy, starts, &mut unused)?;
        for tour in &rb.tours[0] {
            best = best.min(cycle_cost(instance, tour.nodes()));
        }
    }
    Ok(best)
}

/// Per-instance best costs on a set.
pub fn instance_best_costs(params: &PolicyParams, set: &InstanceSet, opts: &EvalOptions) -> Result<Vec<f64>> {
    if set.kind != params.config().kind {
        return Err(Error::Config(format!(
            "policy is for {} but the evaluation set is {}",
            params.config().kind,
            set.kind
        )));
    }
    run_parallel(opts.workers, || {
        set.instances
            .par_iter()
            .map(|inst| best_cost(params, inst, opts.n_starts, opts.augment))
            .collect()
    })
}

/// Evaluates one set: mean objective, mean gap and wall time.
pub fn evaluate_set(params: &PolicyParams, eval: &EvalSet, opts: &EvalOptions) -> Result<SizeRecord> {
    let t0 = Instant::now();
    let costs = instance_best_costs(params, &eval.set, opts)?;
    let wall_time = t0.elapsed().as_secs_f64();
    let n = costs.len() as f64;
    let mut gap_sum = 0.0;
    for (c, r) in costs.iter().zip(&eval.reference) {
        gap_sum += gap(*c, *r)?;
    }
    Ok(SizeRecord {
        size: eval.size(),
        instance_count: costs.len(),
        mean_obj: costs.iter().sum::<f64>() / n,
        mean_gap: gap_sum / n,
        wall_time,
        reference: eval.method,
        reference_obj: eval.reference.iter().sum::<f64>() / n,
        instances_hash: eval.hash.clone(),
    })
}

/// Evaluates a policy on several sizes.
pub fn evaluate(
    params: &PolicyParams,
    sets: &[EvalSet],
    opts: &EvalOptions,
    method: impl Into<String>,
    checkpoint: Option<String>,
) -> Result<EvalReport> {
    if sets.is_empty() {
        return Err(Error::Empty("no evaluation sets"));
    }
    let records = sets
        .iter()
        .map(|s| evaluate_set(params, s, opts))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::new(method.into(), checkpoint, records)
}

/// Mean objective per size after each checkpoint, and the resulting
/// forgetting `final - best` per size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgettingCurve {
    pub sizes: Vec<usize>,
    pub checkpoints: Vec<String>,
    /// `series[k][c]`: mean objective on size `sizes[k]` after checkpoint `c`.
    pub series: Vec<Vec<f64>>,
    pub forgetting: Vec<f64>,
}

impl ForgettingCurve {
    pub fn from_series(sizes: Vec<usize>, checkpoints: Vec<String>, series: Vec<Vec<f64>>) -> Result<Self> {
        if series.iter().any(|s| s.is_empty()) || series.len() != sizes.len() {
            return Err(Error::Empty("forgetting curve needs one non-empty series per size"));
        }
        let forgetting = series
            .iter()
            .map(|s| {
                let best = s.iter().cloned().fold(f64::INFINITY, f64::min);
                s[s.len() - 1] - best
            })
            .collect();
        Ok(ForgettingCurve {
            sizes,
            checkpoints,
            series,
            forgetting,
        })
    }

    pub fn forgetting_at(&self, size: usize) -> Option<f64> {
        self.sizes.iter().position(|&s| s == size).map(|i| self.forgetting[i])
    }
}

/// Evaluates each checkpoint (in order) on every set.
pub fn forgetting_curve(
    trail: &[(String, PolicyParams)],
    sets: &[EvalSet],
    opts: &EvalOptions,
) -> Result<ForgettingCurve> {
    if trail.is_empty() {
        return Err(Error::Empty("checkpoint trail is empty"));
    }
    let mut series = vec![Vec::with_capacity(trail.len()); sets.len()];
    for (_, params) in trail {
        for (k, set) in sets.iter().enumerate() {
            series[k].push(evaluate_set(params, set, opts)?.mean_obj);
        }
    }
    ForgettingCurve::from_series(
        sets.iter().map(EvalSet::size).collect(),
        trail.iter().map(|(name, _)| name.clone()).collect(),
        series,
    )
}
