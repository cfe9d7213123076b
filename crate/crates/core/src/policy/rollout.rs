use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decoder::{
    decoder_backward, glimpse_backward, pointer_backward, precompute, step_forward, DecoderGrad,
    DecoderPre, StepCache,
};
use super::encoder::{encode_cached, encode_backward, EncoderCache, Embeddings};
use super::PolicyParams;
use crate::error::{Error, Result};
use crate::instances::{ProblemKind, VrpInstance};
use crate::routing::{cycle_cost, ConstructionState, Tour};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    Greedy,
    Sample,
}

/// Multi-start first actions: nodes `0..n_starts` for TSP, customers
/// `1..=n_starts` (right after the depot) for CVRP.
pub fn start_nodes(instance: &VrpInstance, n_starts: usize) -> Result<Vec<usize>> {
    let customers = instance.customers();
    if n_starts == 0 || n_starts > customers {
        return Err(Error::Config(format!(
            "n_starts {n_starts} must be in 1..={customers} for this instance"
        )));
    }
    Ok(match instance.kind {
        ProblemKind::Tsp => (0..n_starts).collect(),
        ProblemKind::Cvrp => (1..=n_starts).collect(),
    })
}

/// Tours sampled or decoded for a batch of same-size instances.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutBatch {
    pub instances: Vec<VrpInstance>,
    pub n_starts: usize,
    /// `tours[b][s]`: tour of start `s` on instance `b`.
    pub tours: Vec<Vec<Tour>>,
    /// Log-probability of every decision (forced first actions excluded).
    pub step_logprobs: Vec<Vec<Vec<f64>>>,
    pub costs: Vec<Vec<f64>>,
}

impl RolloutBatch {
    pub fn tour_count(&self) -> usize {
        self.tours.iter().map(Vec::len).sum()
    }

    pub fn mean_cost(&self) -> f64 {
        let total: f64 = self.costs.iter().flatten().sum();
        total / self.tour_count() as f64
    }

    /// Per-instance minimum over starts.
    pub fn best_costs(&self) -> Vec<f64> {
        self.costs
            .iter()
            .map(|c| c.iter().cloned().fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// log p(τ|G) of every tour.
    pub fn tour_logprobs(&self) -> Vec<Vec<f64>> {
        self.step_logprobs
            .iter()
            .map(|inst| inst.iter().map(|steps| steps.iter().sum()).collect())
            .collect()
    }
}

/// Forward record of one instance, kept for the backward pass.
pub struct Trace {
    instance: VrpInstance,
    emb: Embeddings,
    enc: EncoderCache,
    pre: DecoderPre,
    steps: Vec<Vec<StepCache>>,
}

impl Trace {
    pub fn instance(&self) -> &VrpInstance {
        &self.instance
    }

    pub fn rollouts(&self) -> usize {
        self.steps.len()
    }

    /// Per-step log-probabilities of the taken actions for rollout `r`.
    pub fn step_logprobs(&self, r: usize) -> Vec<f64> {
        self.steps[r].iter().map(|s| s.logp[s.chosen]).collect()
    }

    /// Full per-step distributions for rollout `r`.
    pub fn distributions(&self, r: usize) -> Vec<StepDistribution> {
        self.steps[r].iter().map(StepDistribution::from).collect()
    }
}

/// One decision: feasible nodes (ascending), their log-probabilities and the
/// position of the taken node.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution {
    pub feasible: Vec<usize>,
    pub logp: Vec<f64>,
    pub chosen: usize,
}

impl StepDistribution {
    pub fn chosen_node(&self) -> usize {
        self.feasible[self.chosen]
    }

    pub fn chosen_logp(&self) -> f64 {
        self.logp[self.chosen]
    }

    /// Log-probability of `node`, `-inf` when it is masked.
    pub fn logp_of(&self, node: usize) -> f64 {
        match self.feasible.binary_search(&node) {
            Ok(i) => self.logp[i],
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

impl From<&StepCache> for StepDistribution {
    fn from(s: &StepCache) -> Self {
        StepDistribution {
            feasible: s.feasible.clone(),
            logp: s.logp.clone(),
            chosen: s.chosen,
        }
    }
}

enum Chooser<'r, R: Rng + ?Sized> {
    Greedy,
    Sample(&'r mut R),
}

fn greedy_index(logp: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in logp.iter().enumerate().skip(1) {
        if l > logp[best] {
            best = i;
        }
    }
    best
}

fn sample_index<R: Rng + ?Sized>(logp: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &l) in logp.iter().enumerate() {
        let p = l.exp();
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last
}

/// Which action to take next while decoding.
trait ActionSource {
    fn pick(&mut self, cache: &StepCache, step: usize) -> Result<usize>;
}

impl<R: Rng + ?Sized> ActionSource for Chooser<'_, R> {
    fn pick(&mut self, cache: &StepCache, _step: usize) -> Result<usize> {
        Ok(match self {
            Chooser::Greedy => greedy_index(&cache.logp),
            Chooser::Sample(rng) => sample_index(&cache.logp, *rng),
        })
    }
}

struct Forced<'t>(&'t [usize]);

impl ActionSource for Forced<'_> {
    fn pick(&mut self, cache: &StepCache, step: usize) -> Result<usize> {
        let action = *self.0.get(step).ok_or_else(|| {
            Error::Infeasible(vec![format!("tour ends before construction is complete (step {step})")])
        })?;
        cache
            .feasible
            .binary_search(&action)
            .map_err(|_| Error::InfeasibleReplay { step, action })
    }
}

fn initial_state(inst: &VrpInstance, start: usize) -> Result<ConstructionState<'_>> {
    let mut st = ConstructionState::with_start(inst, start);
    if inst.kind == ProblemKind::Cvrp {
        st.step(start)?;
    }
    Ok(st)
}

fn decode_one(
    params: &PolicyParams,
    pre: &DecoderPre,
    inst: &VrpInstance,
    start: usize,
    source: &mut dyn ActionSource,
) -> Result<(Tour, Vec<StepCache>)> {
    let mut st = initial_state(inst, start)?;
    let mut steps = Vec::new();
    let mut feasible = Vec::new();
    while !st.is_done() {
        st.feasible_nodes(&mut feasible);
        let mut cache = step_forward(params, pre, &st, std::mem::take(&mut feasible));
        cache.chosen = source.pick(&cache, steps.len())?;
        st.step(cache.feasible[cache.chosen])?;
        steps.push(cache);
    }
    Ok((st.into_tour(), steps))
}

fn check_batch(instances: &[VrpInstance], params: &PolicyParams) -> Result<()> {
    let first = instances
        .first()
        .ok_or(Error::Empty("rollout needs at least one instance"))?;
    for inst in instances {
        if inst.kind != params.config().kind {
            return Err(Error::Config(format!(
                "policy is for {} but instance {} is {}",
                params.config().kind,
                inst.id,
                inst.kind
            )));
        }
        if inst.customers() != first.customers() {
            return Err(Error::Config("a rollout batch must share one problem size".into()));
        }
    }
    Ok(())
}

fn run_batch<R: Rng + ?Sized>(
    params: &PolicyParams,
    instances: &[VrpInstance],
    mode: DecodeMode,
    n_starts: usize,
    rng: &mut R,
    keep: bool,
) -> Result<(RolloutBatch, Vec<Trace>)> {
    check_batch(instances, params)?;
    let mut batch = RolloutBatch {
        instances: instances.to_vec(),
        n_starts,
        tours: Vec::with_capacity(instances.len()),
        step_logprobs: Vec::with_capacity(instances.len()),
        costs: Vec::with_capacity(instances.len()),
    };
    let mut traces = Vec::new();
    for inst in instances {
        let starts = start_nodes(inst, n_starts)?;
        let (emb, enc) = encode_cached(params, inst, keep)?;
        let pre = precompute(params, &emb);
        let mut tours = Vec::with_capacity(n_starts);
        let mut logps = Vec::with_capacity(n_starts);
        let mut costs = Vec::with_capacity(n_starts);
        let mut all_steps = Vec::new();
        for &s in &starts {
            let mut chooser = match mode {
                DecodeMode::Greedy => Chooser::Greedy,
                DecodeMode::Sample => Chooser::Sample(&mut *rng),
            };
            let (tour, steps) = decode_one(params, &pre, inst, s, &mut chooser)?;
            logps.push(steps.iter().map(|c| c.logp[c.chosen]).collect());
            costs.push(cycle_cost(inst, tour.nodes()));
            tours.push(tour);
            if keep {
                all_steps.push(steps);
            }
        }
        batch.tours.push(tours);
        batch.step_logprobs.push(logps);
        batch.costs.push(costs);
        if let Some(enc) = enc {
            traces.push(Trace {
                instance: inst.clone(),
                emb,
                enc,
                pre,
                steps: all_steps,
            });
        }
    }
    Ok((batch, traces))
}

/// Decodes `n_starts` tours per instance, greedily (argmax, smallest index on
/// ties) or by sampling from the policy. The generator is only used when
/// sampling.
pub fn rollout<R: Rng + ?Sized>(
    params: &PolicyParams,
    instances: &[VrpInstance],
    mode: DecodeMode,
    n_starts: usize,
    rng: &mut R,
) -> Result<RolloutBatch> {
    Ok(run_batch(params, instances, mode, n_starts, rng, false)?.0)
}

/// Like [`rollout`] but also keeps the forward record for [`gradient`].
pub fn trace_rollout<R: Rng + ?Sized>(
    params: &PolicyParams,
    instances: &[VrpInstance],
    mode: DecodeMode,
    n_starts: usize,
    rng: &mut R,
) -> Result<(RolloutBatch, Vec<Trace>)> {
    run_batch(params, instances, mode, n_starts, rng, true)
}

fn split_tour(inst: &VrpInstance, tour: &Tour) -> Result<(usize, Vec<usize>)> {
    let nodes = tour.nodes();
    match inst.kind {
        ProblemKind::Tsp => {
            let (&start, rest) = nodes
                .split_first()
                .ok_or_else(|| Error::Infeasible(vec!["tour is empty".into()]))?;
            if start >= inst.node_count() {
                return Err(Error::InfeasibleReplay {
                    step: 0,
                    action: start,
                });
            }
            Ok((start, rest.to_vec()))
        }
        ProblemKind::Cvrp => {
            if nodes.len() < 2 || nodes[0] != 0 || nodes[1] == 0 || nodes[1] >= inst.node_count() {
                return Err(Error::Infeasible(vec![
                    "CVRP tour must start with the depot followed by a customer".into(),
                ]));
            }
            Ok((nodes[1], nodes[2..].to_vec()))
        }
    }
}

fn replay(
    params: &PolicyParams,
    inst: &VrpInstance,
    pre: &DecoderPre,
    tour: &Tour,
) -> Result<Vec<StepCache>> {
    let (start, rest) = split_tour(inst, tour)?;
    let (replayed, steps) = decode_one(params, pre, inst, start, &mut Forced(&rest))?;
    if replayed.len() != tour.len() {
        return Err(Error::Infeasible(vec![format!(
            "tour has {} nodes after construction finished at {}",
            tour.len(),
            replayed.len()
        )]));
    }
    Ok(steps)
}

/// Teacher-forced replay: the policy's log-probability of each decision of
/// `tour` (forced first action excluded).
pub fn log_probs_of_tour(params: &PolicyParams, instance: &VrpInstance, tour: &Tour) -> Result<Vec<f64>> {
    let (emb, _) = encode_cached(params, instance, false)?;
    let pre = precompute(params, &emb);
    Ok(replay(params, instance, &pre, tour)?
        .iter()
        .map(|c| c.logp[c.chosen])
        .collect())
}

/// Teacher-forced per-step distributions of several tours on one instance.
pub fn replay_distributions(
    params: &PolicyParams,
    instance: &VrpInstance,
    tours: &[Tour],
) -> Result<Vec<Vec<StepDistribution>>> {
    let (emb, _) = encode_cached(params, instance, false)?;
    let pre = precompute(params, &emb);
    tours
        .iter()
        .map(|t| Ok(replay(params, instance, &pre, t)?.iter().map(StepDistribution::from).collect()))
        .collect()
}

/// Teacher-forced forward record of given tours, usable with [`gradient`].
pub fn trace_tours(params: &PolicyParams, instance: &VrpInstance, tours: &[Tour]) -> Result<Trace> {
    let (emb, enc) = encode_cached(params, instance, true)?;
    let pre = precompute(params, &emb);
    let steps = tours
        .iter()
        .map(|t| replay(params, instance, &pre, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trace {
        instance: instance.clone(),
        emb,
        enc: enc.expect("cache requested"),
        pre,
        steps,
    })
}

/// Coefficients of a loss that is linear in the per-step log-probabilities:
/// `Σ_t chosen[t] · log p_t(a_t) + Σ_t Σ_v full[t][v] · log p_t(v)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TourWeights {
    pub chosen: Vec<f64>,
    /// Optional dense per-node coefficients (masked nodes must be zero).
    pub full: Option<Vec<Vec<f64>>>,
}

impl TourWeights {
    pub fn chosen_only(chosen: Vec<f64>) -> Self {
        TourWeights { chosen, full: None }
    }

    /// `self + scale * other`, step by step.
    pub fn add_scaled(&mut self, scale: f64, other: &TourWeights) {
        for (a, b) in self.chosen.iter_mut().zip(&other.chosen) {
            *a += scale * b;
        }
        if let Some(of) = &other.full {
            let full = self
                .full
                .get_or_insert_with(|| of.iter().map(|r| vec![0.0; r.len()]).collect());
            for (row, orow) in full.iter_mut().zip(of) {
                for (a, b) in row.iter_mut().zip(orow) {
                    *a += scale * b;
                }
            }
        }
    }
}

/// Loss specification over a traced batch: `tours[b][r]` weights rollout `r`
/// of instance `b`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossSpec {
    pub tours: Vec<Vec<TourWeights>>,
}

impl LossSpec {
    /// Evaluates the loss on the recorded forward pass.
    pub fn value(&self, traces: &[Trace]) -> f64 {
        let mut total = 0.0;
        for (trace, weights) in traces.iter().zip(&self.tours) {
            for (steps, w) in trace.steps.iter().zip(weights) {
                for (t, c) in steps.iter().enumerate() {
                    total += w.chosen[t] * c.logp[c.chosen];
                    if let Some(full) = &w.full {
                        for (i, &v) in c.feasible.iter().enumerate() {
                            if full[t][v] != 0.0 {
                                total += full[t][v] * c.logp[i];
                            }
                        }
                    }
                }
            }
        }
        total
    }

    /// `a * self + b * other` with the same shape.
    pub fn blend(&self, a: f64, other: &LossSpec, b: f64) -> LossSpec {
        let tours = self
            .tours
            .iter()
            .zip(&other.tours)
            .map(|(x, y)| {
                x.iter()
                    .zip(y)
                    .map(|(wx, wy)| {
                        let mut out = TourWeights {
                            chosen: vec![0.0; wx.chosen.len()],
                            full: None,
                        };
                        out.add_scaled(a, wx);
                        out.add_scaled(b, wy);
                        out
                    })
                    .collect()
            })
            .collect();
        LossSpec { tours }
    }
}

fn trace_gradient(params: &PolicyParams, trace: &Trace, weights: &[TourWeights], grad: &mut [f64]) -> Result<()> {
    if weights.len() != trace.steps.len() {
        return Err(Error::Config("loss specification does not match the rollout count".into()));
    }
    let d = params.config().embed_dim;
    let mut acc = DecoderGrad::new(trace.emb.n, d);
    let flat: Vec<&StepCache> = trace.steps.iter().flatten().collect();
    let mut id = 0;
    let mut dlogp = Vec::new();
    for (steps, w) in trace.steps.iter().zip(weights) {
        if w.chosen.len() != steps.len() {
            return Err(Error::Config("tour weights do not match the decision count".into()));
        }
        for (t, c) in steps.iter().enumerate() {
            dlogp.clear();
            dlogp.resize(c.feasible.len(), 0.0);
            dlogp[c.chosen] = w.chosen[t];
            if let Some(full) = &w.full {
                for (i, &v) in c.feasible.iter().enumerate() {
                    dlogp[i] += full[t][v];
                }
            }
            if dlogp.iter().any(|&x| x != 0.0) {
                pointer_backward(params, &trace.pre, c, &dlogp, &mut acc, id);
            }
            id += 1;
        }
    }
    glimpse_backward(params, &trace.pre, &flat, &mut acc, grad);
    let dh = decoder_backward(params, &trace.emb, &acc, grad);
    encode_backward(params, &trace.instance, &trace.enc, dh, grad);
    Ok(())
}

/// Exact reverse-mode gradient of `spec` with respect to every weight.
/// Per-instance gradients are summed in batch order whatever the number of
/// threads, so the result does not depend on parallelism.
pub fn gradient(params: &PolicyParams, traces: &[Trace], spec: &LossSpec) -> Result<Vec<f64>> {
    if traces.len() != spec.tours.len() {
        return Err(Error::Config("loss specification does not match the traced batch".into()));
    }
    let len = params.len();
    let mut grad = vec![0.0; len];
    if rayon::current_num_threads() <= 1 {
        let mut part = vec![0.0; len];
        for (trace, weights) in traces.iter().zip(&spec.tours) {
            part.fill(0.0);
            trace_gradient(params, trace, weights, &mut part)?;
            grad.iter_mut().zip(&part).for_each(|(g, p)| *g += p);
        }
    } else {
        let parts = traces
            .par_iter()
            .zip(&spec.tours)
            .map(|(trace, weights)| {
                let mut part = vec![0.0; len];
                trace_gradient(params, trace, weights, &mut part).map(|_| part)
            })
            .collect::<Result<Vec<_>>>()?;
        for part in parts {
            grad.iter_mut().zip(&part).for_each(|(g, p)| *g += p);
        }
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numeric("gradient"));
    }
    Ok(grad)
}
