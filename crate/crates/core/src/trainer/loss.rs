use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{
    gradient, replay_distributions, LossSpec, PolicyParams, RolloutBatch, StepDistribution, TourWeights,
    Trace,
};

/// Which actions the exemplar divergence sums over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KlForm {
    /// Only the actions taken along each sampled tour.
    #[default]
    Chosen,
    /// Every feasible action of every step.
    Full,
}

/// A loss value together with its linear form in the current policy's
/// log-probabilities (what [`gradient`] differentiates).
#[derive(Clone, Debug, PartialEq)]
pub struct LossTerm {
    pub value: f64,
    pub spec: LossSpec,
}

/// Per-instance shared-baseline advantages `C(τ) - mean_s C(τ_s)`.
pub fn advantages(batch: &RolloutBatch) -> Result<Vec<Vec<f64>>> {
    if batch.n_starts < 2 {
        return Err(Error::DegenerateBaseline {
            n_starts: batch.n_starts,
        });
    }
    Ok(batch
        .costs
        .iter()
        .map(|c| {
            let b = c.iter().sum::<f64>() / c.len() as f64;
            c.iter().map(|x| x - b).collect()
        })
        .collect())
}

/// REINFORCE surrogate with the multi-start mean baseline: mean over tours
/// of `(C - b) * log p(τ)`, whose gradient is the policy gradient of the
/// expected cost.
pub fn task_loss(batch: &RolloutBatch) -> Result<LossTerm> {
    let adv = advantages(batch)?;
    let count = batch.tour_count() as f64;
    let mut value = 0.0;
    let mut tours = Vec::with_capacity(adv.len());
    for (a_inst, lp_inst) in adv.iter().zip(&batch.step_logprobs) {
        let mut row = Vec::with_capacity(a_inst.len());
        for (&a, lps) in a_inst.iter().zip(lp_inst) {
            value += a * lps.iter().sum::<f64>();
            row.push(TourWeights::chosen_only(vec![a / count; lps.len()]));
        }
        tours.push(row);
    }
    Ok(LossTerm {
        value: value / count,
        spec: LossSpec { tours },
    })
}

fn check_masks(ex: &StepDistribution, cur: &StepDistribution, step: usize) -> Result<()> {
    if ex.feasible != cur.feasible {
        let action = cur.chosen_node();
        return Err(Error::InfeasibleReplay { step, action });
    }
    Ok(())
}

fn step_kl(ex: &StepDistribution, cur: &StepDistribution, form: KlForm) -> f64 {
    match form {
        KlForm::Chosen => {
            let le = ex.chosen_logp();
            le.exp() * (le - cur.chosen_logp())
        }
        KlForm::Full => ex
            .logp
            .iter()
            .zip(&cur.logp)
            .map(|(le, lc)| le.exp() * (le - lc))
            .sum(),
    }
}

/// Exemplar divergence on the traced batch: `(1/B) Σ_τ Σ_steps p_ex (log p_ex -
/// log p_cur)` with `B` the number of tours. Exemplar terms are constants.
pub fn kl_term(exemplar: &PolicyParams, batch: &RolloutBatch, traces: &[Trace], form: KlForm) -> Result<LossTerm> {
    let count = batch.tour_count() as f64;
    let mut value = 0.0;
    let mut tours = Vec::with_capacity(traces.len());
    for (trace, inst_tours) in traces.iter().zip(&batch.tours) {
        let ex_all = replay_distributions(exemplar, trace.instance(), inst_tours)?;
        let n = trace.instance().node_count();
        let mut row = Vec::with_capacity(inst_tours.len());
        for (r, ex_steps) in ex_all.iter().enumerate() {
            let cur_steps = trace.distributions(r);
            let mut w = TourWeights {
                chosen: vec![0.0; cur_steps.len()],
                full: None,
            };
            let mut full = Vec::new();
            for (t, (ex, cur)) in ex_steps.iter().zip(&cur_steps).enumerate() {
                check_masks(ex, cur, t)?;
                value += step_kl(ex, cur, form);
                match form {
                    KlForm::Chosen => w.chosen[t] = -ex.chosen_logp().exp() / count,
                    KlForm::Full => {
                        let mut coef = vec![0.0; n];
                        for (&v, le) in ex.feasible.iter().zip(&ex.logp) {
                            coef[v] = -le.exp() / count;
                        }
                        full.push(coef);
                    }
                }
            }
            if form == KlForm::Full {
                w.full = Some(full);
            }
            row.push(w);
        }
        tours.push(row);
    }
    let value = value / count;
    if !value.is_finite() {
        return Err(Error::numeric("exemplar divergence"));
    }
    Ok(LossTerm {
        value,
        spec: LossSpec { tours },
    })
}

/// Value of the exemplar divergence for the tours of `batch`, with both
/// policies' probabilities obtained by teacher-forced replay.
pub fn kl_regularization_loss(
    current: &PolicyParams,
    exemplar: &PolicyParams,
    batch: &RolloutBatch,
    form: KlForm,
) -> Result<f64> {
    let mut total = 0.0;
    for (inst, tours) in batch.instances.iter().zip(&batch.tours) {
        let ex = replay_distributions(exemplar, inst, tours)?;
        let cur = replay_distributions(current, inst, tours)?;
        for (ex_steps, cur_steps) in ex.iter().zip(&cur) {
            for (t, (e, c)) in ex_steps.iter().zip(cur_steps).enumerate() {
                check_masks(e, c, t)?;
                total += step_kl(e, c, form);
            }
        }
    }
    let value = total / batch.tour_count() as f64;
    if !value.is_finite() {
        return Err(Error::numeric("exemplar divergence"));
    }
    Ok(value)
}

/// `α L_R + (1 - α) L_T`; without a regularization term the task loss is used
/// unscaled (effective α = 0).
pub fn combined_spec(task: &LossTerm, reg: Option<&LossTerm>, alpha: f64) -> LossSpec {
    match reg {
        Some(r) if alpha > 0.0 => r.spec.blend(alpha, &task.spec, 1.0 - alpha),
        _ => task.spec.clone(),
    }
}

/// Gradient of the combined loss on the traced batch.
pub fn combined_gradient(
    params: &PolicyParams,
    traces: &[Trace],
    task: &LossTerm,
    reg: Option<&LossTerm>,
    alpha: f64,
) -> Result<Vec<f64>> {
    gradient(params, traces, &combined_spec(task, reg, alpha))
}
