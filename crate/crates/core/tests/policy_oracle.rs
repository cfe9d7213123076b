//! The policy network against the reference forward pass in `common` and
//! against finite differences.

use clroute::instances::{generate_cvrp, generate_tsp, ProblemKind, VrpInstance};
use clroute::policy::{
    gradient, replay_distributions, rollout, trace_tours, DecodeMode, LossSpec, PolicyConfig,
    PolicyParams, TourWeights,
};
use clroute::routing::{ConstructionState, Tour};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::Naive;

fn small(kind: ProblemKind, layers: usize) -> PolicyConfig {
    PolicyConfig {
        kind,
        embed_dim: 8,
        n_heads: 2,
        n_encoder_layers: layers,
        feedforward_dim: 12,
        logit_clip: 10.0,
    }
}

fn instances(kind: ProblemKind, n: usize, count: usize, seed: u64) -> Vec<VrpInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| match kind {
            ProblemKind::Tsp => generate_tsp(n, &mut rng).unwrap(),
            ProblemKind::Cvrp => generate_cvrp(n, &mut rng).unwrap(),
        })
        .collect()
}

#[test]
fn matches_independent_forward() {
    for kind in [ProblemKind::Tsp, ProblemKind::Cvrp] {
        for layers in [0, 1, 2] {
            let p = PolicyParams::init(small(kind, layers), &mut ChaCha8Rng::seed_from_u64(layers as u64))
                .unwrap();
            let naive = Naive { p: &p };
            let insts = instances(kind, 7, 3, 11);
            let rb = rollout(&p, &insts, DecodeMode::Sample, 3, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
            for (inst, tours) in insts.iter().zip(&rb.tours) {
                let h = naive.encode(inst);
                let dists = replay_distributions(&p, inst, tours).unwrap();
                for (tour, steps) in tours.iter().zip(&dists) {
                    let nodes = tour.nodes();
                    let skip = if kind == ProblemKind::Cvrp { 2 } else { 1 };
                    let mut st = ConstructionState::with_start(inst, nodes[skip - 1]);
                    if kind == ProblemKind::Cvrp {
                        st.step(nodes[1]).unwrap();
                    }
                    for (step, &a) in steps.iter().zip(&nodes[skip..]) {
                        let want = naive.step(&h, &st);
                        for (j, w) in want.iter().enumerate() {
                            let got = step.logp_of(j).exp();
                            assert!((got - w).abs() < 1e-12, "{kind} layers={layers}: {got} vs {w}");
                        }
                        st.step(a).unwrap();
                    }
                }
            }
        }
    }
}

#[test]
fn three_node_tsp_decision_is_two_logit_softmax() {
    // one head, embed 2, no encoder layers; weights chosen by hand
    let cfg = PolicyConfig {
        kind: ProblemKind::Tsp,
        embed_dim: 2,
        n_heads: 1,
        n_encoder_layers: 0,
        feedforward_dim: 1,
        logit_clip: 10.0,
    };
    let mut p = PolicyParams::init(cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let mut set = |name: &str, vals: &[f64]| {
        let seg = p.tensor(name).unwrap();
        p.weights_mut()[seg.range()].copy_from_slice(vals);
    };
    let eye = [1.0, 0.0, 0.0, 1.0];
    set("embed.node.w", &eye);
    set("embed.node.b", &[0.0, 0.0]);
    for name in ["dec.glimpse.wk", "dec.glimpse.wv", "dec.glimpse.wo", "dec.pointer.wk", "dec.query.current"] {
        set(name, &eye);
    }
    set("dec.query.graph", &[0.0; 4]);
    set("dec.query.first", &[0.0; 4]);

    let inst = VrpInstance::tsp("tiny", vec![[0.0, 0.0], [1.0, 0.0], [0.0, 0.5]]).unwrap();
    let dists = replay_distributions(&p, &inst, &[Tour(vec![0, 1, 2])]).unwrap();
    let first = &dists[0][0];
    assert_eq!(first.feasible, vec![1, 2]);

    // query = h0 = (0,0): glimpse weights are uniform, o = g = mean of h1,h2 = (0.5, 0.25)
    let s2 = 2f64.sqrt();
    let u1 = 10.0 * ((0.5 * 1.0 + 0.25 * 0.0) / s2).tanh();
    let u2 = 10.0 * ((0.5 * 0.0 + 0.25 * 0.5) / s2).tanh();
    let p1 = u1.exp() / (u1.exp() + u2.exp());
    assert!((first.logp[0].exp() - p1).abs() < 1e-14);
    assert!((first.logp[1].exp() - (1.0 - p1)).abs() < 1e-14);
    assert_eq!(dists[0][1].logp, vec![0.0]);
}

fn random_spec<R: Rng>(traces: &[clroute::policy::Trace], full: bool, rng: &mut R) -> LossSpec {
    LossSpec {
        tours: traces
            .iter()
            .map(|tr| {
                (0..tr.rollouts())
                    .map(|r| {
                        let steps = tr.step_logprobs(r).len();
                        let n = tr.instance().node_count();
                        TourWeights {
                            chosen: (0..steps).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                            full: full.then(|| {
                                (0..steps)
                                    .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                                    .collect()
                            }),
                        }
                    })
                    .collect()
            })
            .collect(),
    }
}

fn loss_at(p: &PolicyParams, insts: &[VrpInstance], tours: &[Vec<Tour>], spec: &LossSpec) -> f64 {
    let traces: Vec<_> = insts
        .iter()
        .zip(tours)
        .map(|(i, t)| trace_tours(p, i, t).unwrap())
        .collect();
    spec.value(&traces)
}

#[test]
fn gradient_matches_finite_differences() {
    let h = 1e-5;
    for kind in [ProblemKind::Tsp, ProblemKind::Cvrp] {
        for full in [false, true] {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let p = PolicyParams::init(small(kind, 2), &mut rng).unwrap();
            let insts = instances(kind, 6, 2, 5);
            let rb = rollout(&p, &insts, DecodeMode::Sample, 3, &mut rng).unwrap();
            let traces: Vec<_> = insts
                .iter()
                .zip(&rb.tours)
                .map(|(i, t)| trace_tours(&p, i, t).unwrap())
                .collect();
            let spec = random_spec(&traces, full, &mut rng);
            let grad = gradient(&p, &traces, &spec).unwrap();
            let mut checked = 0;
            let mut worst: f64 = 0.0;
            while checked < 30 {
                let i = rng.gen_range(0..p.len());
                let mut plus = p.clone();
                plus.weights_mut()[i] += h;
                let mut minus = p.clone();
                minus.weights_mut()[i] -= h;
                let fd = (loss_at(&plus, &insts, &rb.tours, &spec) - loss_at(&minus, &insts, &rb.tours, &spec))
                    / (2.0 * h);
                let scale = fd.abs().max(grad[i].abs());
                if scale < 1e-6 {
                    continue;
                }
                worst = worst.max((fd - grad[i]).abs() / scale);
                checked += 1;
            }
            assert!(worst <= 1e-4, "{kind} full={full}: worst relative error {worst}");
        }
    }
}

#[test]
fn zero_spec_gives_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = PolicyParams::init(small(ProblemKind::Cvrp, 1), &mut rng).unwrap();
    let insts = instances(ProblemKind::Cvrp, 5, 2, 3);
    let rb = rollout(&p, &insts, DecodeMode::Sample, 2, &mut rng).unwrap();
    let traces: Vec<_> = insts
        .iter()
        .zip(&rb.tours)
        .map(|(i, t)| trace_tours(&p, i, t).unwrap())
        .collect();
    let spec = LossSpec {
        tours: traces
            .iter()
            .map(|tr| {
                (0..tr.rollouts())
                    .map(|r| TourWeights::chosen_only(vec![0.0; tr.step_logprobs(r).len()]))
                    .collect()
            })
            .collect(),
    };
    assert!(gradient(&p, &traces, &spec).unwrap().iter().all(|&g| g == 0.0));
}
