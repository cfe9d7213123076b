//! Encoder-decoder attention policy for node-by-node tour construction.
//!
//! The encoder is a stack of multi-head self-attention layers with residual
//! connections, layer normalization and a ReLU feed-forward block. The decoder
//! builds a query from a problem-specific context, attends over the node
//! embeddings (glimpse) and scores feasible nodes with a tanh-clipped pointer.
//! All weights live in one flat `f64` vector so that gradients, optimizer
//! state and checkpoints share a single layout.

mod checkpoint;
mod decoder;
mod encoder;
pub(crate) mod linalg;
mod rollout;

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::ProblemKind;

pub use checkpoint::{
    Checkpoint, ExemplarSnapshot, OptimizerSnapshot, RngState, CHECKPOINT_VERSION,
};
pub use encoder::{encode, Embeddings};
pub use rollout::{
    gradient, log_probs_of_tour, replay_distributions, rollout, start_nodes, trace_rollout, trace_tours,
    DecodeMode, LossSpec, RolloutBatch, StepDistribution, TourWeights, Trace,
};

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: ProblemKind,
    pub embed_dim: usize,
    pub n_heads: usize,
    pub n_encoder_layers: usize,
    pub feedforward_dim: usize,
    pub logit_clip: f64,
}

impl PolicyConfig {
    pub fn new(kind: ProblemKind) -> Self {
        PolicyConfig {
            kind,
            embed_dim: 64,
            n_heads: 4,
            n_encoder_layers: 3,
            feedforward_dim: 256,
            logit_clip: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.n_heads == 0 || self.feedforward_dim == 0 {
            return Err(Error::Config("policy dimensions must be positive".into()));
        }
        if self.embed_dim % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "embed_dim {} is not divisible by n_heads {}",
                self.embed_dim, self.n_heads
            )));
        }
        if !(self.logit_clip > 0.0) || !self.logit_clip.is_finite() {
            return Err(Error::Config("logit_clip must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Location of one weight tensor (row-major, `rows` = fan-in) in the flat
/// parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seg {
    pub off: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Seg {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.off..self.off + self.len()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct LayerLayout {
    pub wq: Seg,
    pub wk: Seg,
    pub wv: Seg,
    pub wo: Seg,
    pub bo: Seg,
    pub ln1_gain: Seg,
    pub ln1_bias: Seg,
    pub w1: Seg,
    pub b1: Seg,
    pub w2: Seg,
    pub b2: Seg,
    pub ln2_gain: Seg,
    pub ln2_bias: Seg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Init {
    /// Uniform in +-1/sqrt(fan_in).
    Uniform { fan_in: usize },
    Ones,
    Zeros,
}

#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub node_w: Seg,
    pub node_b: Seg,
    pub depot_w: Option<Seg>,
    pub depot_b: Option<Seg>,
    pub layers: Vec<LayerLayout>,
    pub glimpse_k: Seg,
    pub glimpse_v: Seg,
    pub glimpse_out: Seg,
    pub pointer_k: Seg,
    pub query_graph: Seg,
    pub query_first: Option<Seg>,
    pub query_current: Seg,
    pub query_capacity: Option<Seg>,
    pub total: usize,
    entries: Vec<(String, Seg, Init)>,
}

struct LayoutBuilder {
    next: usize,
    entries: Vec<(String, Seg, Init)>,
}

impl LayoutBuilder {
    fn add(&mut self, name: impl Into<String>, rows: usize, cols: usize, init: Init) -> Seg {
        let seg = Seg {
            off: self.next,
            rows,
            cols,
        };
        self.next += seg.len();
        self.entries.push((name.into(), seg, init));
        seg
    }

    fn matrix(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> Seg {
        self.add(name, rows, cols, Init::Uniform { fan_in: rows })
    }
}

impl Layout {
    pub(crate) fn new(cfg: &PolicyConfig) -> Self {
        let d = cfg.embed_dim;
        let f = cfg.feedforward_dim;
        let mut b = LayoutBuilder {
            next: 0,
            entries: Vec::new(),
        };
        let (node_in, has_depot) = match cfg.kind {
            ProblemKind::Tsp => (2, false),
            ProblemKind::Cvrp => (3, true),
        };
        let node_w = b.matrix("embed.node.w", node_in, d);
        let node_b = b.add("embed.node.b", 1, d, Init::Uniform { fan_in: node_in });
        let (depot_w, depot_b) = if has_depot {
            (
                Some(b.matrix("embed.depot.w", 2, d)),
                Some(b.add("embed.depot.b", 1, d, Init::Uniform { fan_in: 2 })),
            )
        } else {
            (None, None)
        };
        let layers = (0..cfg.n_encoder_layers)
            .map(|l| LayerLayout {
                wq: b.matrix(format!("enc{l}.wq"), d, d),
                wk: b.matrix(format!("enc{l}.wk"), d, d),
                wv: b.matrix(format!("enc{l}.wv"), d, d),
                wo: b.matrix(format!("enc{l}.wo"), d, d),
                bo: b.add(format!("enc{l}.bo"), 1, d, Init::Uniform { fan_in: d }),
                ln1_gain: b.add(format!("enc{l}.ln1.gain"), 1, d, Init::Ones),
                ln1_bias: b.add(format!("enc{l}.ln1.bias"), 1, d, Init::Zeros),
                w1: b.matrix(format!("enc{l}.ff.w1"), d, f),
                b1: b.add(format!("enc{l}.ff.b1"), 1, f, Init::Uniform { fan_in: d }),
                w2: b.matrix(format!("enc{l}.ff.w2"), f, d),
                b2: b.add(format!("enc{l}.ff.b2"), 1, d, Init::Uniform { fan_in: f }),
                ln2_gain: b.add(format!("enc{l}.ln2.gain"), 1, d, Init::Ones),
                ln2_bias: b.add(format!("enc{l}.ln2.bias"), 1, d, Init::Zeros),
            })
            .collect();
        let glimpse_k = b.matrix("dec.glimpse.wk", d, d);
        let glimpse_v = b.matrix("dec.glimpse.wv", d, d);
        let glimpse_out = b.matrix("dec.glimpse.wo", d, d);
        let pointer_k = b.matrix("dec.pointer.wk", d, d);
        let query_graph = b.matrix("dec.query.graph", d, d);
        let (query_first, query_capacity) = match cfg.kind {
            ProblemKind::Tsp => (Some(b.matrix("dec.query.first", d, d)), None),
            ProblemKind::Cvrp => (None, Some(b.matrix("dec.query.capacity", 1, d))),
        };
        let query_current = b.matrix("dec.query.current", d, d);
        Layout {
            node_w,
            node_b,
            depot_w,
            depot_b,
            layers,
            glimpse_k,
            glimpse_v,
            glimpse_out,
            pointer_k,
            query_graph,
            query_first,
            query_current,
            query_capacity,
            total: b.next,
            entries: b.entries,
        }
    }
}

/// Weights of the policy together with its architecture.
#[derive(Clone, Debug)]
pub struct PolicyParams {
    config: PolicyConfig,
    layout: Layout,
    weights: Vec<f64>,
}

impl PartialEq for PolicyParams {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl PolicyParams {
    /// Random initialization: weight matrices and biases uniform in
    /// +-1/sqrt(fan_in), normalization gains 1 and offsets 0.
    pub fn init<R: Rng + ?Sized>(config: PolicyConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut weights = vec![0.0; layout.total];
        for (_, seg, init) in &layout.entries {
            let w = &mut weights[seg.range()];
            match *init {
                Init::Uniform { fan_in } => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    w.iter_mut().for_each(|x| *x = rng.gen_range(-bound..bound));
                }
                Init::Ones => w.fill(1.0),
                Init::Zeros => w.fill(0.0),
            }
        }
        Ok(PolicyParams {
            config,
            layout,
            weights,
        })
    }

    pub fn from_weights(config: PolicyConfig, weights: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        if weights.len() != layout.total {
            return Err(Error::Checkpoint(format!(
                "architecture expects {} weights, found {}",
                layout.total,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::numeric("loaded weights"));
        }
        Ok(PolicyParams {
            config,
            layout,
            weights,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub(crate) fn seg(&self, seg: Seg) -> &[f64] {
        &self.weights[seg.range()]
    }

    /// Named tensors in layout order.
    pub fn tensors(&self) -> impl Iterator<Item = (&str, Seg)> {
        self.layout.entries.iter().map(|(n, s, _)| (n.as_str(), *s))
    }

    pub fn tensor(&self, name: &str) -> Option<Seg> {
        self.tensors().find(|(n, _)| *n == name).map(|(_, s)| s)
    }
}
