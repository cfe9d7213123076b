use super::encoder::Embeddings;
use super::linalg::{axpy, dot, matmul, matmul_nt_acc, matmul_tn_acc, outer_acc, vecmat_acc};
use super::PolicyParams;
use crate::instances::ProblemKind;
use crate::routing::ConstructionState;

/// Per-instance projections shared by every decoding step.
pub(crate) struct DecoderPre {
    glimpse_k: Vec<f64>,
    glimpse_v: Vec<f64>,
    pointer_k: Vec<f64>,
    query_graph: Vec<f64>,
    query_first: Option<Vec<f64>>,
    query_current: Vec<f64>,
}

pub(crate) fn precompute(params: &PolicyParams, emb: &Embeddings) -> DecoderPre {
    let lay = params.layout();
    let (n, d) = (emb.n, emb.dim);
    let proj = |seg| {
        let mut out = vec![0.0; n * d];
        matmul(&emb.nodes, params.seg(seg), &mut out, n, d, d, false);
        out
    };
    let mut query_graph = vec![0.0; d];
    vecmat_acc(&emb.graph, params.seg(lay.query_graph), &mut query_graph);
    DecoderPre {
        glimpse_k: proj(lay.glimpse_k),
        glimpse_v: proj(lay.glimpse_v),
        pointer_k: proj(lay.pointer_k),
        query_graph,
        query_first: lay.query_first.map(proj),
        query_current: proj(lay.query_current),
    }
}

/// Everything the backward pass needs from one decoding step.
#[derive(Clone, Debug)]
pub(crate) struct StepCache {
    pub feasible: Vec<usize>,
    pub logp: Vec<f64>,
    /// Position of the taken action inside `feasible`.
    pub chosen: usize,
    q: Vec<f64>,
    attn: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    tanh: Vec<f64>,
    first: usize,
    current: usize,
    cap_ratio: f64,
}

fn capacity_ratio(state: &ConstructionState<'_>) -> f64 {
    let inst = state.instance();
    match inst.kind {
        ProblemKind::Tsp => 0.0,
        ProblemKind::Cvrp => state.remaining_capacity() as f64 / inst.capacity as f64,
    }
}

/// Log-probabilities over `feasible` (ascending node indices, non-empty).
pub(crate) fn step_forward(
    params: &PolicyParams,
    pre: &DecoderPre,
    state: &ConstructionState<'_>,
    feasible: Vec<usize>,
) -> StepCache {
    let cfg = params.config();
    let lay = params.layout();
    let d = cfg.embed_dim;
    let heads = cfg.n_heads;
    let dk = d / heads;
    let m = feasible.len();
    assert!(m > 0, "decoder called with an empty feasible set");
    let first = state.first_node();
    let current = state.current_node();
    let cap_ratio = capacity_ratio(state);

    let mut q = pre.query_graph.clone();
    axpy(1.0, &pre.query_current[current * d..(current + 1) * d], &mut q);
    if let Some(qf) = &pre.query_first {
        axpy(1.0, &qf[first * d..(first + 1) * d], &mut q);
    }
    if let Some(seg) = lay.query_capacity {
        axpy(cap_ratio, params.seg(seg), &mut q);
    }

    let scale = 1.0 / (dk as f64).sqrt();
    let mut attn = vec![0.0; heads * m];
    let mut o = vec![0.0; d];
    for h in 0..heads {
        let qh = &q[h * dk..(h + 1) * dk];
        let a = &mut attn[h * m..(h + 1) * m];
        let mut mx = f64::NEG_INFINITY;
        for (ai, &j) in a.iter_mut().zip(&feasible) {
            *ai = scale * dot(qh, &pre.glimpse_k[j * d + h * dk..j * d + (h + 1) * dk]);
            mx = mx.max(*ai);
        }
        let mut z = 0.0;
        for ai in a.iter_mut() {
            *ai = (*ai - mx).exp();
            z += *ai;
        }
        let oh = &mut o[h * dk..(h + 1) * dk];
        for (ai, &j) in a.iter_mut().zip(&feasible) {
            *ai /= z;
            axpy(*ai, &pre.glimpse_v[j * d + h * dk..j * d + (h + 1) * dk], oh);
        }
    }
    let mut g = vec![0.0; d];
    vecmat_acc(&o, params.seg(lay.glimpse_out), &mut g);

    let pscale = 1.0 / (d as f64).sqrt();
    let clip = cfg.logit_clip;
    let mut tanh = Vec::with_capacity(m);
    let mut logp = Vec::with_capacity(m);
    for &j in &feasible {
        let t = (pscale * dot(&g, &pre.pointer_k[j * d..(j + 1) * d])).tanh();
        tanh.push(t);
        logp.push(clip * t);
    }
    let mx = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = logp.iter().map(|u| (u - mx).exp()).sum::<f64>().ln();
    logp.iter_mut().for_each(|u| *u = *u - mx - lse);

    StepCache {
        feasible,
        logp,
        chosen: 0,
        q,
        attn,
        o,
        g,
        tanh,
        first,
        current,
        cap_ratio,
    }
}

/// Gradient accumulators for the per-instance decoder projections.
pub(crate) struct DecoderGrad {
    glimpse_k: Vec<f64>,
    glimpse_v: Vec<f64>,
    pointer_k: Vec<f64>,
    query_graph: Vec<f64>,
    query_first: Vec<f64>,
    query_current: Vec<f64>,
    // stacked per-step glimpse outputs and their gradients for one gemm into Wo
    o_rows: Vec<f64>,
    dg_rows: Vec<f64>,
    pending: Vec<usize>,
}

impl DecoderGrad {
    pub fn new(n: usize, d: usize) -> Self {
        DecoderGrad {
            glimpse_k: vec![0.0; n * d],
            glimpse_v: vec![0.0; n * d],
            pointer_k: vec![0.0; n * d],
            query_graph: vec![0.0; d],
            query_first: vec![0.0; n * d],
            query_current: vec![0.0; n * d],
            o_rows: Vec::new(),
            dg_rows: Vec::new(),
            pending: Vec::new(),
        }
    }
}

/// First half of the step backward pass: from dL/dlogp over the feasible set
/// to dL/dg. The step is queued for [`glimpse_backward`].
pub(crate) fn pointer_backward(
    params: &PolicyParams,
    pre: &DecoderPre,
    cache: &StepCache,
    dlogp: &[f64],
    acc: &mut DecoderGrad,
    step_id: usize,
) {
    let cfg = params.config();
    let d = cfg.embed_dim;
    let pscale = 1.0 / (d as f64).sqrt();
    let clip = cfg.logit_clip;
    let total: f64 = dlogp.iter().sum();
    let mut dg = vec![0.0; d];
    for (i, &j) in cache.feasible.iter().enumerate() {
        let du = dlogp[i] - cache.logp[i].exp() * total;
        if du == 0.0 {
            continue;
        }
        let t = cache.tanh[i];
        let dz = du * clip * (1.0 - t * t) * pscale;
        axpy(dz, &pre.pointer_k[j * d..(j + 1) * d], &mut dg);
        axpy(dz, &cache.g, &mut acc.pointer_k[j * d..(j + 1) * d]);
    }
    acc.o_rows.extend_from_slice(&cache.o);
    acc.dg_rows.extend_from_slice(&dg);
    acc.pending.push(step_id);
}

/// Second half: pushes every queued dL/dg through the output projection and
/// the glimpse attention into the query, key and value gradients.
pub(crate) fn glimpse_backward(
    params: &PolicyParams,
    pre: &DecoderPre,
    caches: &[&StepCache],
    acc: &mut DecoderGrad,
    grad: &mut [f64],
) {
    let cfg = params.config();
    let lay = params.layout();
    let d = cfg.embed_dim;
    let heads = cfg.n_heads;
    let dk = d / heads;
    let rows = acc.pending.len();
    if rows == 0 {
        return;
    }
    matmul_tn_acc(&acc.o_rows, &acc.dg_rows, &mut grad[lay.glimpse_out.range()], d, rows, d);
    let mut d_o = vec![0.0; rows * d];
    matmul_nt_acc(&acc.dg_rows, params.seg(lay.glimpse_out), &mut d_o, rows, d, d);

    let scale = 1.0 / (dk as f64).sqrt();
    let mut dq = vec![0.0; d];
    let mut cap_seg = lay.query_capacity.map(|_| vec![0.0; d]);
    for (r, &step) in acc.pending.iter().enumerate() {
        let c = caches[step];
        let m = c.feasible.len();
        let dor = &d_o[r * d..(r + 1) * d];
        dq.fill(0.0);
        for h in 0..heads {
            let a = &c.attn[h * m..(h + 1) * m];
            let doh = &dor[h * dk..(h + 1) * dk];
            let mut da = Vec::with_capacity(m);
            let mut s = 0.0;
            for (ai, &j) in a.iter().zip(&c.feasible) {
                let x = dot(doh, &pre.glimpse_v[j * d + h * dk..j * d + (h + 1) * dk]);
                s += ai * x;
                da.push(x);
                axpy(*ai, doh, &mut acc.glimpse_v[j * d + h * dk..j * d + (h + 1) * dk]);
            }
            let qh = &c.q[h * dk..(h + 1) * dk];
            for ((ai, x), &j) in a.iter().zip(&da).zip(&c.feasible) {
                let ds = ai * (x - s) * scale;
                if ds == 0.0 {
                    continue;
                }
                axpy(
                    ds,
                    &pre.glimpse_k[j * d + h * dk..j * d + (h + 1) * dk],
                    &mut dq[h * dk..(h + 1) * dk],
                );
                axpy(ds, qh, &mut acc.glimpse_k[j * d + h * dk..j * d + (h + 1) * dk]);
            }
        }
        axpy(1.0, &dq, &mut acc.query_graph);
        axpy(1.0, &dq, &mut acc.query_current[c.current * d..(c.current + 1) * d]);
        if pre.query_first.is_some() {
            axpy(1.0, &dq, &mut acc.query_first[c.first * d..(c.first + 1) * d]);
        }
        if let Some(cs) = cap_seg.as_mut() {
            axpy(c.cap_ratio, &dq, cs);
        }
    }
    if let (Some(seg), Some(cs)) = (lay.query_capacity, cap_seg) {
        axpy(1.0, &cs, &mut grad[seg.range()]);
    }
    acc.o_rows.clear();
    acc.dg_rows.clear();
    acc.pending.clear();
}

/// Maps the accumulated projection gradients back onto the embeddings and
/// the decoder weights. Returns dL/d node embeddings (graph mean included).
pub(crate) fn decoder_backward(
    params: &PolicyParams,
    emb: &Embeddings,
    acc: &DecoderGrad,
    grad: &mut [f64],
) -> Vec<f64> {
    let lay = params.layout();
    let (n, d) = (emb.n, emb.dim);
    let mut dh = vec![0.0; n * d];
    let mut project = |seg: super::Seg, dproj: &[f64], grad: &mut [f64]| {
        matmul_tn_acc(&emb.nodes, dproj, &mut grad[seg.range()], d, n, d);
        matmul_nt_acc(dproj, params.seg(seg), &mut dh, n, d, d);
    };
    project(lay.glimpse_k, &acc.glimpse_k, grad);
    project(lay.glimpse_v, &acc.glimpse_v, grad);
    project(lay.pointer_k, &acc.pointer_k, grad);
    project(lay.query_current, &acc.query_current, grad);
    if let Some(seg) = lay.query_first {
        project(seg, &acc.query_first, grad);
    }
    outer_acc(&emb.graph, &acc.query_graph, &mut grad[lay.query_graph.range()]);
    let mut dgraph = vec![0.0; d];
    super::linalg::matvec_acc(params.seg(lay.query_graph), &acc.query_graph, &mut dgraph);
    for row in dh.chunks_exact_mut(d) {
        axpy(1.0 / n as f64, &dgraph, row);
    }
    dh
}
