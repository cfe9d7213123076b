use super::linalg::{gemm, matmul, matmul_nt_acc, matmul_tn_acc, View};
use super::{LayerLayout, PolicyParams, Seg};
use crate::error::{Error, Result};
use crate::instances::{ProblemKind, VrpInstance};

const LN_EPS: f64 = 1e-5;

/// Node embeddings (row-major, one row per node) and their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    pub nodes: Vec<f64>,
    pub graph: Vec<f64>,
    pub n: usize,
    pub dim: usize,
}

impl Embeddings {
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }
}

pub(crate) struct LayerCache {
    h_in: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    attn: Vec<f64>,
    o: Vec<f64>,
    xhat1: Vec<f64>,
    rstd1: Vec<f64>,
    h1: Vec<f64>,
    f_pre: Vec<f64>,
    xhat2: Vec<f64>,
    rstd2: Vec<f64>,
}

pub(crate) struct EncoderCache {
    layers: Vec<LayerCache>,
}

fn node_features(inst: &VrpInstance) -> (Vec<f64>, usize) {
    match inst.kind {
        ProblemKind::Tsp => (inst.coords.iter().flat_map(|p| *p).collect(), 2),
        ProblemKind::Cvrp => {
            let cap = inst.capacity as f64;
            let feats = inst
                .coords
                .iter()
                .enumerate()
                .flat_map(|(i, p)| [p[0], p[1], inst.demand(i) as f64 / cap])
                .collect();
            (feats, 3)
        }
    }
}

fn layer_norm(s: &[f64], gain: &[f64], bias: &[f64], d: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = s.len() / d;
    let mut xhat = vec![0.0; s.len()];
    let mut rstd = vec![0.0; n];
    let mut out = vec![0.0; s.len()];
    for i in 0..n {
        let row = &s[i * d..(i + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d as f64;
        let r = 1.0 / (var + LN_EPS).sqrt();
        rstd[i] = r;
        for j in 0..d {
            let xh = (row[j] - mean) * r;
            xhat[i * d + j] = xh;
            out[i * d + j] = gain[j] * xh + bias[j];
        }
    }
    (out, xhat, rstd)
}

/// Returns dL/ds and accumulates gain/bias gradients.
fn layer_norm_backward(
    dy: &[f64],
    xhat: &[f64],
    rstd: &[f64],
    gain: &[f64],
    dgain: &mut [f64],
    dbias: &mut [f64],
    d: usize,
) -> Vec<f64> {
    let n = rstd.len();
    let mut ds = vec![0.0; dy.len()];
    let mut dxhat = vec![0.0; d];
    for i in 0..n {
        let dyr = &dy[i * d..(i + 1) * d];
        let xr = &xhat[i * d..(i + 1) * d];
        let mut mean_dx = 0.0;
        let mut mean_dxx = 0.0;
        for j in 0..d {
            dgain[j] += dyr[j] * xr[j];
            dbias[j] += dyr[j];
            dxhat[j] = dyr[j] * gain[j];
            mean_dx += dxhat[j];
            mean_dxx += dxhat[j] * xr[j];
        }
        mean_dx /= d as f64;
        mean_dxx /= d as f64;
        for j in 0..d {
            ds[i * d + j] = rstd[i] * (dxhat[j] - mean_dx - xr[j] * mean_dxx);
        }
    }
    ds
}

fn add_bias(x: &mut [f64], bias: &[f64]) {
    let d = bias.len();
    for row in x.chunks_exact_mut(d) {
        row.iter_mut().zip(bias).for_each(|(a, b)| *a += b);
    }
}

fn sum_rows_into(x: &[f64], out: &mut [f64]) {
    let d = out.len();
    for row in x.chunks_exact(d) {
        out.iter_mut().zip(row).for_each(|(a, b)| *a += b);
    }
}

fn softmax_rows(s: &mut [f64], cols: usize) {
    for row in s.chunks_exact_mut(cols) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for x in row.iter_mut() {
            *x = (*x - m).exp();
            z += *x;
        }
        row.iter_mut().for_each(|x| *x /= z);
    }
}

fn check_finite(x: &[f64], what: impl FnOnce() -> String) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(what()))
    }
}

fn input_projection(params: &PolicyParams, inst: &VrpInstance, d: usize) -> Vec<f64> {
    let lay = params.layout();
    let n = inst.node_count();
    let (feats, fdim) = node_features(inst);
    let mut h = vec![0.0; n * d];
    matmul(&feats, params.seg(lay.node_w), &mut h, n, fdim, d, false);
    add_bias(&mut h, params.seg(lay.node_b));
    if let (Some(dw), Some(db)) = (lay.depot_w, lay.depot_b) {
        let row = &mut h[..d];
        row.fill(0.0);
        matmul(&feats[..2], params.seg(dw), row, 1, 2, d, false);
        add_bias(row, params.seg(db));
    }
    h
}

fn attention_forward(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    n: usize,
    d: usize,
    heads: usize,
) -> (Vec<f64>, Vec<f64>) {
    let dk = d / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut attn = vec![0.0; heads * n * n];
    let mut o = vec![0.0; n * d];
    for h in 0..heads {
        let a = &mut attn[h * n * n..(h + 1) * n * n];
        gemm(
            n,
            dk,
            n,
            scale,
            q,
            View::rows(h * dk, d),
            k,
            View::transposed(h * dk, d),
            0.0,
            a,
            View::rows(0, n),
        );
        softmax_rows(a, n);
        gemm(
            n,
            n,
            dk,
            1.0,
            a,
            View::rows(0, n),
            v,
            View::rows(h * dk, d),
            0.0,
            &mut o,
            View::rows(h * dk, d),
        );
    }
    (attn, o)
}

fn layer_forward(
    params: &PolicyParams,
    lay: &LayerLayout,
    h: Vec<f64>,
    n: usize,
) -> (Vec<f64>, LayerCache) {
    let cfg = params.config();
    let d = cfg.embed_dim;
    let f = cfg.feedforward_dim;
    let mut q = vec![0.0; n * d];
    let mut k = vec![0.0; n * d];
    let mut v = vec![0.0; n * d];
    matmul(&h, params.seg(lay.wq), &mut q, n, d, d, false);
    matmul(&h, params.seg(lay.wk), &mut k, n, d, d, false);
    matmul(&h, params.seg(lay.wv), &mut v, n, d, d, false);
    let (attn, o) = attention_forward(&q, &k, &v, n, d, cfg.n_heads);

    let mut s1 = h.clone();
    matmul(&o, params.seg(lay.wo), &mut s1, n, d, d, true);
    add_bias(&mut s1, params.seg(lay.bo));
    let (h1, xhat1, rstd1) = layer_norm(&s1, params.seg(lay.ln1_gain), params.seg(lay.ln1_bias), d);

    let mut f_pre = vec![0.0; n * f];
    matmul(&h1, params.seg(lay.w1), &mut f_pre, n, d, f, false);
    add_bias(&mut f_pre, params.seg(lay.b1));
    let f_act: Vec<f64> = f_pre.iter().map(|x| x.max(0.0)).collect();
    let mut s2 = h1.clone();
    matmul(&f_act, params.seg(lay.w2), &mut s2, n, f, d, true);
    add_bias(&mut s2, params.seg(lay.b2));
    let (h2, xhat2, rstd2) = layer_norm(&s2, params.seg(lay.ln2_gain), params.seg(lay.ln2_bias), d);

    let cache = LayerCache {
        h_in: h,
        q,
        k,
        v,
        attn,
        o,
        xhat1,
        rstd1,
        h1,
        f_pre,
        xhat2,
        rstd2,
    };
    (h2, cache)
}

pub(crate) fn encode_cached(
    params: &PolicyParams,
    inst: &VrpInstance,
    keep_cache: bool,
) -> Result<(Embeddings, Option<EncoderCache>)> {
    let d = params.config().embed_dim;
    let n = inst.node_count();
    let mut h = input_projection(params, inst, d);
    check_finite(&h, || "input projection".to_string())?;
    let mut caches = Vec::new();
    for (l, lay) in params.layout().layers.iter().enumerate() {
        let (next, cache) = layer_forward(params, lay, h, n);
        check_finite(&next, || format!("encoder layer {l}"))?;
        h = next;
        if keep_cache {
            caches.push(cache);
        }
    }
    let mut graph = vec![0.0; d];
    sum_rows_into(&h, &mut graph);
    graph.iter_mut().for_each(|x| *x /= n as f64);
    let emb = Embeddings {
        nodes: h,
        graph,
        n,
        dim: d,
    };
    Ok((emb, keep_cache.then_some(EncoderCache { layers: caches })))
}

/// Node embeddings plus their mean.
pub fn encode(params: &PolicyParams, instance: &VrpInstance) -> Result<Embeddings> {
    Ok(encode_cached(params, instance, false)?.0)
}

fn grad_seg(grad: &mut [f64], seg: Seg) -> &mut [f64] {
    &mut grad[seg.range()]
}

fn layer_backward(
    params: &PolicyParams,
    lay: &LayerLayout,
    c: &LayerCache,
    dh2: Vec<f64>,
    n: usize,
    grad: &mut [f64],
) -> Vec<f64> {
    let cfg = params.config();
    let d = cfg.embed_dim;
    let f = cfg.feedforward_dim;
    let heads = cfg.n_heads;
    let dk = d / heads;
    let scale = 1.0 / (dk as f64).sqrt();

    // second sublayer: h2 = LN(h1 + relu(h1 W1 + b1) W2 + b2)
    let ds2 = {
        let (gain_g, rest) = split_two(grad, lay.ln2_gain, lay.ln2_bias);
        layer_norm_backward(&dh2, &c.xhat2, &c.rstd2, params.seg(lay.ln2_gain), gain_g, rest, d)
    };
    let f_act: Vec<f64> = c.f_pre.iter().map(|x| x.max(0.0)).collect();
    matmul_tn_acc(&f_act, &ds2, grad_seg(grad, lay.w2), f, n, d);
    sum_rows_into(&ds2, grad_seg(grad, lay.b2));
    let mut df = vec![0.0; n * f];
    matmul_nt_acc(&ds2, params.seg(lay.w2), &mut df, n, d, f);
    for (g, x) in df.iter_mut().zip(&c.f_pre) {
        if *x <= 0.0 {
            *g = 0.0;
        }
    }
    matmul_tn_acc(&c.h1, &df, grad_seg(grad, lay.w1), d, n, f);
    sum_rows_into(&df, grad_seg(grad, lay.b1));
    let mut dh1 = ds2;
    matmul_nt_acc(&df, params.seg(lay.w1), &mut dh1, n, f, d);

    // first sublayer: h1 = LN(h + MHA(h) Wo + bo)
    let ds1 = {
        let (gain_g, rest) = split_two(grad, lay.ln1_gain, lay.ln1_bias);
        layer_norm_backward(&dh1, &c.xhat1, &c.rstd1, params.seg(lay.ln1_gain), gain_g, rest, d)
    };
    matmul_tn_acc(&c.o, &ds1, grad_seg(grad, lay.wo), d, n, d);
    sum_rows_into(&ds1, grad_seg(grad, lay.bo));
    let mut d_o = vec![0.0; n * d];
    matmul_nt_acc(&ds1, params.seg(lay.wo), &mut d_o, n, d, d);

    let mut dq = vec![0.0; n * d];
    let mut dk_ = vec![0.0; n * d];
    let mut dv = vec![0.0; n * d];
    let mut da = vec![0.0; n * n];
    for h in 0..heads {
        let a = &c.attn[h * n * n..(h + 1) * n * n];
        gemm(
            n,
            dk,
            n,
            1.0,
            &d_o,
            View::rows(h * dk, d),
            &c.v,
            View::transposed(h * dk, d),
            0.0,
            &mut da,
            View::rows(0, n),
        );
        gemm(
            n,
            n,
            dk,
            1.0,
            a,
            View::transposed(0, n),
            &d_o,
            View::rows(h * dk, d),
            0.0,
            &mut dv,
            View::rows(h * dk, d),
        );
        for i in 0..n {
            let ar = &a[i * n..(i + 1) * n];
            let dr = &mut da[i * n..(i + 1) * n];
            let s: f64 = ar.iter().zip(dr.iter()).map(|(x, y)| x * y).sum();
            for (dx, ax) in dr.iter_mut().zip(ar) {
                *dx = ax * (*dx - s);
            }
        }
        gemm(
            n,
            n,
            dk,
            scale,
            &da,
            View::rows(0, n),
            &c.k,
            View::rows(h * dk, d),
            0.0,
            &mut dq,
            View::rows(h * dk, d),
        );
        gemm(
            n,
            n,
            dk,
            scale,
            &da,
            View::transposed(0, n),
            &c.q,
            View::rows(h * dk, d),
            0.0,
            &mut dk_,
            View::rows(h * dk, d),
        );
    }
    matmul_tn_acc(&c.h_in, &dq, grad_seg(grad, lay.wq), d, n, d);
    matmul_tn_acc(&c.h_in, &dk_, grad_seg(grad, lay.wk), d, n, d);
    matmul_tn_acc(&c.h_in, &dv, grad_seg(grad, lay.wv), d, n, d);
    let mut dh = ds1;
    matmul_nt_acc(&dq, params.seg(lay.wq), &mut dh, n, d, d);
    matmul_nt_acc(&dk_, params.seg(lay.wk), &mut dh, n, d, d);
    matmul_nt_acc(&dv, params.seg(lay.wv), &mut dh, n, d, d);
    dh
}

/// Two disjoint mutable gradient segments; `a` must precede `b`.
fn split_two(grad: &mut [f64], a: Seg, b: Seg) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a.off + a.len() <= b.off);
    let (lo, hi) = grad.split_at_mut(b.off);
    (&mut lo[a.range()], &mut hi[..b.len()])
}

/// Backpropagates `d_nodes` (dL/d embeddings) through the encoder and
/// accumulates parameter gradients into `grad`.
pub(crate) fn encode_backward(
    params: &PolicyParams,
    inst: &VrpInstance,
    cache: &EncoderCache,
    d_nodes: Vec<f64>,
    grad: &mut [f64],
) {
    let d = params.config().embed_dim;
    let n = inst.node_count();
    let lay = params.layout();
    let mut dh = d_nodes;
    for (l, c) in lay.layers.iter().zip(&cache.layers).rev() {
        dh = layer_backward(params, l, c, dh, n, grad);
    }
    let (feats, fdim) = node_features(inst);
    match (lay.depot_w, lay.depot_b) {
        (Some(dw), Some(db)) => {
            matmul_tn_acc(&feats[..2], &dh[..d], grad_seg(grad, dw), 2, 1, d);
            sum_rows_into(&dh[..d], grad_seg(grad, db));
            matmul_tn_acc(&feats[fdim..], &dh[d..], grad_seg(grad, lay.node_w), fdim, n - 1, d);
            sum_rows_into(&dh[d..], grad_seg(grad, lay.node_b));
        }
        _ => {
            matmul_tn_acc(&feats, &dh, grad_seg(grad, lay.node_w), fdim, n, d);
            sum_rows_into(&dh, grad_seg(grad, lay.node_b));
        }
    }
}
