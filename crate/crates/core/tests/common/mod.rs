//! Shared test helpers: a plain-loop reference implementation of the policy
//! network that reads weights by tensor name.
#![allow(dead_code)]

use clroute::instances::{ProblemKind, VrpInstance};
use clroute::policy::PolicyParams;
use clroute::routing::{ConstructionState, Tour};

/// Plain-loop reference network reading weights by tensor name.
pub struct Naive<'a> {
    pub p: &'a PolicyParams,
}

type Mat = Vec<Vec<f64>>;

impl Naive<'_> {
    fn t(&self, name: &str) -> Mat {
        let seg = self.p.tensor(name).unwrap_or_else(|| panic!("missing {name}"));
        let w = &self.p.weights()[seg.range()];
        (0..seg.rows).map(|r| w[r * seg.cols..(r + 1) * seg.cols].to_vec()).collect()
    }

    fn v(&self, name: &str) -> Vec<f64> {
        self.t(name).remove(0)
    }

    fn mm(x: &Mat, w: &Mat) -> Mat {
        x.iter()
            .map(|row| {
                (0..w[0].len())
                    .map(|j| row.iter().zip(w).map(|(a, wr)| a * wr[j]).sum())
                    .collect()
            })
            .collect()
    }

    fn ln(x: &Mat, g: &[f64], b: &[f64]) -> Mat {
        x.iter()
            .map(|r| {
                let d = r.len() as f64;
                let mu = r.iter().sum::<f64>() / d;
                let var = r.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / d;
                r.iter()
                    .enumerate()
                    .map(|(j, v)| g[j] * (v - mu) / (var + 1e-5).sqrt() + b[j])
                    .collect()
            })
            .collect()
    }

    fn softmax(s: &[f64]) -> Vec<f64> {
        let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = s.iter().map(|x| (x - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.iter().map(|x| x / z).collect()
    }

    pub fn encode(&self, inst: &VrpInstance) -> Mat {
        let cfg = self.p.config();
        let (d, heads) = (cfg.embed_dim, cfg.n_heads);
        let dk = d / heads;
        let feats: Mat = match inst.kind {
            ProblemKind::Tsp => inst.coords.iter().map(|c| c.to_vec()).collect(),
            ProblemKind::Cvrp => inst
                .coords
                .iter()
                .enumerate()
                .map(|(i, c)| vec![c[0], c[1], inst.demand(i) as f64 / inst.capacity as f64])
                .collect(),
        };
        let mut h = Self::mm(&feats, &self.t("embed.node.w"));
        let nb = self.v("embed.node.b");
        h.iter_mut().for_each(|r| r.iter_mut().zip(&nb).for_each(|(a, b)| *a += b));
        if inst.kind == ProblemKind::Cvrp {
            let dep = Self::mm(&vec![feats[0][..2].to_vec()], &self.t("embed.depot.w"));
            let db = self.v("embed.depot.b");
            h[0] = dep[0].iter().zip(&db).map(|(a, b)| a + b).collect();
        }
        let n = h.len();
        for l in 0..cfg.n_encoder_layers {
            let q = Self::mm(&h, &self.t(&format!("enc{l}.wq")));
            let k = Self::mm(&h, &self.t(&format!("enc{l}.wk")));
            let v = Self::mm(&h, &self.t(&format!("enc{l}.wv")));
            let mut o = vec![vec![0.0; d]; n];
            for hd in 0..heads {
                let r = hd * dk..(hd + 1) * dk;
                for i in 0..n {
                    let s: Vec<f64> = (0..n)
                        .map(|j| {
                            q[i][r.clone()].iter().zip(&k[j][r.clone()]).map(|(a, b)| a * b).sum::<f64>()
                                / (dk as f64).sqrt()
                        })
                        .collect();
                    let a = Self::softmax(&s);
                    for j in 0..n {
                        for c in r.clone() {
                            o[i][c] += a[j] * v[j][c];
                        }
                    }
                }
            }
            let mo = Self::mm(&o, &self.t(&format!("enc{l}.wo")));
            let bo = self.v(&format!("enc{l}.bo"));
            let s1: Mat = (0..n)
                .map(|i| (0..d).map(|c| h[i][c] + mo[i][c] + bo[c]).collect())
                .collect();
            let h1 = Self::ln(&s1, &self.v(&format!("enc{l}.ln1.gain")), &self.v(&format!("enc{l}.ln1.bias")));
            let mut f = Self::mm(&h1, &self.t(&format!("enc{l}.ff.w1")));
            let b1 = self.v(&format!("enc{l}.ff.b1"));
            for r in f.iter_mut() {
                for (a, b) in r.iter_mut().zip(&b1) {
                    *a = (*a + b).max(0.0);
                }
            }
            let f2 = Self::mm(&f, &self.t(&format!("enc{l}.ff.w2")));
            let b2 = self.v(&format!("enc{l}.ff.b2"));
            let s2: Mat = (0..n)
                .map(|i| (0..d).map(|c| h1[i][c] + f2[i][c] + b2[c]).collect())
                .collect();
            h = Self::ln(&s2, &self.v(&format!("enc{l}.ln2.gain")), &self.v(&format!("enc{l}.ln2.bias")));
        }
        h
    }

    /// Probabilities over all nodes (zero where masked) at `state`.
    pub fn step(&self, h: &Mat, state: &ConstructionState<'_>) -> Vec<f64> {
        let cfg = self.p.config();
        let (d, heads) = (cfg.embed_dim, cfg.n_heads);
        let dk = d / heads;
        let n = h.len();
        let graph: Vec<f64> = (0..d).map(|c| h.iter().map(|r| r[c]).sum::<f64>() / n as f64).collect();
        let mut ctx = Self::mm(&vec![graph], &self.t("dec.query.graph")).remove(0);
        let add = |ctx: &mut Vec<f64>, x: Vec<f64>| ctx.iter_mut().zip(x).for_each(|(a, b)| *a += b);
        add(&mut ctx, Self::mm(&vec![h[state.current_node()].clone()], &self.t("dec.query.current")).remove(0));
        match cfg.kind {
            ProblemKind::Tsp => add(
                &mut ctx,
                Self::mm(&vec![h[state.first_node()].clone()], &self.t("dec.query.first")).remove(0),
            ),
            ProblemKind::Cvrp => {
                let ratio = state.remaining_capacity() as f64 / state.instance().capacity as f64;
                add(&mut ctx, self.v("dec.query.capacity").iter().map(|w| w * ratio).collect());
            }
        }
        let mask = state.feasible_actions().unwrap();
        let feas: Vec<usize> = (0..n).filter(|&j| mask[j]).collect();
        let gk = Self::mm(h, &self.t("dec.glimpse.wk"));
        let gv = Self::mm(h, &self.t("dec.glimpse.wv"));
        let pk = Self::mm(h, &self.t("dec.pointer.wk"));
        let mut o = vec![0.0; d];
        for hd in 0..heads {
            let r = hd * dk..(hd + 1) * dk;
            let s: Vec<f64> = feas
                .iter()
                .map(|&j| {
                    ctx[r.clone()].iter().zip(&gk[j][r.clone()]).map(|(a, b)| a * b).sum::<f64>()
                        / (dk as f64).sqrt()
                })
                .collect();
            let a = Self::softmax(&s);
            for (ai, &j) in a.iter().zip(&feas) {
                for c in r.clone() {
                    o[c] += ai * gv[j][c];
                }
            }
        }
        let g = Self::mm(&vec![o], &self.t("dec.glimpse.wo")).remove(0);
        let u: Vec<f64> = feas
            .iter()
            .map(|&j| {
                let z = g.iter().zip(&pk[j]).map(|(a, b)| a * b).sum::<f64>() / (d as f64).sqrt();
                cfg.logit_clip * z.tanh()
            })
            .collect();
        let p = Self::softmax(&u);
        let mut full = vec![0.0; n];
        for (pi, &j) in p.iter().zip(&feas) {
            full[j] = *pi;
        }
        full
    }
}

/// Per-decision probability vectors along `tour`, skipping forced first moves.
pub fn tour_distributions(p: &PolicyParams, inst: &VrpInstance, tour: &Tour) -> Vec<Vec<f64>> {
    let naive = Naive { p };
    let h = naive.encode(inst);
    let nodes = tour.nodes();
    let skip = if inst.kind == ProblemKind::Cvrp { 2 } else { 1 };
    let mut st = ConstructionState::with_start(inst, nodes[skip - 1]);
    if inst.kind == ProblemKind::Cvrp {
        st.step(nodes[1]).unwrap();
    }
    let mut out = Vec::new();
    for &a in &nodes[skip..] {
        out.push(naive.step(&h, &st));
        st.step(a).unwrap();
    }
    out
}
