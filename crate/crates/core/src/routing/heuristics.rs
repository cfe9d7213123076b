use crate::instances::{ProblemKind, VrpInstance};

use super::{ConstructionState, Tour};

const IMPROVEMENT_EPS: f64 = 1e-10;

/// Greedy nearest feasible neighbor from node 0 (the depot for CVRP). For
/// CVRP the vehicle returns to the depot when no remaining customer fits.
/// Ties go to the smaller node index.
pub fn nearest_neighbor(instance: &VrpInstance) -> Tour {
    let mut st = ConstructionState::new(instance);
    let mut feasible = Vec::new();
    while !st.is_done() {
        st.feasible_nodes(&mut feasible);
        let cur = st.current_node();
        let customers: Vec<usize> = match instance.kind {
            ProblemKind::Tsp => feasible.clone(),
            ProblemKind::Cvrp => feasible.iter().copied().filter(|&a| a != 0).collect(),
        };
        let next = if customers.is_empty() {
            0
        } else {
            let mut best = customers[0];
            for &a in &customers[1..] {
                if instance.dist(cur, a) < instance.dist(cur, best) {
                    best = a;
                }
            }
            best
        };
        st.step(next).expect("chosen from the feasible set");
    }
    st.into_tour()
}

/// 2-opt on a closed sequence whose position 0 stays fixed. Repeated
/// first-improvement passes in index order until a pass finds nothing.
fn two_opt_cycle(instance: &VrpInstance, seq: &mut [usize]) {
    let n = seq.len();
    if n < 4 {
        return;
    }
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 2 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (seq[i], seq[i + 1]);
                let (c, d) = (seq[j], seq[(j + 1) % n]);
                let delta = instance.dist(a, c) + instance.dist(b, d)
                    - instance.dist(a, b)
                    - instance.dist(c, d);
                if delta < -IMPROVEMENT_EPS {
                    seq[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
}

/// Applies improving 2-opt exchanges until locally optimal. CVRP moves stay
/// within a route, so feasibility is preserved.
pub fn two_opt(instance: &VrpInstance, tour: &Tour) -> Tour {
    match instance.kind {
        ProblemKind::Tsp => {
            let mut seq = tour.0.clone();
            two_opt_cycle(instance, &mut seq);
            Tour(seq)
        }
        ProblemKind::Cvrp => {
            let mut out = vec![0];
            for route in tour.routes() {
                let mut seq = Vec::with_capacity(route.len() + 1);
                seq.push(0);
                seq.extend_from_slice(route);
                two_opt_cycle(instance, &mut seq);
                out.extend_from_slice(&seq[1..]);
                out.push(0);
            }
            Tour(out)
        }
    }
}
