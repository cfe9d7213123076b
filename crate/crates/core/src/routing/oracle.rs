use crate::error::{Error, Result};
use crate::instances::{ProblemKind, VrpInstance};

use super::{cycle_cost, nearest_neighbor, two_opt, Tour};

const TIE_EPS: f64 = 1e-12;

/// Largest customer count the exhaustive oracle accepts.
pub fn oracle_limit(kind: ProblemKind) -> usize {
    match kind {
        ProblemKind::Tsp => 10,
        ProblemKind::Cvrp => 8,
    }
}

struct Search<'a> {
    inst: &'a VrpInstance,
    visited: Vec<bool>,
    path: Vec<usize>,
    best_cost: f64,
    best: Option<Vec<usize>>,
}

impl Search<'_> {
    fn record(&mut self, total: f64, closing: Option<usize>) {
        if total < self.best_cost - TIE_EPS {
            self.best_cost = total;
            let mut p = self.path.clone();
            p.extend(closing);
            self.best = Some(p);
        }
    }

    fn tsp(&mut self, cur: usize, cost: f64, left: usize) {
        let n = self.inst.node_count();
        for a in 1..n {
            if self.visited[a] {
                continue;
            }
            let c = cost + self.inst.dist(cur, a);
            let bound = c + self.inst.dist(a, 0);
            if bound >= self.best_cost - TIE_EPS {
                continue;
            }
            self.path.push(a);
            if left == 1 {
                self.record(bound, None);
            } else {
                self.visited[a] = true;
                self.tsp(a, c, left - 1);
                self.visited[a] = false;
            }
            self.path.pop();
        }
    }

    fn cvrp(&mut self, cur: usize, cost: f64, remaining: u32, left: usize) {
        let inst = self.inst;
        if left == 0 {
            let total = cost + inst.dist(cur, 0);
            self.record(total, Some(0));
            return;
        }
        if cur != 0 {
            let c = cost + inst.dist(cur, 0);
            if c < self.best_cost - TIE_EPS {
                self.path.push(0);
                self.cvrp(0, c, inst.capacity, left);
                self.path.pop();
            }
        }
        for a in 1..inst.node_count() {
            let d = inst.demand(a);
            if self.visited[a] || d > remaining {
                continue;
            }
            let c = cost + inst.dist(cur, a);
            if c + inst.dist(a, 0) >= self.best_cost - TIE_EPS {
                continue;
            }
            self.visited[a] = true;
            self.path.push(a);
            self.cvrp(a, c, remaining - d, left - 1);
            self.path.pop();
            self.visited[a] = false;
        }
    }
}

/// Exhaustive search for a globally optimal tour. Among tours whose costs tie
/// (within 1e-12) the lexicographically smallest node sequence is returned;
/// TSP tours are anchored at node 0.
pub fn brute_force_optimal(instance: &VrpInstance) -> Result<(Tour, f64)> {
    let customers = instance.customers();
    let limit = oracle_limit(instance.kind);
    if customers > limit {
        return Err(Error::OracleTooLarge { customers, limit });
    }
    let incumbent = two_opt(instance, &nearest_neighbor(instance));
    let mut search = Search {
        inst: instance,
        visited: vec![false; instance.node_count()],
        path: vec![0],
        best_cost: cycle_cost(instance, &incumbent.0) + 1e-9,
        best: None,
    };
    match instance.kind {
        ProblemKind::Tsp => {
            search.visited[0] = true;
            search.tsp(0, 0.0, customers - 1);
        }
        ProblemKind::Cvrp => search.cvrp(0, 0.0, instance.capacity, customers),
    }
    let tour = Tour(search.best.expect("the incumbent bound admits at least one tour"));
    let cost = cycle_cost(instance, &tour.0);
    Ok((tour, cost))
}
