//! Tours, feasibility, objective values and the construction process.

mod heuristics;
mod oracle;
mod state;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ProblemKind, VrpInstance};

pub use heuristics::{nearest_neighbor, two_opt};
pub use oracle::{brute_force_optimal, oracle_limit};
pub use state::ConstructionState;

/// Ordered node sequence. TSP tours are permutations of all nodes and close
/// implicitly; CVRP tours start and end at the depot (node 0) and use depot
/// visits to delimit routes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tour(pub Vec<usize>);

impl Tour {
    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// CVRP routes without their depot endpoints.
    pub fn routes(&self) -> impl Iterator<Item = &[usize]> {
        self.0.split(|&n| n == 0).filter(|r| !r.is_empty())
    }
}

impl From<Vec<usize>> for Tour {
    fn from(v: Vec<usize>) -> Self {
        Tour(v)
    }
}

/// Serialized form of a solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TourRecord {
    pub instance_id: String,
    pub nodes: Tour,
    pub cost: f64,
}

impl TourRecord {
    pub fn new(instance: &VrpInstance, tour: &Tour) -> Result<Self> {
        Ok(TourRecord {
            instance_id: instance.id.clone(),
            cost: tour_length(instance, tour)?,
            nodes: tour.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Empty,
    UnknownNode(usize),
    Missing(usize),
    Duplicate(usize),
    MustStartAtDepot,
    MustEndAtDepot,
    ConsecutiveDepots { position: usize },
    CapacityOverflow { route: usize, load: u32, capacity: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "tour is empty"),
            Violation::UnknownNode(n) => write!(f, "node {n} does not exist"),
            Violation::Missing(n) => write!(f, "customer {n} is never visited"),
            Violation::Duplicate(n) => write!(f, "customer {n} is visited more than once"),
            Violation::MustStartAtDepot => write!(f, "tour does not start at the depot"),
            Violation::MustEndAtDepot => write!(f, "tour does not end at the depot"),
            Violation::ConsecutiveDepots { position } => {
                write!(f, "consecutive depot visits at position {position}")
            }
            Violation::CapacityOverflow {
                route,
                load,
                capacity,
            } => write!(f, "route {route} carries {load} > capacity {capacity}"),
        }
    }
}

/// Checks every constraint and reports all violations found.
pub fn validate_tour(instance: &VrpInstance, tour: &Tour) -> Result<(), Vec<Violation>> {
    let nodes = tour.nodes();
    let n = instance.node_count();
    let mut violations = Vec::new();
    if nodes.is_empty() {
        return Err(vec![Violation::Empty]);
    }
    let mut seen = vec![0usize; n];
    for &v in nodes {
        if v >= n {
            violations.push(Violation::UnknownNode(v));
        } else {
            seen[v] += 1;
        }
    }
    let first_customer = match instance.kind {
        ProblemKind::Tsp => 0,
        ProblemKind::Cvrp => 1,
    };
    for (v, &count) in seen.iter().enumerate().skip(first_customer) {
        match count {
            0 => violations.push(Violation::Missing(v)),
            1 => {}
            _ => violations.push(Violation::Duplicate(v)),
        }
    }
    if instance.kind == ProblemKind::Cvrp {
        if nodes[0] != 0 {
            violations.push(Violation::MustStartAtDepot);
        }
        if *nodes.last().unwrap() != 0 {
            violations.push(Violation::MustEndAtDepot);
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if w[0] == 0 && w[1] == 0 {
                violations.push(Violation::ConsecutiveDepots { position: i + 1 });
            }
        }
        for (r, route) in tour.routes().enumerate() {
            let load: u32 = route
                .iter()
                .filter(|&&v| v < n)
                .map(|&v| instance.demand(v))
                .sum();
            if load > instance.capacity {
                violations.push(Violation::CapacityOverflow {
                    route: r,
                    load,
                    capacity: instance.capacity,
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Cyclic sum of edge lengths without any feasibility check. For CVRP the
/// closing edge is depot to depot and contributes nothing.
#[inline]
pub fn cycle_cost(instance: &VrpInstance, nodes: &[usize]) -> f64 {
    if nodes.len() < 2 {
        return 0.0;
    }
    let mut cost = instance.dist(nodes[nodes.len() - 1], nodes[0]);
    for w in nodes.windows(2) {
        cost += instance.dist(w[0], w[1]);
    }
    cost
}

/// Tour length C(τ): Euclidean edges between consecutive nodes, including the
/// closing edge of a TSP cycle.
pub fn tour_length(instance: &VrpInstance, tour: &Tour) -> Result<f64> {
    validate_tour(instance, tour)
        .map_err(|v| Error::Infeasible(v.iter().map(ToString::to_string).collect()))?;
    Ok(cycle_cost(instance, tour.nodes()))
}

/// Unweighted mean over sizes of the per-size mean cost.
pub fn cross_size_objective(costs_by_size: &BTreeMap<usize, f64>) -> Result<f64> {
    if costs_by_size.is_empty() {
        return Err(Error::Empty("cross-size objective needs at least one size"));
    }
    Ok(costs_by_size.values().sum::<f64>() / costs_by_size.len() as f64)
}
