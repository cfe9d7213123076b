use crate::error::{Error, Result};
use crate::instances::{ProblemKind, VrpInstance};

use super::Tour;

/// Partial solution of the node-by-node construction process.
#[derive(Clone, Debug)]
pub struct ConstructionState<'a> {
    instance: &'a VrpInstance,
    partial: Vec<usize>,
    visited: Vec<bool>,
    visited_customers: usize,
    first: usize,
    current: usize,
    remaining: u32,
    done: bool,
}

impl<'a> ConstructionState<'a> {
    /// Initial state: TSP at node 0, CVRP at the depot with a full vehicle.
    pub fn new(instance: &'a VrpInstance) -> Self {
        Self::with_start(instance, 0)
    }

    /// TSP state that has already visited `start`. For CVRP `start` is ignored
    /// and the state starts at the depot.
    pub fn with_start(instance: &'a VrpInstance, start: usize) -> Self {
        let n = instance.node_count();
        let mut visited = vec![false; n];
        let (first, customers) = match instance.kind {
            ProblemKind::Tsp => {
                assert!(start < n, "start node {start} out of range");
                visited[start] = true;
                (start, 1)
            }
            ProblemKind::Cvrp => (0, 0),
        };
        ConstructionState {
            instance,
            partial: vec![first],
            visited,
            visited_customers: customers,
            first,
            current: first,
            remaining: instance.capacity,
            done: instance.kind == ProblemKind::Tsp && customers == n,
        }
    }

    pub fn instance(&self) -> &'a VrpInstance {
        self.instance
    }

    pub fn partial(&self) -> &[usize] {
        &self.partial
    }

    pub fn visited(&self) -> &[bool] {
        &self.visited
    }

    pub fn visited_customers(&self) -> usize {
        self.visited_customers
    }

    pub fn first_node(&self) -> usize {
        self.first
    }

    pub fn current_node(&self) -> usize {
        self.current
    }

    pub fn remaining_capacity(&self) -> u32 {
        self.remaining
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    #[inline]
    pub fn is_feasible(&self, action: usize) -> bool {
        if self.done || action >= self.visited.len() {
            return false;
        }
        match self.instance.kind {
            ProblemKind::Tsp => !self.visited[action],
            ProblemKind::Cvrp if action == 0 => self.current != 0,
            ProblemKind::Cvrp => {
                !self.visited[action] && self.instance.demand(action) <= self.remaining
            }
        }
    }

    /// Boolean mask over all nodes.
    pub fn feasible_actions(&self) -> Result<Vec<bool>> {
        if self.done {
            return Err(Error::NoAction);
        }
        Ok((0..self.visited.len()).map(|a| self.is_feasible(a)).collect())
    }

    /// Indices of feasible nodes in ascending order, written into `out`.
    pub fn feasible_nodes(&self, out: &mut Vec<usize>) {
        out.clear();
        if self.done {
            return;
        }
        out.extend((0..self.visited.len()).filter(|&a| self.is_feasible(a)));
    }

    pub fn step(&mut self, action: usize) -> Result<()> {
        if self.done {
            return Err(Error::NoAction);
        }
        if !self.is_feasible(action) {
            return Err(Error::InvalidAction { action });
        }
        self.partial.push(action);
        self.current = action;
        let total = self.instance.customers();
        match self.instance.kind {
            ProblemKind::Tsp => {
                self.visited[action] = true;
                self.visited_customers += 1;
                self.done = self.visited_customers == total;
            }
            ProblemKind::Cvrp if action == 0 => {
                self.remaining = self.instance.capacity;
                self.done = self.visited_customers == total;
            }
            ProblemKind::Cvrp => {
                self.visited[action] = true;
                self.visited_customers += 1;
                self.remaining -= self.instance.demand(action);
            }
        }
        Ok(())
    }

    pub fn into_tour(self) -> Tour {
        Tour(self.partial)
    }
}
