//! Random and benchmark VRP instances.
//!
//! Coordinates always live in the unit square. Benchmark files keep their raw
//! coordinates next to the normalized copy together with the scale factor, so
//! tour lengths can be reported in the original units.

mod augment;
mod set;
mod tsplib;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use augment::{augment, AugmentationId};
pub use set::{instance_seed, InstanceSet};
pub use tsplib::{parse_benchmark, parse_benchmark_str, write_benchmark, BenchmarkFormat};

/// Smallest number of customers any instance may have.
pub const MIN_CUSTOMERS: usize = 2;

/// Demands of generated CVRP customers are uniform integers in this range.
pub const DEMAND_RANGE: (u32, u32) = (1, 9);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Tsp,
    Cvrp,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProblemKind::Tsp => f.write_str("tsp"),
            ProblemKind::Cvrp => f.write_str("cvrp"),
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsp" => Ok(ProblemKind::Tsp),
            "cvrp" => Ok(ProblemKind::Cvrp),
            other => Err(Error::Config(format!("unknown problem kind `{other}`"))),
        }
    }
}

pub type Point = [f64; 2];

/// A routing instance over the complete Euclidean graph of its nodes.
///
/// For CVRP node 0 is the depot and `demands[i]` belongs to node `i + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VrpInstance {
    pub id: String,
    pub kind: ProblemKind,
    pub coords: Vec<Point>,
    #[serde(default)]
    pub demands: Vec<u32>,
    #[serde(default)]
    pub capacity: u32,
    /// Factor mapping normalized lengths back to raw units.
    #[serde(default = "unit_scale")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_coords: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn unit_scale() -> f64 {
    1.0
}

impl VrpInstance {
    pub fn tsp(id: impl Into<String>, coords: Vec<Point>) -> Result<Self> {
        let inst = VrpInstance {
            id: id.into(),
            kind: ProblemKind::Tsp,
            coords,
            demands: Vec::new(),
            capacity: 0,
            scale: 1.0,
            raw_coords: None,
            seed: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn cvrp(
        id: impl Into<String>,
        coords: Vec<Point>,
        demands: Vec<u32>,
        capacity: u32,
    ) -> Result<Self> {
        let inst = VrpInstance {
            id: id.into(),
            kind: ProblemKind::Cvrp,
            coords,
            demands,
            capacity,
            scale: 1.0,
            raw_coords: None,
            seed: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Number of nodes including the depot.
    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    /// Number of customers, i.e. the problem size N.
    pub fn customers(&self) -> usize {
        match self.kind {
            ProblemKind::Tsp => self.coords.len(),
            ProblemKind::Cvrp => self.coords.len().saturating_sub(1),
        }
    }

    /// Demand of node `node`; zero for the depot and for TSP nodes.
    #[inline]
    pub fn demand(&self, node: usize) -> u32 {
        match self.kind {
            ProblemKind::Tsp => 0,
            ProblemKind::Cvrp if node == 0 => 0,
            ProblemKind::Cvrp => self.demands[node - 1],
        }
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        let [ax, ay] = self.coords[a];
        let [bx, by] = self.coords[b];
        (ax - bx).hypot(ay - by)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.customers();
        if n < MIN_CUSTOMERS {
            return Err(Error::InvalidSize {
                size: n,
                min: MIN_CUSTOMERS,
            });
        }
        for (i, p) in self.coords.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite() && (0.0..=1.0).contains(c)) {
                return Err(Error::parse(
                    "coords",
                    format!("node {i} at ({}, {}) lies outside the unit square", p[0], p[1]),
                ));
            }
        }
        match self.kind {
            ProblemKind::Tsp => {
                if !self.demands.is_empty() || self.capacity != 0 {
                    return Err(Error::parse("demands", "TSP instances carry no demands"));
                }
            }
            ProblemKind::Cvrp => {
                if self.capacity == 0 {
                    return Err(Error::parse("CAPACITY", "capacity must be positive"));
                }
                if self.demands.len() != n {
                    return Err(Error::parse(
                        "DEMAND_SECTION",
                        format!("expected {n} customer demands, got {}", self.demands.len()),
                    ));
                }
                if let Some((i, d)) = self
                    .demands
                    .iter()
                    .enumerate()
                    .find(|(_, &d)| d == 0 || d > self.capacity)
                {
                    return Err(Error::parse(
                        "DEMAND_SECTION",
                        format!(
                            "customer {} has demand {d}, must be in 1..={}",
                            i + 1,
                            self.capacity
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Vehicle capacity used for generated CVRP instances with `n` customers.
///
/// Piecewise linear through (10, 20), (20, 30), (50, 40), (100, 50); constant
/// below 10 and slope 10 per 100 customers above 100.
pub fn capacity_for(n: usize) -> u32 {
    const ANCHORS: [(f64, f64); 4] = [(10.0, 20.0), (20.0, 30.0), (50.0, 40.0), (100.0, 50.0)];
    let x = n as f64;
    let value = if x <= ANCHORS[0].0 {
        ANCHORS[0].1
    } else if x >= 100.0 {
        50.0 + (x - 100.0) * 0.1
    } else {
        let seg = ANCHORS
            .windows(2)
            .find(|w| x <= w[1].0)
            .expect("x lies inside the anchor range");
        let (x0, y0) = seg[0];
        let (x1, y1) = seg[1];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    };
    value.round() as u32
}

fn check_size(n: usize) -> Result<()> {
    if n < MIN_CUSTOMERS {
        Err(Error::InvalidSize {
            size: n,
            min: MIN_CUSTOMERS,
        })
    } else {
        Ok(())
    }
}

fn uniform_points<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<Point> {
    (0..count).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
}

/// `n` points i.i.d. uniform on the unit square.
pub fn generate_tsp<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<VrpInstance> {
    check_size(n)?;
    Ok(VrpInstance {
        id: format!("tsp{n}"),
        kind: ProblemKind::Tsp,
        coords: uniform_points(n, rng),
        demands: Vec::new(),
        capacity: 0,
        scale: 1.0,
        raw_coords: None,
        seed: None,
    })
}

/// Depot plus `n` uniform customers with demands in [`DEMAND_RANGE`] and
/// capacity [`capacity_for`]`(n)`.
pub fn generate_cvrp<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<VrpInstance> {
    generate_cvrp_with_capacity(n, capacity_for(n), rng)
}

pub fn generate_cvrp_with_capacity<R: Rng + ?Sized>(
    n: usize,
    capacity: u32,
    rng: &mut R,
) -> Result<VrpInstance> {
    check_size(n)?;
    if capacity < DEMAND_RANGE.1 {
        return Err(Error::Config(format!(
            "capacity {capacity} is below the maximum demand {}",
            DEMAND_RANGE.1
        )));
    }
    let coords = uniform_points(n + 1, rng);
    let demands = (0..n)
        .map(|_| rng.gen_range(DEMAND_RANGE.0..=DEMAND_RANGE.1))
        .collect();
    Ok(VrpInstance {
        id: format!("cvrp{n}"),
        kind: ProblemKind::Cvrp,
        coords,
        demands,
        capacity,
        scale: 1.0,
        raw_coords: None,
        seed: None,
    })
}

pub fn generate<R: Rng + ?Sized>(kind: ProblemKind, n: usize, rng: &mut R) -> Result<VrpInstance> {
    match kind {
        ProblemKind::Tsp => generate_tsp(n, rng),
        ProblemKind::Cvrp => generate_cvrp(n, rng),
    }
}

/// Min-max scaling with one factor for both axes so the aspect ratio (and
/// hence the optimal tour) is preserved. The raw coordinates are kept.
pub fn normalize_coords(instance: &VrpInstance) -> Result<VrpInstance> {
    let raw = instance
        .raw_coords
        .clone()
        .unwrap_or_else(|| instance.coords.clone());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &raw {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateInstance(
            "all points coincide; cannot normalize".into(),
        ));
    }
    let coords = raw
        .iter()
        .map(|p| {
            [
                ((p[0] - lo[0]) / scale).clamp(0.0, 1.0),
                ((p[1] - lo[1]) / scale).clamp(0.0, 1.0),
            ]
        })
        .collect();
    Ok(VrpInstance {
        coords,
        scale,
        raw_coords: Some(raw),
        ..instance.clone()
    })
}
