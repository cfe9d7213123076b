//! TSPLIB / CVRPLIB text format (EUC_2D only).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_coords, Point, ProblemKind, VrpInstance};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchmarkFormat {
    Tsplib,
    Cvrplib,
}

impl BenchmarkFormat {
    fn kind(self) -> ProblemKind {
        match self {
            BenchmarkFormat::Tsplib => ProblemKind::Tsp,
            BenchmarkFormat::Cvrplib => ProblemKind::Cvrp,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Coords,
    Demands,
    Depots,
}

pub fn parse_benchmark(path: &Path, format: BenchmarkFormat) -> Result<VrpInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_benchmark_str(&text, format)
}

pub fn parse_benchmark_str(text: &str, format: BenchmarkFormat) -> Result<VrpInstance> {
    let mut header: HashMap<String, String> = HashMap::new();
    let mut coords: Vec<(i64, Point)> = Vec::new();
    let mut demands: HashMap<i64, i64> = HashMap::new();
    let mut depots: Vec<i64> = Vec::new();
    let mut section = Section::Header;
    let mut seen_coords = false;
    let mut seen_demands = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        match line {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                seen_coords = true;
                continue;
            }
            "DEMAND_SECTION" => {
                section = Section::Demands;
                seen_demands = true;
                continue;
            }
            "DEPOT_SECTION" => {
                section = Section::Depots;
                continue;
            }
            _ => {}
        }
        if let Some((key, value)) = line.split_once(':') {
            if key.trim().chars().all(|c| c.is_ascii_uppercase() || c == '_') {
                header.insert(key.trim().to_string(), value.trim().to_string());
                section = Section::Header;
                continue;
            }
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |field: &str| Error::parse(field, format!("malformed line {}: `{line}`", lineno + 1));
        match section {
            Section::Header => return Err(bad("header")),
            Section::Coords => {
                if fields.len() < 3 {
                    return Err(bad("NODE_COORD_SECTION"));
                }
                let id: i64 = fields[0].parse().map_err(|_| bad("NODE_COORD_SECTION"))?;
                let x: f64 = fields[1].parse().map_err(|_| bad("NODE_COORD_SECTION"))?;
                let y: f64 = fields[2].parse().map_err(|_| bad("NODE_COORD_SECTION"))?;
                coords.push((id, [x, y]));
            }
            Section::Demands => {
                if fields.len() < 2 {
                    return Err(bad("DEMAND_SECTION"));
                }
                let id: i64 = fields[0].parse().map_err(|_| bad("DEMAND_SECTION"))?;
                let d: i64 = fields[1].parse().map_err(|_| bad("DEMAND_SECTION"))?;
                demands.insert(id, d);
            }
            Section::Depots => {
                for f in fields {
                    let id: i64 = f.parse().map_err(|_| bad("DEPOT_SECTION"))?;
                    if id >= 0 {
                        depots.push(id);
                    }
                }
            }
        }
    }

    let kind = format.kind();
    if let Some(t) = header.get("TYPE") {
        let declared = t.split_whitespace().next().unwrap_or("");
        let expected = match kind {
            ProblemKind::Tsp => "TSP",
            ProblemKind::Cvrp => "CVRP",
        };
        if declared != expected {
            return Err(Error::parse("TYPE", format!("expected {expected}, found `{t}`")));
        }
    }
    match header.get("EDGE_WEIGHT_TYPE").map(String::as_str) {
        Some("EUC_2D") | None => {}
        Some(other) => {
            return Err(Error::parse(
                "EDGE_WEIGHT_TYPE",
                format!("unsupported edge weight type `{other}`"),
            ))
        }
    }
    if !seen_coords || coords.is_empty() {
        return Err(Error::parse("NODE_COORD_SECTION", "section missing"));
    }
    if let Some(dim) = header.get("DIMENSION") {
        let dim: usize = dim
            .parse()
            .map_err(|_| Error::parse("DIMENSION", format!("not an integer: `{dim}`")))?;
        if dim != coords.len() {
            return Err(Error::parse(
                "DIMENSION",
                format!("declares {dim} nodes but {} coordinates were given", coords.len()),
            ));
        }
    }
    let name = header
        .get("NAME")
        .cloned()
        .unwrap_or_else(|| "unnamed".to_string());

    let mut inst = match kind {
        ProblemKind::Tsp => VrpInstance {
            id: name,
            kind,
            coords: coords.iter().map(|(_, p)| *p).collect(),
            demands: Vec::new(),
            capacity: 0,
            scale: 1.0,
            raw_coords: None,
            seed: None,
        },
        ProblemKind::Cvrp => {
            let cap_text = header
                .get("CAPACITY")
                .ok_or_else(|| Error::parse("CAPACITY", "field missing"))?;
            let capacity: i64 = cap_text
                .parse()
                .map_err(|_| Error::parse("CAPACITY", format!("not an integer: `{cap_text}`")))?;
            if capacity <= 0 {
                return Err(Error::parse("CAPACITY", format!("must be positive, got {capacity}")));
            }
            if !seen_demands {
                return Err(Error::parse("DEMAND_SECTION", "section missing"));
            }
            let depot = depots.first().copied().unwrap_or(coords[0].0);
            let depot_pos = coords
                .iter()
                .position(|(id, _)| *id == depot)
                .ok_or_else(|| Error::parse("DEPOT_SECTION", format!("unknown depot node {depot}")))?;
            let mut ordered = vec![coords[depot_pos]];
            ordered.extend(
                coords
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != depot_pos)
                    .map(|(_, c)| *c),
            );
            let mut cust_demands = Vec::with_capacity(ordered.len() - 1);
            for (id, _) in &ordered[1..] {
                let d = *demands.get(id).ok_or_else(|| {
                    Error::parse("DEMAND_SECTION", format!("no demand for node {id}"))
                })?;
                if d <= 0 || d > capacity {
                    return Err(Error::parse(
                        "DEMAND_SECTION",
                        format!("node {id} has demand {d}, must be in 1..={capacity}"),
                    ));
                }
                cust_demands.push(d as u32);
            }
            VrpInstance {
                id: name,
                kind,
                coords: ordered.iter().map(|(_, p)| *p).collect(),
                demands: cust_demands,
                capacity: capacity as u32,
                scale: 1.0,
                raw_coords: None,
                seed: None,
            }
        }
    };
    inst = normalize_coords(&inst)?;
    inst.validate()?;
    Ok(inst)
}

/// Serializes an instance in TSPLIB/CVRPLIB syntax using its raw coordinates
/// when present. Floats are written in shortest round-trip form.
pub fn write_benchmark(instance: &VrpInstance, format: BenchmarkFormat) -> Result<String> {
    if instance.kind != format.kind() {
        return Err(Error::Config(format!(
            "cannot write a {} instance as {format:?}",
            instance.kind
        )));
    }
    let coords = instance.raw_coords.as_ref().unwrap_or(&instance.coords);
    let mut out = String::new();
    let ty = match format {
        BenchmarkFormat::Tsplib => "TSP",
        BenchmarkFormat::Cvrplib => "CVRP",
    };
    let _ = writeln!(out, "NAME : {}", instance.id);
    let _ = writeln!(out, "TYPE : {ty}");
    let _ = writeln!(out, "DIMENSION : {}", coords.len());
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE : EUC_2D");
    if format == BenchmarkFormat::Cvrplib {
        let _ = writeln!(out, "CAPACITY : {}", instance.capacity);
    }
    out.push_str("NODE_COORD_SECTION\n");
    for (i, p) in coords.iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", i + 1, p[0], p[1]);
    }
    if format == BenchmarkFormat::Cvrplib {
        out.push_str("DEMAND_SECTION\n");
        for i in 0..coords.len() {
            let _ = writeln!(out, "{} {}", i + 1, instance.demand(i));
        }
        out.push_str("DEPOT_SECTION\n1\n-1\n");
    }
    out.push_str("EOF\n");
    Ok(out)
}
