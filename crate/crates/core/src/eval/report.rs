use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ReferenceMethod;
use crate::error::{Error, Result};
use crate::routing::cross_size_objective;

/// Results on one evaluation size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeRecord {
    pub size: usize,
    pub instance_count: usize,
    pub mean_obj: f64,
    /// Percent.
    pub mean_gap: f64,
    /// Seconds for the whole set.
    pub wall_time: f64,
    pub reference: ReferenceMethod,
    pub reference_obj: f64,
    pub instances_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub checkpoint: Option<String>,
    pub records: Vec<SizeRecord>,
    /// Unweighted mean of the per-size objectives.
    pub cross_size: f64,
}

impl EvalReport {
    pub fn new(method: String, checkpoint: Option<String>, records: Vec<SizeRecord>) -> Result<Self> {
        let mut by_size = BTreeMap::new();
        for r in &records {
            if r.instance_count == 0 {
                return Err(Error::Empty("size record without instances"));
            }
            if by_size.insert(r.size, r.mean_obj).is_some() {
                return Err(Error::Config(format!("size {} evaluated twice", r.size)));
            }
        }
        let cross_size = cross_size_objective(&by_size)?;
        Ok(EvalReport {
            method,
            checkpoint,
            records,
            cross_size,
        })
    }

    pub fn record(&self, size: usize) -> Option<&SizeRecord> {
        self.records.iter().find(|r| r.size == size)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,checkpoint,size,instance_count,mean_obj,mean_gap_pct,wall_time_s,reference,reference_obj,instances_hash\n",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.4},{:.3},{},{:.6},{}",
                self.method,
                self.checkpoint.as_deref().unwrap_or(""),
                r.size,
                r.instance_count,
                r.mean_obj,
                r.mean_gap,
                r.wall_time,
                r.reference,
                r.reference_obj,
                r.instances_hash
            );
        }
        out
    }

    /// One JSON object per size record plus a trailing summary line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            let mut v = serde_json::to_value(r)?;
            v["method"] = self.method.clone().into();
            v["checkpoint"] = self.checkpoint.clone().into();
            out.push_str(&serde_json::to_string(&v)?);
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&serde_json::json!({
            "method": self.method,
            "checkpoint": self.checkpoint,
            "cross_size": self.cross_size,
        }))?);
        out.push('\n');
        Ok(out)
    }

    /// Obj. / Gap / Time per size and the average of total costs.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.method);
        let _ = writeln!(out, "{:>6} {:>10} {:>8} {:>9}  reference", "N", "Obj.", "Gap", "Time");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:>6} {:>10.4} {:>7.2}% {:>8.2}s  {}",
                r.size, r.mean_obj, r.mean_gap, r.wall_time, r.reference
            );
        }
        let _ = writeln!(out, "Average of Total costs: {:.4}", self.cross_size);
        out
    }
}
