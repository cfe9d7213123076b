use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{generate, ProblemKind, VrpInstance};
use crate::error::{Error, Result};

/// Seed of instance `index` in a generated set, derived with splitmix64 so
/// every record can be regenerated on its own.
pub fn instance_seed(base: u64, size: usize, index: usize) -> u64 {
    let mut z = base
        ^ (size as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (index as u64).rotate_left(32);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A fixed evaluation set, stored as one JSON record per line.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSet {
    pub kind: ProblemKind,
    pub size: usize,
    pub instances: Vec<VrpInstance>,
}

impl InstanceSet {
    pub fn generate(kind: ProblemKind, size: usize, count: usize, seed: u64) -> Result<Self> {
        let instances = (0..count)
            .map(|i| {
                let s = instance_seed(seed, size, i);
                let mut inst = generate(kind, size, &mut ChaCha8Rng::seed_from_u64(s))?;
                inst.id = format!("{kind}{size}-{i}");
                inst.seed = Some(s);
                Ok(inst)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InstanceSet {
            kind,
            size,
            instances,
        })
    }

    pub fn from_instances(instances: Vec<VrpInstance>) -> Result<Self> {
        let first = instances
            .first()
            .ok_or(Error::Empty("instance set has no instances"))?;
        let (kind, size) = (first.kind, first.customers());
        if let Some(bad) = instances
            .iter()
            .find(|i| i.kind != kind || i.customers() != size)
        {
            return Err(Error::Config(format!(
                "instance {} does not match set kind {kind} / size {size}",
                bad.id
            )));
        }
        Ok(InstanceSet {
            kind,
            size,
            instances,
        })
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for inst in &self.instances {
            out.push_str(&serde_json::to_string(inst)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let instances = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let inst: VrpInstance = serde_json::from_str(l)?;
                inst.validate()?;
                Ok(inst)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_instances(instances)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut text = String::new();
        for line in BufReader::new(f).lines() {
            text.push_str(&line.map_err(|e| Error::io(path, e))?);
            text.push('\n');
        }
        Self::from_jsonl(&text)
    }

    /// SHA-256 of the serialized set; reports reference sets by this hash.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_jsonl()?.as_bytes())))
    }
}
