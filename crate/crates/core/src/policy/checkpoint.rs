//! Versioned JSON checkpoint container. Weight vectors are stored as base64
//! of their little-endian bytes so they round-trip bit-exactly.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{PolicyConfig, PolicyParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

pub(crate) mod weights_b64 {
    use super::*;

    pub fn encode(w: &[f64]) -> String {
        let bytes: Vec<u8> = w.iter().flat_map(|x| x.to_le_bytes()).collect();
        STANDARD.encode(bytes)
    }

    pub fn decode(s: &str) -> std::result::Result<Vec<f64>, String> {
        let bytes = STANDARD.decode(s).map_err(|e| e.to_string())?;
        if bytes.len() % 8 != 0 {
            return Err(format!("{} bytes is not a whole number of f64", bytes.len()));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn serialize<S: Serializer>(w: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&encode(w))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        let s = String::deserialize(d)?;
        decode(&s).map_err(serde::de::Error::custom)
    }
}

/// Exact position of a ChaCha8 generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: hex::encode(rng.get_seed()),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        let bytes = hex::decode(&self.seed).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let seed: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::Checkpoint("rng seed must be 32 bytes".into()))?;
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|_| Error::Checkpoint("bad rng word position".into()))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSnapshot {
    pub kind: String,
    pub step: u64,
    #[serde(with = "weights_b64")]
    pub first_moment: Vec<f64>,
    #[serde(with = "weights_b64")]
    pub second_moment: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExemplarSnapshot {
    #[serde(with = "weights_b64")]
    pub weights: Vec<f64>,
    pub taken_at_epoch: usize,
}

/// Everything needed to rebuild a policy and resume training after `epoch`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub policy: PolicyConfig,
    #[serde(with = "weights_b64")]
    pub weights: Vec<f64>,
    pub epoch: usize,
    pub task_index: usize,
    pub seed: u64,
    pub config_hash: String,
    #[serde(default)]
    pub rng: Option<RngState>,
    #[serde(default)]
    pub optimizer: Option<OptimizerSnapshot>,
    #[serde(default)]
    pub exemplar: Option<ExemplarSnapshot>,
}

impl Checkpoint {
    pub fn new(params: &PolicyParams, epoch: usize, task_index: usize, seed: u64, config_hash: String) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            policy: params.config().clone(),
            weights: params.weights().to_vec(),
            epoch,
            task_index,
            seed,
            config_hash,
            rng: None,
            optimizer: None,
            exemplar: None,
        }
    }

    pub fn params(&self) -> Result<PolicyParams> {
        PolicyParams::from_weights(self.policy.clone(), self.weights.clone())
    }

    pub fn exemplar_params(&self) -> Result<Option<PolicyParams>> {
        self.exemplar
            .as_ref()
            .map(|e| PolicyParams::from_weights(self.policy.clone(), e.weights.clone()))
            .transpose()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)
            .map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        ck.params()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
