//! Checkpoint layout: magic `CFNN`, `u32` version, `u64` header length, the JSON
//! header, `u64` parameter count, then the flat parameters as little-endian `f64`
//! (layer-major; per layer the row-major `outputs × inputs` weights, then biases).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{FlowMapModel, ModelMeta, INPUT_ORDERING};
use crate::trajectory::ByteCursor;
use crate::{fingerprint_bytes, Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CFNN";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub obs_dim: usize,
    pub memory_len: usize,
    pub hidden_layers: Vec<usize>,
    pub activation: String,
    pub input_width: usize,
    pub output_width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub architecture: Architecture,
    pub input_ordering: String,
    pub parameter_layout: String,
    pub param_count: usize,
    pub meta: ModelMeta,
}

impl FlowMapModel {
    pub fn checkpoint_header(&self) -> CheckpointHeader {
        CheckpointHeader {
            format: "chaosflow-model".into(),
            version: CHECKPOINT_VERSION,
            architecture: Architecture {
                obs_dim: self.obs_dim(),
                memory_len: self.memory_len(),
                hidden_layers: self.hidden_layers().to_vec(),
                activation: "relu".into(),
                input_width: self.input_width(),
                output_width: self.obs_dim(),
            },
            input_ordering: INPUT_ORDERING.into(),
            parameter_layout: "layer-major; row-major weights (outputs x inputs) then biases".into(),
            param_count: self.params().len(),
            meta: self.meta.clone(),
        }
    }

    pub fn to_checkpoint_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.checkpoint_header())?;
        let mut out = Vec::with_capacity(24 + header.len() + self.params().len() * 8);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.params().len() as u64).to_le_bytes());
        for p in self.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = ByteCursor::new(bytes);
        if cur.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("missing CFNN magic".into()));
        }
        let version = cur.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let header_len = cur.u64()? as usize;
        let header: CheckpointHeader = serde_json::from_slice(cur.take(header_len)?)?;
        if header.input_ordering != INPUT_ORDERING || header.architecture.activation != "relu" {
            return Err(Error::Format("unsupported input ordering or activation".into()));
        }
        let count = cur.u64()? as usize;
        if count != header.param_count || cur.remaining() != count * 8 {
            return Err(Error::Format("parameter blob does not match header".into()));
        }
        let params = (0..count).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let arch = &header.architecture;
        let mut model = FlowMapModel::from_params(arch.obs_dim, arch.memory_len, &arch.hidden_layers, params)?;
        model.meta = header.meta;
        Ok(model)
    }

    /// SHA-256 of the checkpoint encoding.
    pub fn fingerprint(&self) -> Result<String> {
        Ok(fingerprint_bytes(&self.to_checkpoint_bytes()?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = BufWriter::new(File::create(path)?);
        file.write_all(&self.to_checkpoint_bytes()?)?;
        file.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_checkpoint_bytes(&bytes)
    }
}
