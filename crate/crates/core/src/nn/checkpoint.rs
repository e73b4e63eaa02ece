use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Parameterized, Tensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Named parameter tensors plus the model configuration that shaped them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub kind: String,
    pub config: serde_json::Value,
    pub params: BTreeMap<String, Tensor>,
}

impl Checkpoint {
    pub fn capture<M: Parameterized + ?Sized>(kind: &str, config: serde_json::Value, model: &M) -> Self {
        let params = model
            .named_params()
            .into_iter()
            .map(|(name, p)| (name, p.value.clone()))
            .collect();
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            kind: kind.to_string(),
            config,
            params,
        }
    }

    /// Copies stored values into `model`; names and shapes must match exactly.
    pub fn restore<M: Parameterized + ?Sized>(&self, model: &mut M) -> Result<()> {
        let mut targets = model.named_params_mut();
        if targets.len() != self.params.len() {
            return Err(Error::Format(format!(
                "checkpoint holds {} tensors, model has {}",
                self.params.len(),
                targets.len()
            )));
        }
        for (name, p) in targets.iter_mut() {
            let stored = self
                .params
                .get(name)
                .ok_or_else(|| Error::Format(format!("checkpoint lacks tensor '{name}'")))?;
            if stored.shape != p.value.shape {
                return Err(Error::Format(format!(
                    "tensor '{name}' has shape {:?} in checkpoint, {:?} in model",
                    stored.shape, p.value.shape
                )));
            }
            p.value.data.copy_from_slice(&stored.data);
        }
        Ok(())
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Format(format!("expected a '{kind}' checkpoint, found '{}'", self.kind)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint format version {}",
                ck.format_version
            )));
        }
        for (name, t) in &ck.params {
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(Error::Format(format!("tensor '{name}' data does not fill its shape")));
            }
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
