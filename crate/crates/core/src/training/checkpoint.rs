use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::data::Norm;
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const CHECKPOINT_VERSION: &str = "dvgsn-ckpt-1";

/// Trained weights plus everything needed to use them on raw data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub config: TrainConfig,
    pub norm: Option<Norm>,
    pub best_epoch: usize,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(config: TrainConfig, norm: Option<Norm>, best_epoch: usize, params: ModelParams) -> Self {
        Self {
            version: CHECKPOINT_VERSION.to_string(),
            config,
            norm,
            best_epoch,
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ck: Self = serde_json::from_str(s)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {:?}, expected {CHECKPOINT_VERSION:?}",
                ck.version
            )));
        }
        let (p, q, h) = (ck.params.p(), ck.params.q(), ck.params.hidden());
        if (p, q, h) != (ck.config.p, ck.config.q, ck.config.hidden) {
            return Err(Error::Format(format!(
                "checkpoint weights are {p}×{q}×{h} but config says {}×{}×{}",
                ck.config.p, ck.config.q, ck.config.hidden
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
