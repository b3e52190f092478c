use serde::{Deserialize, Serialize};

use crate::data::{Split, WindowedDataset};
use crate::error::{Error, Result};
use crate::model::{LossMode, HIDDEN};

/// Edge support of the virtual graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// Every node may aggregate from every other node.
    #[default]
    Dynamic,
    /// Only the previous week and the same week one year earlier.
    Fixed,
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dynamic" | "none" => Ok(GraphKind::Dynamic),
            "fixed" => Ok(GraphKind::Fixed),
            other => Err(Error::Argument(format!("unknown graph kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub p: usize,
    pub q: usize,
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub lambda: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub loss_mode: LossMode,
    pub graph: GraphKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            p: 9,
            q: 1,
            hidden: HIDDEN,
            lr: 0.001,
            epochs: 200,
            lambda: 0.01,
            batch_size: 32,
            seed: 0,
            loss_mode: LossMode::Averaged,
            graph: GraphKind::Dynamic,
        }
    }
}

impl TrainConfig {
    /// Checks the config on its own and against `ds`.
    pub fn validate(&self, ds: &WindowedDataset) -> Result<()> {
        let bad = |msg: String| Err(Error::Argument(msg));
        if self.p == 0 || self.q == 0 {
            return bad(format!("p = {} and q = {} must be positive", self.p, self.q));
        }
        if (self.p, self.q) != (ds.p, ds.q) {
            return bad(format!(
                "config (p = {}, q = {}) does not match dataset (p = {}, q = {})",
                self.p, self.q, ds.p, ds.q
            ));
        }
        if self.hidden == 0 || self.epochs == 0 {
            return bad("hidden and epochs must be positive".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda = {} must be finite and non-negative", self.lambda));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        let n_train = ds.indices(Split::Train).len();
        if n_train == 0 {
            return bad("dataset has no training nodes".into());
        }
        if self.batch_size == 0 || self.batch_size > n_train {
            return bad(format!(
                "batch size {} must lie in 1..={n_train}",
                self.batch_size
            ));
        }
        Ok(())
    }
}
