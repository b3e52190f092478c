use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::eval::{eval_graph, predict, report_from};
use super::TrainConfig;
use crate::data::{Split, WindowedDataset};
use crate::error::{Error, Result};
use crate::model::{backward, forward, ModelParams};
use crate::numerics::{adam_step, AdamState, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the per-batch objectives (data term plus penalty).
    pub train_loss: f64,
    /// Mean of the per-batch penalty terms.
    pub train_penalty: f64,
    /// Standardized MSE over all training nodes after the epoch.
    pub train_mse: f64,
    /// Standardized validation MSE after the epoch, if a val split exists.
    pub val_mse: Option<f64>,
    /// `‖T‖²_F` of the training graph after the epoch.
    pub t_frob_sq: f64,
}

/// Per-epoch log of one run.
///
/// Wall-clock timings are kept outside the serialized records so that the
/// history of a seeded run is reproducible byte for byte.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Index into `epochs` of the selected parameters.
    pub best_epoch: usize,
    #[serde(skip)]
    pub wall_clock_s: Vec<f64>,
}

impl TrainHistory {
    /// Selection score of an epoch: val MSE, or train MSE without a val split.
    pub fn score(rec: &EpochRecord) -> f64 {
        rec.val_mse.unwrap_or(rec.train_mse)
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.get(self.best_epoch)
    }

    pub fn total_wall_clock_s(&self) -> f64 {
        self.wall_clock_s.iter().sum()
    }

    /// One JSON object per line, per epoch.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for rec in &self.epochs {
            out.push_str(&serde_json::to_string(rec)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Inverse of [`TrainHistory::to_jsonl`]; recomputes the best epoch.
    pub fn from_jsonl(s: &str) -> Result<Self> {
        let epochs = s
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<EpochRecord>, _>>()?;
        let best_epoch = argmin_first(epochs.iter().map(Self::score));
        Ok(Self {
            epochs,
            best_epoch,
            wall_clock_s: Vec::new(),
        })
    }
}

fn argmin_first(xs: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, x) in xs.enumerate() {
        if x < best.1 {
            best = (i, x);
        }
    }
    best.0
}

/// Fits the model on the training split.
///
/// Each step runs the whole training graph forward, scores one shuffled
/// batch of training nodes, and takes an Adam step. After every epoch the
/// train and val splits are scored; the returned parameters are those of
/// the epoch with the lowest val MSE (earliest on ties).
pub fn train(ds: &WindowedDataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainHistory)> {
    cfg.validate(ds)?;
    let graph = eval_graph(ds, Split::Train, cfg.graph)?;
    let val_graph = if ds.indices(Split::Val).is_empty() {
        None
    } else {
        Some(eval_graph(ds, Split::Val, cfg.graph)?)
    };
    let n_train = graph.nodes.len();
    let chi = ds.chi.select_rows(&graph.nodes);
    let y = ds.targets.select_rows(&graph.nodes);

    let mut rng = Rng::new(cfg.seed);
    let max_degree = (0..n_train).map(|v| graph.mask.row_count(v)).max().unwrap_or(1);
    let mut params = ModelParams::init_for_graph(cfg.p, cfg.q, cfg.hidden, max_degree, &mut rng);
    let mut states: Vec<AdamState> = params.matrices().iter().map(|m| AdamState::for_param(m)).collect();
    let mut best = params.clone();
    let mut history = TrainHistory::default();
    let mut best_score = f64::INFINITY;
    let mut order: Vec<usize> = (0..n_train).collect();

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        rng.shuffle(&mut order);
        let (mut loss_sum, mut penalty_sum, mut n_batches) = (0.0, 0.0, 0usize);
        for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
            let diverged = |loss: f64| Error::Diverged { epoch, step, loss };
            let act = forward(&chi, &params, &graph.mask).map_err(|e| match e {
                Error::NonFinite { .. } => diverged(f64::NAN),
                e => e,
            })?;
            let (lb, grads) = backward(
                &act,
                &chi,
                &y,
                &params,
                &graph.mask,
                cfg.lambda,
                batch,
                cfg.loss_mode,
            )
            .map_err(|e| match e {
                Error::NonFinite { .. } => diverged(f64::NAN),
                e => e,
            })?;
            if !lb.total.is_finite() {
                return Err(diverged(lb.total));
            }
            for ((w, g), st) in params
                .matrices_mut()
                .into_iter()
                .zip(grads.matrices())
                .zip(&mut states)
            {
                adam_step(w, g, st, cfg.lr)?;
            }
            loss_sum += lb.total;
            penalty_sum += lb.penalty;
            n_batches += 1;
        }

        let act = forward(&chi, &params, &graph.mask)?;
        let train_rep = report_from(&act, ds, &graph, Split::Train)?;
        let val_mse = match &val_graph {
            Some(g) => Some(report_from(&predict(&params, ds, g)?, ds, g, Split::Val)?.mse_std),
            None => None,
        };
        let rec = EpochRecord {
            epoch,
            train_loss: loss_sum / n_batches as f64,
            train_penalty: penalty_sum / n_batches as f64,
            train_mse: train_rep.mse_std,
            val_mse,
            t_frob_sq: act.t.frobenius_sq(),
        };
        let score = TrainHistory::score(&rec);
        if !score.is_finite() {
            return Err(Error::Diverged {
                epoch,
                step: n_batches,
                loss: score,
            });
        }
        if score < best_score {
            best_score = score;
            best = params.clone();
            history.best_epoch = epoch;
        }
        log::debug!(
            "epoch {epoch}: loss {:.6} train {:.6} val {:?}",
            rec.train_loss,
            rec.train_mse,
            rec.val_mse
        );
        history.epochs.push(rec);
        history.wall_clock_s.push(started.elapsed().as_secs_f64());
    }
    Ok((best, history))
}
