use serde::{Deserialize, Serialize};

use super::GraphKind;
use crate::baselines::fixed_graph_mask;
use crate::data::{Norm, Split, WindowedDataset};
use crate::error::{Error, Result};
use crate::model::{forward, GraphActivations, ModelParams, NeighborhoodMask};
use crate::numerics::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: Split,
    /// Mean squared residual in standardized units.
    pub mse_std: f64,
    /// Mean squared residual in ILI-rate units.
    pub mse_raw: f64,
    /// Standardized MSE per horizon, length q.
    pub per_horizon: Vec<f64>,
    pub n_nodes: usize,
}

impl EvalReport {
    /// Scores standardized predictions against standardized targets.
    pub fn from_predictions(split: Split, y: &Matrix, y_hat: &Matrix, norm: Norm) -> Result<Self> {
        if y.shape() != y_hat.shape() {
            return Err(Error::Dimension {
                op: "evaluate",
                lhs: y.shape(),
                rhs: y_hat.shape(),
            });
        }
        let (n, q) = y.shape();
        if n == 0 {
            return Err(Error::Argument(format!("split {} has no nodes", split.name())));
        }
        let mut per_horizon = vec![0.0; q];
        let mut raw = 0.0;
        for v in 0..n {
            for h in 0..q {
                per_horizon[h] += (y[(v, h)] - y_hat[(v, h)]).powi(2);
                raw += (norm.invert(y[(v, h)]) - norm.invert(y_hat[(v, h)])).powi(2);
            }
        }
        for x in &mut per_horizon {
            *x /= n as f64;
        }
        let mse_std = per_horizon.iter().sum::<f64>() / q as f64;
        Ok(Self {
            split,
            mse_std,
            mse_raw: raw / (n * q) as f64,
            per_horizon,
            n_nodes: n,
        })
    }
}

/// Nodes scored for `split`; rejects `Unused`.
pub fn eval_indices(ds: &WindowedDataset, split: Split) -> Result<Vec<usize>> {
    if split == Split::Unused {
        return Err(Error::Argument("cannot evaluate the unused split".into()));
    }
    Ok(ds.indices(split))
}

/// The graph an evaluation runs on: training nodes first, then the scored
/// nodes (for a held-out split), with the local mask over those rows.
#[derive(Clone, Debug)]
pub struct EvalGraph {
    /// Global node indices, row order of the local graph.
    pub nodes: Vec<usize>,
    pub mask: NeighborhoodMask,
    /// Local rows that are scored.
    pub scored: Vec<usize>,
}

/// Edge support over all dataset nodes by global index.
pub fn support_mask(ds: &WindowedDataset, graph: GraphKind) -> NeighborhoodMask {
    match graph {
        GraphKind::Dynamic => NeighborhoodMask::complete(ds.n_nodes()),
        GraphKind::Fixed => fixed_graph_mask(ds),
    }
}

/// Training rows see training columns only. Each held-out row sees the
/// training columns plus itself; held-out nodes never see each other.
/// The result is intersected with the edge support of `graph`.
pub fn eval_graph(ds: &WindowedDataset, split: Split, graph: GraphKind) -> Result<EvalGraph> {
    let train = ds.indices(Split::Train);
    if train.is_empty() {
        return Err(Error::Argument("dataset has no training nodes".into()));
    }
    let support = support_mask(ds, graph);
    if split == Split::Train {
        let scored = (0..train.len()).collect();
        let mask = support.submask(&train);
        return Ok(EvalGraph {
            nodes: train,
            mask,
            scored,
        });
    }
    let held = eval_indices(ds, split)?;
    let n_train = train.len();
    let scored = (n_train..n_train + held.len()).collect();
    let mut nodes = train;
    nodes.extend(held);
    let mask = NeighborhoodMask::from_fn(nodes.len(), |a, b| {
        b < n_train && support.allows(nodes[a], nodes[b])
    });
    Ok(EvalGraph {
        nodes,
        mask,
        scored,
    })
}

/// Mask-permitted edges `(row, column)` of the graph whose column node is
/// stamped after the last training week. Self-loops are exempt.
pub fn leakage_violations(ds: &WindowedDataset, g: &EvalGraph) -> Vec<(usize, usize)> {
    let Some(&last) = ds.indices(Split::Train).last() else {
        return Vec::new();
    };
    let limit = ds.node_stamps[last];
    let mut out = Vec::new();
    for &a in &g.scored {
        for b in 0..g.nodes.len() {
            if a != b && g.mask.allows(a, b) && ds.node_stamps[g.nodes[b]] > limit {
                out.push((g.nodes[a], g.nodes[b]));
            }
        }
    }
    out
}

/// Forward pass over an evaluation graph.
pub fn predict(
    params: &ModelParams,
    ds: &WindowedDataset,
    g: &EvalGraph,
) -> Result<GraphActivations> {
    forward(&ds.chi.select_rows(&g.nodes), params, &g.mask)
}

/// Scores `split` under the transductive, leak-free graph policy.
pub fn evaluate(
    params: &ModelParams,
    ds: &WindowedDataset,
    split: Split,
    graph: GraphKind,
) -> Result<EvalReport> {
    let g = eval_graph(ds, split, graph)?;
    let act = predict(params, ds, &g)?;
    report_from(&act, ds, &g, split)
}

pub(crate) fn report_from(
    act: &GraphActivations,
    ds: &WindowedDataset,
    g: &EvalGraph,
    split: Split,
) -> Result<EvalReport> {
    let global: Vec<usize> = g.scored.iter().map(|&a| g.nodes[a]).collect();
    let y = ds.targets.select_rows(&global);
    let y_hat = act.y_hat.select_rows(&g.scored);
    EvalReport::from_predictions(split, &y, &y_hat, ds.norm())
}
