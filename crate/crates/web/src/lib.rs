//! Browser demo: train a small model on a synthetic weekly series, then
//! expose the learned significance matrix, neighbor curves and forecasts.
//!
//! Everything crosses the JS boundary as numbers, plain vectors or JSON
//! strings, so the same methods run under native `cargo test`.

use dvgsn::data::synthetic::{seasonal_ili, sinusoid};
use dvgsn::data::{prepare_dataset, Split, SplitPolicy, WeekStamp, WindowedDataset};
use dvgsn::interpret::{top_k_neighbors, Direction};
use dvgsn::model::ModelParams;
use dvgsn::numerics::Matrix;
use dvgsn::training::{eval_graph, predict, train, GraphKind, TrainConfig, TrainHistory};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const SPLITS: SplitPolicy = SplitPolicy::Fraction {
    train: 0.6,
    val: 0.2,
};

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[wasm_bindgen]
pub struct Demo {
    ds: WindowedDataset,
    params: ModelParams,
    cfg: TrainConfig,
    graph: GraphKind,
    history: TrainHistory,
    train_nodes: Vec<usize>,
    heat: Matrix,
}

#[derive(Serialize)]
struct ForecastPoint {
    node: usize,
    stamp: WeekStamp,
    split: Split,
    actual: f64,
    predicted: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    nodes: usize,
    train: usize,
    val: usize,
    test: usize,
    best_epoch: usize,
    train_mse: Vec<f64>,
    val_mse: Vec<Option<f64>>,
    config: &'a TrainConfig,
}

#[wasm_bindgen]
impl Demo {
    /// Generates a series (`"seasonal"` or `"sinusoid"`) and trains on it.
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: &str,
        seed: u32,
        len: u32,
        p: u32,
        hidden: u32,
        epochs: u32,
        lambda: f64,
        fixed: bool,
    ) -> Result<Demo, String> {
        let start = WeekStamp::new(2002, 40).map_err(err)?;
        let series = match kind {
            "seasonal" => seasonal_ili(seed as u64, start, len as usize, false),
            "pandemic" => seasonal_ili(seed as u64, start, len as usize, true),
            "sinusoid" => sinusoid(start, len as usize, 52.0, 0.4),
            other => return Err(format!("unknown series kind {other:?}")),
        };
        let ds = prepare_dataset(&series, p as usize, 1, SPLITS).map_err(err)?;
        let graph = if fixed { GraphKind::Fixed } else { GraphKind::Dynamic };
        let cfg = TrainConfig {
            p: p as usize,
            hidden: hidden as usize,
            epochs: epochs as usize,
            lambda,
            seed: seed as u64,
            graph,
            ..TrainConfig::default()
        };
        let (params, history) = train(&ds, &cfg).map_err(err)?;
        let g = eval_graph(&ds, Split::Train, graph).map_err(err)?;
        let heat = predict(&params, &ds, &g).map_err(err)?.t.t;
        Ok(Demo {
            train_nodes: g.nodes,
            ds,
            params,
            cfg,
            graph,
            history,
            heat,
        })
    }

    /// Side length of the heatmap (number of training weeks).
    pub fn heatmap_size(&self) -> usize {
        self.train_nodes.len()
    }

    /// Row-major significance matrix among training weeks, entries in [-1, 1].
    pub fn heatmap(&self) -> Vec<f64> {
        self.heat.as_slice().to_vec()
    }

    /// Node index of heatmap row `i`.
    pub fn heatmap_node(&self, i: usize) -> Result<usize, String> {
        self.train_nodes
            .get(i)
            .copied()
            .ok_or_else(|| format!("row {i} out of range"))
    }

    pub fn node_count(&self) -> usize {
        self.ds.n_nodes()
    }

    /// `YYYY/WW` of node `v`.
    pub fn stamp(&self, v: usize) -> Result<String, String> {
        self.ds
            .node_stamps
            .get(v)
            .map(|s| s.to_string())
            .ok_or_else(|| format!("node {v} out of range"))
    }

    /// Query and neighbor curves as JSON.
    pub fn neighbors(&self, v: usize, k: usize, direction: &str) -> Result<String, String> {
        let direction: Direction = direction.parse().map_err(err)?;
        let stamp = *self.ds.node_stamps.get(v).ok_or_else(|| format!("node {v} out of range"))?;
        let report = top_k_neighbors(&self.params, &self.ds, stamp, k, direction, self.graph)
            .map_err(err)?;
        serde_json::to_string(&report).map_err(err)
    }

    /// One-step-ahead predictions on the original scale for every scored
    /// node, as JSON.
    pub fn forecasts(&self) -> Result<String, String> {
        let norm = self.ds.norm();
        let mut out = Vec::new();
        for split in [Split::Train, Split::Val, Split::Test] {
            if self.ds.indices(split).is_empty() {
                continue;
            }
            let g = eval_graph(&self.ds, split, self.graph).map_err(err)?;
            let act = predict(&self.params, &self.ds, &g).map_err(err)?;
            for &a in &g.scored {
                let v = g.nodes[a];
                out.push(ForecastPoint {
                    node: v,
                    stamp: self.ds.node_stamps[v],
                    split,
                    actual: norm.invert(self.ds.targets[(v, 0)]),
                    predicted: norm.invert(act.y_hat[(a, 0)]),
                });
            }
        }
        out.sort_by_key(|f| f.node);
        serde_json::to_string(&out).map_err(err)
    }

    /// Split sizes, learning curves and the config, as JSON.
    pub fn summary(&self) -> String {
        let c = self.ds.counts();
        let s = Summary {
            nodes: self.ds.n_nodes(),
            train: c.train,
            val: c.val,
            test: c.test,
            best_epoch: self.history.best_epoch,
            train_mse: self.history.epochs.iter().map(|e| e.train_mse).collect(),
            val_mse: self.history.epochs.iter().map(|e| e.val_mse).collect(),
            config: &self.cfg,
        };
        serde_json::to_string(&s).expect("summary serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn demo() -> Demo {
        Demo::new("seasonal", 1, 260, 6, 8, 4, 0.01, false).unwrap()
    }

    #[test]
    fn heatmap_is_square_symmetric_and_bounded() {
        let d = demo();
        let n = d.heatmap_size();
        let h = d.heatmap();
        assert_eq!(d.heatmap_node(0), Ok(0));
        assert!(d.heatmap_node(n).is_err());
        assert_eq!(h.len(), n * n);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(h[i * n + j], h[j * n + i]);
                assert!(h[i * n + j].abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn neighbors_come_back_as_curves() {
        let d = demo();
        let last = d.node_count() - 1;
        let v: Value = serde_json::from_str(&d.neighbors(last, 3, "positive").unwrap()).unwrap();
        let ns = v["neighbors"].as_array().unwrap();
        assert_eq!(ns.len(), 3);
        assert_eq!(ns[0]["curve"]["window"].as_array().unwrap().len(), 6);
        assert!(d.neighbors(last, 3, "sideways").is_err());
        assert!(d.neighbors(10_000, 3, "positive").is_err());
    }

    #[test]
    fn forecasts_cover_every_node_once() {
        let d = demo();
        let v: Value = serde_json::from_str(&d.forecasts().unwrap()).unwrap();
        let pts = v.as_array().unwrap();
        assert_eq!(pts.len(), d.node_count());
        assert!(pts.iter().all(|p| p["predicted"].as_f64().unwrap().is_finite()));
    }

    #[test]
    fn summary_reports_epochs() {
        let s: Value = serde_json::from_str(&demo().summary()).unwrap();
        assert_eq!(s["train_mse"].as_array().unwrap().len(), 4);
        assert_eq!(s["config"]["hidden"], 8);
    }

    #[test]
    fn bad_kind_is_rejected() {
        assert!(Demo::new("noise", 1, 260, 6, 8, 1, 0.0, false).is_err());
    }
}
