use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, train, GraphKind, TrainConfig};
use crate::baselines::{evaluate_baseline, Baseline, KnnConfig};
use crate::data::{prepare_dataset, IliSeries, Split, SplitPolicy};
use crate::error::{Error, Result};

/// Every forecaster the grid can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "dvgsn")]
    Dvgsn,
    #[serde(rename = "dvgsn-fixed")]
    DvgsnFixed,
    #[serde(rename = "ar")]
    Ar,
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "persistence")]
    Persistence,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Dvgsn,
        ModelKind::DvgsnFixed,
        ModelKind::Ar,
        ModelKind::Knn,
        ModelKind::Persistence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dvgsn => "dvgsn",
            ModelKind::DvgsnFixed => "dvgsn-fixed",
            ModelKind::Ar => "ar",
            ModelKind::Knn => "knn",
            ModelKind::Persistence => "persistence",
        }
    }

    /// Whether the model trains and therefore depends on λ and the seed.
    pub fn is_learned(self) -> bool {
        matches!(self, ModelKind::Dvgsn | ModelKind::DvgsnFixed)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown model {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ps: Vec<usize>,
    pub qs: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub models: Vec<ModelKind>,
    pub knn: KnnConfig,
    pub policy: SplitPolicy,
    /// Run cells on the rayon pool. Results keep grid order either way.
    pub parallel: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            ps: vec![9],
            qs: vec![1],
            lambdas: vec![0.01],
            models: vec![ModelKind::Dvgsn],
            knn: KnnConfig::default(),
            policy: SplitPolicy::Paper,
            parallel: false,
        }
    }
}

/// One row of the long-format results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub model: ModelKind,
    pub p: usize,
    pub q: usize,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    pub split: Split,
    pub mse_std: f64,
    pub mse_raw: f64,
    pub best_epoch: Option<usize>,
    pub wall_clock_s: f64,
    pub knn_k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFailure {
    pub run_id: String,
    pub model: ModelKind,
    pub p: usize,
    pub q: usize,
    pub lambda: Option<f64>,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GridResults {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<GridFailure>,
}

#[derive(Clone, Copy, Debug)]
struct Job {
    model: ModelKind,
    p: usize,
    q: usize,
    lambda: Option<f64>,
}

impl Job {
    fn run_id(&self, seed: u64) -> String {
        match self.lambda {
            Some(l) => format!("{}-p{}-q{}-l{}-s{}", self.model, self.p, self.q, l, seed),
            None => format!("{}-p{}-q{}", self.model, self.p, self.q),
        }
    }
}

/// Trains and scores every (q, p, model, λ) cell on the test split.
///
/// Non-learned models ignore λ and run once per (p, q). A failing cell is
/// recorded in `failures` and the grid carries on.
pub fn run_experiment_grid(series: &IliSeries, spec: &GridSpec, base: &TrainConfig) -> GridResults {
    let mut jobs = Vec::new();
    for &q in &spec.qs {
        for &p in &spec.ps {
            for &model in &spec.models {
                if model.is_learned() {
                    for &l in &spec.lambdas {
                        jobs.push(Job { model, p, q, lambda: Some(l) });
                    }
                } else {
                    jobs.push(Job { model, p, q, lambda: None });
                }
            }
        }
    }
    let run = |job: &Job| -> (Job, Result<ResultRow>) {
        (*job, run_cell(series, spec, base, job))
    };
    #[cfg(feature = "parallel")]
    let outcomes: Vec<(Job, Result<ResultRow>)> = if spec.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };
    // Without the `parallel` feature the flag is ignored.
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<(Job, Result<ResultRow>)> = jobs.iter().map(run).collect();

    let mut out = GridResults::default();
    for (job, res) in outcomes {
        match res {
            Ok(row) => out.rows.push(row),
            Err(e) => {
                log::warn!("grid cell {} failed: {e}", job.run_id(base.seed));
                out.failures.push(GridFailure {
                    run_id: job.run_id(base.seed),
                    model: job.model,
                    p: job.p,
                    q: job.q,
                    lambda: job.lambda,
                    error: e.to_string(),
                });
            }
        }
    }
    out
}

fn run_cell(series: &IliSeries, spec: &GridSpec, base: &TrainConfig, job: &Job) -> Result<ResultRow> {
    let started = Instant::now();
    let ds = prepare_dataset(series, job.p, job.q, spec.policy)?;
    let (report, best_epoch) = if job.model.is_learned() {
        let graph = if job.model == ModelKind::DvgsnFixed {
            GraphKind::Fixed
        } else {
            GraphKind::Dynamic
        };
        let cfg = TrainConfig {
            p: job.p,
            q: job.q,
            lambda: job.lambda.unwrap_or(base.lambda),
            graph,
            ..base.clone()
        };
        let (params, hist) = train(&ds, &cfg)?;
        (evaluate(&params, &ds, Split::Test, graph)?, Some(hist.best_epoch))
    } else {
        let b = match job.model {
            ModelKind::Ar => Baseline::Ar,
            ModelKind::Knn => Baseline::Knn(spec.knn),
            _ => Baseline::Persistence,
        };
        (evaluate_baseline(b, &ds, Split::Test)?, None)
    };
    Ok(ResultRow {
        run_id: job.run_id(base.seed),
        model: job.model,
        p: job.p,
        q: job.q,
        lambda: job.lambda,
        seed: job.model.is_learned().then_some(base.seed),
        split: Split::Test,
        mse_std: report.mse_std,
        mse_raw: report.mse_raw,
        best_epoch,
        wall_clock_s: started.elapsed().as_secs_f64(),
        knn_k: (job.model == ModelKind::Knn).then_some(spec.knn.k),
    })
}

impl GridResults {
    /// Long-format CSV, one row per run.
    pub fn to_csv(&self) -> Result<String> {
        to_csv(&self.rows)
    }

    pub fn failures_csv(&self) -> Result<String> {
        to_csv(&self.failures)
    }

    /// Wide table: one row per (q, p), one column per model and λ.
    pub fn pivot_table(&self) -> String {
        let mut cols: Vec<(ModelKind, Option<f64>)> = Vec::new();
        let mut cells: Vec<(usize, usize)> = Vec::new();
        for r in &self.rows {
            let key = (r.model, r.lambda);
            if !cols.iter().any(|c| c.0 == key.0 && c.1.map(f64::to_bits) == key.1.map(f64::to_bits)) {
                cols.push(key);
            }
            if !cells.contains(&(r.q, r.p)) {
                cells.push((r.q, r.p));
            }
        }
        let col_name = |(m, l): &(ModelKind, Option<f64>)| match l {
            Some(l) => format!("{m}[lambda={l}]"),
            None => m.to_string(),
        };
        let mut out = String::from("q,p");
        for c in &cols {
            out.push(',');
            out.push_str(&col_name(c));
        }
        out.push('\n');
        for &(q, p) in &cells {
            out.push_str(&format!("{q},{p}"));
            for c in &cols {
                let v = self.rows.iter().find(|r| {
                    r.q == q
                        && r.p == p
                        && r.model == c.0
                        && r.lambda.map(f64::to_bits) == c.1.map(f64::to_bits)
                });
                match v {
                    Some(r) => out.push_str(&format!(",{:.4}", r.mse_std)),
                    None => out.push_str(",-"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Mean standardized test MSE per λ for `model`, over all (p, q) cells,
    /// in first-seen λ order.
    pub fn lambda_means(&self, model: ModelKind) -> Vec<(f64, f64)> {
        let mut acc: Vec<(f64, f64, usize)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.model == model) {
            let Some(l) = r.lambda else { continue };
            match acc.iter_mut().find(|a| a.0.to_bits() == l.to_bits()) {
                Some(a) => {
                    a.1 += r.mse_std;
                    a.2 += 1;
                }
                None => acc.push((l, r.mse_std, 1)),
            }
        }
        acc.into_iter().map(|(l, s, n)| (l, s / n as f64)).collect()
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Parses a results CSV written by [`GridResults::to_csv`].
pub fn read_results_csv(s: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(s.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}
