use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dvgsn::baselines::{evaluate_baseline, Baseline, KnnConfig};
use dvgsn::data::synthetic::{seasonal_ili, sinusoid};
use dvgsn::data::{
    format_season_table, parse_ili_csv, prepare_dataset, season_summary, IliSeries, Split,
    WeekStamp, WindowedDataset, PEAK_PROMINENCE, SEASON_THRESHOLD,
};
use dvgsn::interpret::{
    export_plot_data, lambda_csv, neighbor_csv, seasonality_probe, top_k_neighbors,
    LAMBDA_COLUMNS, NEIGHBOR_COLUMNS,
};
use dvgsn::training::{
    evaluate, run_experiment_grid, train, Checkpoint, EvalReport, GraphKind, GridSpec, ModelKind,
};
use serde::Serialize;

use crate::manifest::Recorder;
use crate::settings::Settings;

/// Environment variable naming the directory that holds `ili.csv`.
pub const DATA_DIR_VAR: &str = "DVGSN_DATA_DIR";

pub fn resolve_input(input: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = input {
        return Ok(p.to_path_buf());
    }
    match std::env::var_os(DATA_DIR_VAR) {
        Some(dir) => Ok(PathBuf::from(dir).join("ili.csv")),
        None => bail!("no --input given and {DATA_DIR_VAR} is not set"),
    }
}

fn read_series(path: &Path) -> Result<IliSeries> {
    let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if raw.trim_start().starts_with('{') {
        let ds = WindowedDataset::from_json(&raw)?;
        return Ok(ds.series);
    }
    parse_ili_csv(&raw).with_context(|| format!("parsing {}", path.display()))
}

/// Windows the series at `path` with the given lag and horizon.
fn load_dataset(path: &Path, p: usize, q: usize, s: &Settings) -> Result<WindowedDataset> {
    let series = read_series(path)?;
    let ds = prepare_dataset(&series, p, q, s.splits)?;
    let c = ds.counts();
    log::info!(
        "{} nodes: {} train, {} val, {} test, {} unused",
        ds.n_nodes(),
        c.train,
        c.val,
        c.test,
        c.unused
    );
    Ok(ds)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn scored_splits(ds: &WindowedDataset) -> Vec<Split> {
    [Split::Train, Split::Val, Split::Test]
        .into_iter()
        .filter(|&s| !ds.indices(s).is_empty())
        .collect()
}

fn print_reports(label: &str, reports: &[EvalReport]) {
    for r in reports {
        println!(
            "{label:<12} {:<5} n={:<4} mse_std={:.6} mse_raw={:.3e}",
            r.split.name(),
            r.n_nodes,
            r.mse_std,
            r.mse_raw
        );
    }
}

pub fn ingest(input: &Path, rec: &mut Recorder, s: &Settings) -> Result<()> {
    rec.input(input);
    let series = read_series(input)?;
    let summary = season_summary(&series, SEASON_THRESHOLD, PEAK_PROMINENCE);
    print!("{}", format_season_table(&summary));
    let ds = load_dataset(input, s.p()?, s.q()?, s)?;
    rec.write("seasons.json", &json(&summary)?)?;
    rec.write("dataset.json", &ds.to_json()?)?;
    Ok(())
}

#[derive(Serialize)]
struct TrainReport<'a> {
    config: &'a dvgsn::training::TrainConfig,
    counts: dvgsn::data::SplitCounts,
    best_epoch: usize,
    reports: Vec<EvalReport>,
}

pub fn train_cmd(input: &Path, rec: &mut Recorder, s: &Settings) -> Result<()> {
    rec.input(input);
    let cfg = s.train_config(s.ablation)?;
    let ds = load_dataset(input, cfg.p, cfg.q, s)?;
    let (params, history) = train(&ds, &cfg)?;
    let reports = scored_splits(&ds)
        .into_iter()
        .map(|split| evaluate(&params, &ds, split, cfg.graph))
        .collect::<dvgsn::Result<Vec<_>>>()?;
    let label = match cfg.graph {
        GraphKind::Dynamic => ModelKind::Dvgsn,
        GraphKind::Fixed => ModelKind::DvgsnFixed,
    };
    print_reports(label.name(), &reports);
    println!(
        "best epoch {} of {} ({:.1}s)",
        history.best_epoch,
        history.epochs.len(),
        history.total_wall_clock_s()
    );
    let ck = Checkpoint::new(cfg.clone(), ds.norm, history.best_epoch, params);
    rec.write("checkpoint.json", &ck.to_json()?)?;
    rec.write("history.jsonl", &history.to_jsonl()?)?;
    rec.write(
        "report.json",
        &json(&TrainReport {
            config: &cfg,
            counts: ds.counts(),
            best_epoch: history.best_epoch,
            reports,
        })?,
    )?;
    rec.write_volatile("timing.json", &json(&history.wall_clock_s)?)?;
    Ok(())
}

/// Loads a checkpoint and the dataset it was trained on, checking that the
/// standardization matches.
fn load_checkpointed(
    input: &Path,
    checkpoint: &Path,
    rec: &mut Recorder,
    s: &Settings,
) -> Result<(Checkpoint, WindowedDataset)> {
    rec.input(input);
    rec.input(checkpoint);
    let ck = Checkpoint::load(checkpoint)?;
    let ds = load_dataset(input, ck.config.p, ck.config.q, s)?;
    if let (Some(a), Some(b)) = (ck.norm, ds.norm) {
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);
        if !close(a.mean, b.mean) || !close(a.std, b.std) {
            return Err(dvgsn::Error::Argument(format!(
                "checkpoint standardization (mean {}, std {}) does not match this input \
                 (mean {}, std {}); use the same data and --splits as for training",
                a.mean, a.std, b.mean, b.std
            ))
            .into());
        }
    }
    Ok((ck, ds))
}

pub fn evaluate_cmd(
    input: &Path,
    checkpoint: Option<&Path>,
    rec: &mut Recorder,
    s: &Settings,
) -> Result<()> {
    let model = match s.models.as_slice() {
        [] => ModelKind::Dvgsn,
        [m] => *m,
        _ => bail!("evaluate takes a single --model"),
    };
    let reports = if model.is_learned() {
        let Some(checkpoint) = checkpoint else {
            bail!("--checkpoint is required to evaluate {model}");
        };
        let (ck, ds) = load_checkpointed(input, checkpoint, rec, s)?;
        scored_splits(&ds)
            .into_iter()
            .map(|split| evaluate(&ck.params, &ds, split, ck.config.graph))
            .collect::<dvgsn::Result<Vec<_>>>()?
    } else {
        rec.input(input);
        let ds = load_dataset(input, s.p()?, s.q()?, s)?;
        let b = baseline(model, s)?;
        scored_splits(&ds)
            .into_iter()
            .map(|split| evaluate_baseline(b, &ds, split))
            .collect::<dvgsn::Result<Vec<_>>>()?
    };
    print_reports(model.name(), &reports);
    rec.write("report.json", &json(&reports)?)?;
    Ok(())
}

fn baseline(model: ModelKind, s: &Settings) -> Result<Baseline> {
    Ok(match model {
        ModelKind::Ar => Baseline::Ar,
        ModelKind::Knn => Baseline::Knn(KnnConfig {
            k: s.k.unwrap_or(KnnConfig::default().k),
        }),
        ModelKind::Persistence => Baseline::Persistence,
        m => bail!("{m} is not a baseline"),
    })
}

#[derive(Serialize)]
struct BaselineReport {
    model: ModelKind,
    reports: Vec<EvalReport>,
}

pub fn baselines_cmd(input: &Path, rec: &mut Recorder, s: &Settings) -> Result<()> {
    rec.input(input);
    let ds = load_dataset(input, s.p()?, s.q()?, s)?;
    let models: Vec<ModelKind> = if s.models.is_empty() {
        vec![ModelKind::Ar, ModelKind::Knn, ModelKind::Persistence]
    } else {
        s.models.clone()
    };
    let mut out = Vec::new();
    for m in models {
        let b = baseline(m, s)?;
        let reports = scored_splits(&ds)
            .into_iter()
            .map(|split| evaluate_baseline(b, &ds, split))
            .collect::<dvgsn::Result<Vec<_>>>()?;
        print_reports(m.name(), &reports);
        out.push(BaselineReport { model: m, reports });
    }
    rec.write("baselines.json", &json(&out)?)?;
    Ok(())
}

pub fn sweep(input: &Path, rec: &mut Recorder, s: &Settings) -> Result<()> {
    rec.input(input);
    let series = read_series(input)?;
    let mut models = if s.models.is_empty() {
        vec![ModelKind::Dvgsn]
    } else {
        s.models.clone()
    };
    if s.ablation == GraphKind::Fixed && !models.contains(&ModelKind::DvgsnFixed) {
        models.push(ModelKind::DvgsnFixed);
    }
    let spec = GridSpec {
        ps: s.ps.clone(),
        qs: s.qs.clone(),
        lambdas: s.lambdas.clone(),
        models,
        knn: KnnConfig {
            k: s.k.unwrap_or(KnnConfig::default().k),
        },
        policy: s.splits,
        parallel: s.parallel,
    };
    let base = Settings {
        ps: vec![s.ps[0]],
        qs: vec![s.qs[0]],
        lambdas: vec![s.lambdas[0]],
        ..s.clone()
    }
    .train_config(GraphKind::Dynamic)?;
    let results = run_experiment_grid(&series, &spec, &base);
    print!("{}", results.pivot_table());
    rec.write_volatile("results.csv", &results.to_csv()?)?;
    rec.write("failures.csv", &results.failures_csv()?)?;
    rec.write("pivot.csv", &results.pivot_table())?;
    let lambda_model = if spec.models.contains(&ModelKind::Dvgsn) {
        ModelKind::Dvgsn
    } else {
        ModelKind::DvgsnFixed
    };
    export_plot_data(
        &rec.path("lambda.csv"),
        &lambda_csv(&results.lambda_means(lambda_model))?,
        &LAMBDA_COLUMNS,
    )?;
    rec.written("lambda.csv");
    rec.written("lambda.csv.schema.json");
    if results.rows.is_empty() && !results.failures.is_empty() {
        return Err(crate::OutputError::wrap(anyhow::anyhow!(
            "all {} grid cells failed; see failures.csv",
            results.failures.len()
        )));
    }
    Ok(())
}

pub fn explain(
    input: &Path,
    checkpoint: &Path,
    stamp: &str,
    probe: bool,
    rec: &mut Recorder,
    s: &Settings,
) -> Result<()> {
    let stamp: WeekStamp = stamp.parse()?;
    let (ck, ds) = load_checkpointed(input, checkpoint, rec, s)?;
    let k = s.k.unwrap_or(2);
    let report = top_k_neighbors(&ck.params, &ds, stamp, k, s.direction, ck.config.graph)?;
    println!(
        "query {} (rate {:.5}), {} neighbors:",
        report.query.stamp,
        report.query.window.last().copied().unwrap_or(f64::NAN),
        s.direction.name()
    );
    for n in &report.neighbors {
        println!("  {}  t={:+.4}", n.curve.stamp, n.t);
    }
    if report.truncated {
        log::warn!("only {} candidate neighbors exist", report.neighbors.len());
    }
    if report.degenerate {
        log::warn!("query embedding is constant; all links are zero");
    }
    export_plot_data(&rec.path("neighbors.csv"), &neighbor_csv(&report)?, &NEIGHBOR_COLUMNS)?;
    rec.written("neighbors.csv");
    rec.written("neighbors.csv.schema.json");
    rec.write("neighbors.json", &json(&report)?)?;
    if probe {
        let queries: Vec<WeekStamp> =
            ds.indices(Split::Test).into_iter().map(|v| ds.node_stamps[v]).collect();
        let sr = seasonality_probe(&ck.params, &ds, &queries, ck.config.graph)?;
        println!(
            "seasonality: {:.1}% of top neighbors at multiples of 52 weeks",
            100.0 * sr.share_multiple_of_52
        );
        rec.write("seasonality.json", &json(&sr)?)?;
    }
    Ok(())
}

pub fn synth(kind: &str, len: usize, seed: u64, pandemic: bool, rec: &mut Recorder) -> Result<()> {
    let start = WeekStamp::new(2002, 40)?;
    let series = match kind {
        "seasonal" => seasonal_ili(seed, start, len, pandemic),
        "sinusoid" => sinusoid(start, len, 52.0, 0.4),
        other => bail!("unknown synthetic kind {other:?}; expected seasonal or sinusoid"),
    };
    rec.write("ili.csv", &series.to_csv())?;
    println!("wrote {} weeks to {}", series.len(), rec.path("ili.csv").display());
    Ok(())
}
