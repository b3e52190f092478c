//! "Similar situations": for a given week, the training weeks the model
//! links to most strongly, plus plot-ready exports.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Split, WeekStamp, WindowedDataset};
use crate::error::{Error, Result};
use crate::model::{ModelParams, NeighborhoodMask};
use crate::numerics::NORM_EPS;
use crate::training::{eval_graph, predict, support_mask, EvalGraph, GraphKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Largest `t` first.
    #[default]
    MostPositive,
    /// Smallest (most negative) `t` first.
    MostNegative,
    /// `|t|` closest to zero first.
    LeastSimilar,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::MostPositive => "most-positive",
            Direction::MostNegative => "most-negative",
            Direction::LeastSimilar => "least-similar",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "most-positive" => Ok(Direction::MostPositive),
            "negative" | "most-negative" => Ok(Direction::MostNegative),
            "dissimilar" | "least-similar" => Ok(Direction::LeastSimilar),
            other => Err(Error::Argument(format!(
                "unknown direction {other:?}; use positive, negative or dissimilar"
            ))),
        }
    }
}

/// Orders `candidates` by `row[u]` in `direction` and keeps the first `k`.
/// Ties keep candidate order. Returns `(index, t)` pairs and whether fewer
/// than `k` were available.
pub fn rank_neighbors(
    row: &[f64],
    candidates: &[usize],
    k: usize,
    direction: Direction,
) -> (Vec<(usize, f64)>, bool) {
    let mut ranked: Vec<(usize, f64)> = candidates.iter().map(|&u| (u, row[u])).collect();
    match direction {
        Direction::MostPositive => ranked.sort_by(|a, b| b.1.total_cmp(&a.1)),
        Direction::MostNegative => ranked.sort_by(|a, b| a.1.total_cmp(&b.1)),
        Direction::LeastSimilar => ranked.sort_by(|a, b| a.1.abs().total_cmp(&b.1.abs())),
    }
    let truncated = ranked.len() < k;
    ranked.truncate(k);
    (ranked, truncated)
}

/// A week's raw window and targets, oldest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub stamp: WeekStamp,
    pub node: usize,
    /// `p` observed values ending at `stamp`, oldest first.
    pub window: Vec<f64>,
    /// The `q` following values.
    pub target: Vec<f64>,
    /// Calendar weeks of `window` followed by `target`.
    pub weeks: Vec<WeekStamp>,
}

impl Curve {
    fn of(ds: &WindowedDataset, v: usize) -> Self {
        let o = ds.series.rates();
        let end = ds.series_index(v);
        Self {
            stamp: ds.node_stamps[v],
            node: v,
            window: o[end + 1 - ds.p..=end].to_vec(),
            target: o[end + 1..=end + ds.q].to_vec(),
            weeks: ds.series.points[end + 1 - ds.p..=end + ds.q]
                .iter()
                .map(|pt| pt.stamp)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub t: f64,
    pub curve: Curve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborReport {
    pub query: Curve,
    pub direction: Direction,
    pub neighbors: Vec<Neighbor>,
    /// Fewer than the requested number of neighbors exist.
    pub truncated: bool,
    /// The query's projected embedding was constant, so every `t` in its row is zero.
    pub degenerate: bool,
}

/// The graph a query node is evaluated in: the training graph for a
/// training node, otherwise training nodes plus the query itself.
pub fn query_graph(ds: &WindowedDataset, v: usize, graph: GraphKind) -> Result<(EvalGraph, usize)> {
    if v >= ds.n_nodes() {
        return Err(Error::Argument(format!("node {v} out of range")));
    }
    match ds.split[v] {
        Split::Train => {
            let g = eval_graph(ds, Split::Train, graph)?;
            let a = g.nodes.iter().position(|&u| u == v).expect("train node in train graph");
            Ok((g, a))
        }
        Split::Val | Split::Test | Split::Unused => {
            let mut nodes = ds.indices(Split::Train);
            if nodes.is_empty() {
                return Err(Error::Argument("dataset has no training nodes".into()));
            }
            let n_train = nodes.len();
            nodes.push(v);
            let support = support_mask(ds, graph);
            let mask = NeighborhoodMask::from_fn(nodes.len(), |a, b| {
                b < n_train && support.allows(nodes[a], nodes[b])
            });
            Ok((
                EvalGraph {
                    nodes,
                    mask,
                    scored: vec![n_train],
                },
                n_train,
            ))
        }
    }
}

/// The `k` training weeks linked most strongly (in `direction`) to the week
/// `stamp`, excluding the week itself.
pub fn top_k_neighbors(
    params: &ModelParams,
    ds: &WindowedDataset,
    stamp: WeekStamp,
    k: usize,
    direction: Direction,
    graph: GraphKind,
) -> Result<NeighborReport> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    let v = ds.node_of(stamp)?;
    let (g, a) = query_graph(ds, v, graph)?;
    let act = predict(params, ds, &g)?;
    let candidates: Vec<usize> = (0..g.nodes.len())
        .filter(|&b| b != a && g.mask.allows(a, b) && ds.split[g.nodes[b]] == Split::Train)
        .collect();
    let (ranked, truncated) = rank_neighbors(act.t.row(a), &candidates, k, direction);
    Ok(NeighborReport {
        query: Curve::of(ds, v),
        direction,
        neighbors: ranked
            .into_iter()
            .map(|(b, t)| Neighbor {
                t,
                curve: Curve::of(ds, g.nodes[b]),
            })
            .collect(),
        truncated,
        degenerate: act.proj.norms[a] <= NORM_EPS,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub query: WeekStamp,
    /// `(neighbor stamp, weeks between query and neighbor, t)` for the top two.
    pub neighbors: Vec<(WeekStamp, usize, f64)>,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeasonalityReport {
    pub entries: Vec<ProbeEntry>,
    /// Share of reported offsets that are whole multiples of 52 weeks.
    pub share_multiple_of_52: f64,
    /// More than half of the offsets are multiples of 52.
    pub clustered_at_52: bool,
    /// Every query had a degenerate (all-zero) similarity row.
    pub degenerate: bool,
}

/// Week offsets between each query and its two most similar training weeks.
pub fn seasonality_probe(
    params: &ModelParams,
    ds: &WindowedDataset,
    queries: &[WeekStamp],
    graph: GraphKind,
) -> Result<SeasonalityReport> {
    let mut entries = Vec::with_capacity(queries.len());
    let (mut hits, mut total) = (0usize, 0usize);
    for &stamp in queries {
        let rep = top_k_neighbors(params, ds, stamp, 2, Direction::MostPositive, graph)?;
        let neighbors: Vec<(WeekStamp, usize, f64)> = if rep.degenerate {
            Vec::new()
        } else {
            rep.neighbors
                .iter()
                .map(|n| (n.curve.stamp, rep.query.node.abs_diff(n.curve.node), n.t))
                .collect()
        };
        for &(_, off, _) in &neighbors {
            total += 1;
            hits += usize::from(off % 52 == 0);
        }
        entries.push(ProbeEntry {
            query: stamp,
            neighbors,
            degenerate: rep.degenerate,
        });
    }
    let share = if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    };
    Ok(SeasonalityReport {
        degenerate: !entries.is_empty() && entries.iter().all(|e| e.degenerate),
        entries,
        share_multiple_of_52: share,
        clustered_at_52: share > 0.5,
    })
}

/// One plotted point of a neighbor report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// 0 for the query, then neighbor rank from 1.
    pub rank: usize,
    /// Stamp of the week whose curve this point belongs to.
    pub anchor: WeekStamp,
    /// Significance to the query (1 for the query itself).
    pub t: f64,
    /// Position relative to the anchor week: `1-p ..= q`.
    pub offset: i64,
    pub week: WeekStamp,
    pub rate: f64,
}

pub const NEIGHBOR_COLUMNS: [(&str, &str); 6] = [
    ("rank", "0 = query week, k = k-th neighbor"),
    ("anchor", "week (YYYY/WW) whose curve the point belongs to"),
    ("t", "learned edge significance to the query, in [-1, 1]"),
    ("offset", "weeks relative to the anchor; <= 0 is the input window, > 0 the forecast target"),
    ("week", "calendar week of the point (YYYY/WW)"),
    ("rate", "ILI rate on the original scale"),
];

pub const LAMBDA_COLUMNS: [(&str, &str); 2] = [
    ("lambda", "penalty weight on the squared Frobenius norm of T"),
    ("mean_mse", "standardized test MSE averaged over the (p, q) cells"),
];

impl NeighborReport {
    /// `(1 + neighbors) · (p + q)` points; none if there are no neighbors.
    pub fn points(&self) -> Vec<CurvePoint> {
        if self.neighbors.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let curves = std::iter::once((1.0, &self.query))
            .chain(self.neighbors.iter().map(|n| (n.t, &n.curve)));
        for (rank, (t, c)) in curves.enumerate() {
            let p = c.window.len() as i64;
            let rates = c.window.iter().chain(&c.target);
            for (i, (&rate, &week)) in rates.zip(&c.weeks).enumerate() {
                out.push(CurvePoint {
                    rank,
                    anchor: c.stamp,
                    t,
                    offset: i as i64 - (p - 1),
                    week,
                    rate,
                });
            }
        }
        out
    }
}

/// CSV text with a header row even when `rows` is empty.
fn csv_with_header<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn neighbor_csv(report: &NeighborReport) -> Result<String> {
    let header: Vec<&str> = NEIGHBOR_COLUMNS.iter().map(|c| c.0).collect();
    csv_with_header(&header, &report.points())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub mean_mse: f64,
}

pub fn lambda_csv(points: &[(f64, f64)]) -> Result<String> {
    let rows: Vec<LambdaPoint> = points
        .iter()
        .map(|&(lambda, mean_mse)| LambdaPoint { lambda, mean_mse })
        .collect();
    let header: Vec<&str> = LAMBDA_COLUMNS.iter().map(|c| c.0).collect();
    csv_with_header(&header, &rows)
}

pub fn read_neighbor_csv(s: &str) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_reader(s.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}

pub fn read_lambda_csv(s: &str) -> Result<Vec<LambdaPoint>> {
    let mut r = csv::Reader::from_reader(s.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}

#[derive(Serialize)]
struct Schema<'a> {
    file: String,
    columns: Vec<ColumnDoc<'a>>,
}

#[derive(Serialize)]
struct ColumnDoc<'a> {
    name: &'a str,
    description: &'a str,
}

/// Writes `csv` to `path` and a `<path>.schema.json` describing `columns`.
pub fn export_plot_data(path: &Path, csv: &str, columns: &[(&str, &str)]) -> Result<()> {
    std::fs::write(path, csv).map_err(|e| Error::io(path, e))?;
    let schema = Schema {
        file: path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        columns: columns
            .iter()
            .map(|&(name, description)| ColumnDoc { name, description })
            .collect(),
    };
    let mut schema_path = path.as_os_str().to_owned();
    schema_path.push(".schema.json");
    let schema_path = std::path::PathBuf::from(schema_path);
    std::fs::write(&schema_path, serde_json::to_string_pretty(&schema)?)
        .map_err(|e| Error::io(&schema_path, e))
}
