//! Resolved run settings: built-in defaults, then an optional TOML file,
//! then command-line flags.

use anyhow::{bail, Context, Result};
use clap::Args;
use dvgsn::data::SplitPolicy;
use dvgsn::interpret::Direction;
use dvgsn::model::{LossMode, HIDDEN};
use dvgsn::training::{GraphKind, ModelKind, TrainConfig};
use serde::{Deserialize, Serialize};

/// Hyperparameter flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// TOML file with defaults for any of the flags below
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Time lag(s); comma-separated for sweep
    #[arg(long, global = true, value_delimiter = ',')]
    pub p: Vec<usize>,
    /// Predictive window(s); comma-separated for sweep
    #[arg(long, global = true, value_delimiter = ',')]
    pub q: Vec<usize>,
    /// Penalty weight(s) on ‖T‖²_F; comma-separated for sweep
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[arg(long, global = true)]
    pub hidden: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub batch: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// averaged | summed
    #[arg(long = "loss-mode", global = true)]
    pub loss_mode: Option<String>,
    /// none | fixed
    #[arg(long, global = true)]
    pub ablation: Option<String>,
    /// "paper" or "TRAIN,VAL" fractions, e.g. "0.6,0.2"
    #[arg(long, global = true)]
    pub splits: Option<String>,
    /// Neighbor count (k-NN baseline, explain)
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// positive | negative | dissimilar
    #[arg(long, global = true)]
    pub direction: Option<String>,
    /// Model(s): dvgsn, dvgsn-fixed, ar, knn, persistence
    #[arg(long, global = true, value_delimiter = ',')]
    pub model: Vec<String>,
    /// Run sweep cells on all cores
    #[arg(long, global = true)]
    pub parallel: bool,
}

#[derive(Deserialize, Debug, Default)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
    #[default]
    None,
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
            OneOrMany::None => Vec::new(),
        }
    }
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    p: OneOrMany<usize>,
    #[serde(default)]
    q: OneOrMany<usize>,
    #[serde(default)]
    lambda: OneOrMany<f64>,
    hidden: Option<usize>,
    lr: Option<f64>,
    epochs: Option<usize>,
    batch: Option<usize>,
    seed: Option<u64>,
    loss_mode: Option<String>,
    ablation: Option<String>,
    splits: Option<String>,
    k: Option<usize>,
    direction: Option<String>,
    #[serde(default)]
    model: OneOrMany<String>,
    parallel: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub ps: Vec<usize>,
    pub qs: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub loss_mode: LossMode,
    pub ablation: GraphKind,
    pub splits: SplitPolicy,
    pub k: Option<usize>,
    pub direction: Direction,
    pub models: Vec<ModelKind>,
    pub parallel: bool,
}

impl Default for Settings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            ps: vec![t.p],
            qs: vec![t.q],
            lambdas: vec![t.lambda],
            hidden: HIDDEN,
            lr: t.lr,
            epochs: t.epochs,
            batch: t.batch_size,
            seed: t.seed,
            loss_mode: t.loss_mode,
            ablation: GraphKind::Dynamic,
            splits: SplitPolicy::Paper,
            k: None,
            direction: Direction::MostPositive,
            models: Vec::new(),
            parallel: false,
        }
    }
}

fn parse_splits(s: &str) -> Result<SplitPolicy> {
    if s == "paper" {
        return Ok(SplitPolicy::Paper);
    }
    let parts: Vec<&str> = s.split(',').collect();
    if let [train, val] = parts[..] {
        let train: f64 = train.trim().parse().context("train fraction")?;
        let val: f64 = val.trim().parse().context("val fraction")?;
        return Ok(SplitPolicy::Fraction { train, val });
    }
    bail!("--splits must be \"paper\" or \"TRAIN,VAL\", got {s:?}")
}

fn parse_models(names: &[String]) -> Result<Vec<ModelKind>> {
    Ok(names
        .iter()
        .map(|n| n.parse::<ModelKind>())
        .collect::<Result<Vec<_>, _>>()?)
}

impl Settings {
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let mut s = Settings::default();
        if let Some(path) = &flags.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let file: FileConfig =
                toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
            s.apply_file(file)?;
        }
        s.apply_flags(flags)?;
        Ok(s)
    }

    fn apply_file(&mut self, f: FileConfig) -> Result<()> {
        let ps = f.p.into_vec();
        if !ps.is_empty() {
            self.ps = ps;
        }
        let qs = f.q.into_vec();
        if !qs.is_empty() {
            self.qs = qs;
        }
        let ls = f.lambda.into_vec();
        if !ls.is_empty() {
            self.lambdas = ls;
        }
        let models = f.model.into_vec();
        if !models.is_empty() {
            self.models = parse_models(&models)?;
        }
        self.hidden = f.hidden.unwrap_or(self.hidden);
        self.lr = f.lr.unwrap_or(self.lr);
        self.epochs = f.epochs.unwrap_or(self.epochs);
        self.batch = f.batch.unwrap_or(self.batch);
        self.seed = f.seed.unwrap_or(self.seed);
        self.k = f.k.or(self.k);
        self.parallel = f.parallel.unwrap_or(self.parallel);
        if let Some(m) = f.loss_mode {
            self.loss_mode = m.parse()?;
        }
        if let Some(a) = f.ablation {
            self.ablation = a.parse()?;
        }
        if let Some(sp) = f.splits {
            self.splits = parse_splits(&sp)?;
        }
        if let Some(d) = f.direction {
            self.direction = d.parse()?;
        }
        Ok(())
    }

    fn apply_flags(&mut self, f: &Flags) -> Result<()> {
        if !f.p.is_empty() {
            self.ps = f.p.clone();
        }
        if !f.q.is_empty() {
            self.qs = f.q.clone();
        }
        if !f.lambda.is_empty() {
            self.lambdas = f.lambda.clone();
        }
        if !f.model.is_empty() {
            self.models = parse_models(&f.model)?;
        }
        self.hidden = f.hidden.unwrap_or(self.hidden);
        self.lr = f.lr.unwrap_or(self.lr);
        self.epochs = f.epochs.unwrap_or(self.epochs);
        self.batch = f.batch.unwrap_or(self.batch);
        self.seed = f.seed.unwrap_or(self.seed);
        self.k = f.k.or(self.k);
        self.parallel |= f.parallel;
        if let Some(m) = &f.loss_mode {
            self.loss_mode = m.parse()?;
        }
        if let Some(a) = &f.ablation {
            self.ablation = a.parse()?;
        }
        if let Some(sp) = &f.splits {
            self.splits = parse_splits(sp)?;
        }
        if let Some(d) = &f.direction {
            self.direction = d.parse()?;
        }
        Ok(())
    }

    fn single<T: Copy + std::fmt::Debug>(name: &str, xs: &[T]) -> Result<T> {
        match xs {
            [x] => Ok(*x),
            _ => bail!("--{name} takes a single value for this command, got {xs:?}"),
        }
    }

    pub fn p(&self) -> Result<usize> {
        Self::single("p", &self.ps)
    }

    pub fn q(&self) -> Result<usize> {
        Self::single("q", &self.qs)
    }

    pub fn lambda(&self) -> Result<f64> {
        Self::single("lambda", &self.lambdas)
    }

    /// Training config for a single (p, q, λ) run.
    pub fn train_config(&self, graph: GraphKind) -> Result<TrainConfig> {
        Ok(TrainConfig {
            p: self.p()?,
            q: self.q()?,
            hidden: self.hidden,
            lr: self.lr,
            epochs: self.epochs,
            lambda: self.lambda()?,
            batch_size: self.batch,
            seed: self.seed,
            loss_mode: self.loss_mode,
            graph,
        })
    }
}
