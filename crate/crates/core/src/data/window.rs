use serde::{Deserialize, Serialize};

use super::{IliSeries, WeekStamp};
use crate::error::{Error, Result};
use crate::numerics::{nested, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Unused,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unused => "unused",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Argument(format!(
                "unknown split {other:?}, expected train, val or test"
            ))),
        }
    }
}

/// z-score statistics; `value_std = (value_raw - mean) / std`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norm {
    pub mean: f64,
    pub std: f64,
}

impl Norm {
    pub const IDENTITY: Norm = Norm {
        mean: 0.0,
        std: 1.0,
    };

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    #[inline]
    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Supervised view of a series: one node per "current" week `v`.
///
/// Row `v` of `chi` is `[o_v, o_{v-1}, …, o_{v-p+1}]` (most recent first) and
/// row `v` of `targets` is `[o_{v+1}, …, o_{v+q}]`. Node `v` sits at series
/// index `v + p - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub p: usize,
    pub q: usize,
    #[serde(with = "nested")]
    pub chi: Matrix,
    #[serde(with = "nested")]
    pub targets: Matrix,
    pub node_stamps: Vec<WeekStamp>,
    pub split: Vec<Split>,
    pub norm: Option<Norm>,
    /// Raw (unstandardized) source series.
    pub series: IliSeries,
}

pub fn build_windows(series: &IliSeries, p: usize, q: usize) -> Result<WindowedDataset> {
    if p == 0 || q == 0 {
        return Err(Error::Argument(format!(
            "time lag and window must be positive (p = {p}, q = {q})"
        )));
    }
    let len = series.len();
    if len < p + q {
        return Err(Error::TooShort {
            required: p + q,
            actual: len,
        });
    }
    let o = series.rates();
    let n = len - p - q + 1;
    let chi = Matrix::from_fn(n, p, |v, j| o[v + p - 1 - j]);
    let targets = Matrix::from_fn(n, q, |v, h| o[v + p + h]);
    let node_stamps = (0..n).map(|v| series.points[v + p - 1].stamp).collect();
    Ok(WindowedDataset {
        p,
        q,
        chi,
        targets,
        node_stamps,
        split: vec![Split::Train; n],
        norm: None,
        series: series.clone(),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub unused: usize,
}

impl WindowedDataset {
    pub fn n_nodes(&self) -> usize {
        self.node_stamps.len()
    }

    pub fn norm(&self) -> Norm {
        self.norm.unwrap_or(Norm::IDENTITY)
    }

    /// Node indices carrying `split`, in chronological order.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.n_nodes())
            .filter(|&v| self.split[v] == split)
            .collect()
    }

    pub fn counts(&self) -> SplitCounts {
        let mut c = SplitCounts::default();
        for s in &self.split {
            match s {
                Split::Train => c.train += 1,
                Split::Val => c.val += 1,
                Split::Test => c.test += 1,
                Split::Unused => c.unused += 1,
            }
        }
        c
    }

    pub fn node_of(&self, stamp: WeekStamp) -> Result<usize> {
        self.node_stamps
            .binary_search(&stamp)
            .map_err(|_| Error::Lookup {
                stamp: stamp.to_string(),
                first: self.node_stamps.first().map(ToString::to_string).unwrap_or_default(),
                last: self.node_stamps.last().map(ToString::to_string).unwrap_or_default(),
            })
    }

    /// Series index of node `v`'s current week.
    #[inline]
    pub fn series_index(&self, v: usize) -> usize {
        v + self.p - 1
    }

    /// Labels nodes chronologically with the fixed date ranges used for the
    /// US national series: train 2003/41–2012/02, val 2012/03–2014/42 and
    /// test from 2014/43 to `q` weeks before 2017/30.
    pub fn assign_paper_splits(mut self) -> (Self, SplitCounts) {
        let train = (stamp(2003, 41), stamp(2012, 2));
        let val = (stamp(2012, 3), stamp(2014, 42));
        let mut test_end = stamp(2017, 30);
        for _ in 0..self.q {
            test_end = pred(test_end);
        }
        let test = (stamp(2014, 43), test_end);
        let within = |s: WeekStamp, (a, b): (WeekStamp, WeekStamp)| a <= s && s <= b;
        for (v, &s) in self.node_stamps.iter().enumerate() {
            self.split[v] = if within(s, train) {
                Split::Train
            } else if within(s, val) {
                Split::Val
            } else if within(s, test) {
                Split::Test
            } else {
                Split::Unused
            };
        }
        let counts = self.counts();
        if counts.unused > 0 {
            log::warn!("{} nodes fall outside the split ranges and are unused", counts.unused);
        }
        (self, counts)
    }

    /// Chronological split by fractions of the node count; the remainder is test.
    pub fn assign_fraction_splits(mut self, train_frac: f64, val_frac: f64) -> Result<Self> {
        if !(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac < 1.0) {
            return Err(Error::Argument(format!(
                "bad split fractions train = {train_frac}, val = {val_frac}"
            )));
        }
        let n = self.n_nodes();
        let n_train = ((n as f64) * train_frac).round() as usize;
        let n_val = ((n as f64) * val_frac).round() as usize;
        for v in 0..n {
            self.split[v] = if v < n_train {
                Split::Train
            } else if v < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
        Ok(self)
    }

    /// z-scores `chi` and `targets` with the population mean/std of the raw
    /// series values covered by training windows.
    pub fn standardize(mut self) -> Result<Self> {
        if self.norm.is_some() {
            return Err(Error::Argument("dataset is already standardized".into()));
        }
        let train = self.indices(Split::Train);
        let (first, last) = match (train.first(), train.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => return Err(Error::Argument("standardize needs a non-empty train split".into())),
        };
        let o = self.series.rates();
        let covered = &o[first..=self.series_index(last)];
        let n = covered.len() as f64;
        let mean = covered.iter().sum::<f64>() / n;
        let var = covered.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std <= f64::EPSILON * mean.abs().max(1.0) {
            return Err(Error::Degenerate(format!(
                "training values have zero standard deviation (constant {mean})"
            )));
        }
        let norm = Norm { mean, std };
        self.chi = self.chi.map(|x| norm.apply(x));
        self.targets = self.targets.map(|x| norm.apply(x));
        self.norm = Some(norm);
        Ok(self)
    }

    /// Inverse of [`WindowedDataset::standardize`] on `chi` and `targets`.
    pub fn destandardize(mut self) -> Self {
        if let Some(norm) = self.norm.take() {
            self.chi = self.chi.map(|z| norm.invert(z));
            self.targets = self.targets.map(|z| norm.invert(z));
        }
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// How nodes are assigned to train/val/test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SplitPolicy {
    /// Fixed date ranges of the US national series.
    #[default]
    Paper,
    /// Chronological fractions; the remainder is test.
    Fraction { train: f64, val: f64 },
}

/// Windows, labels and standardizes `series` in one go.
pub fn prepare_dataset(
    series: &IliSeries,
    p: usize,
    q: usize,
    policy: SplitPolicy,
) -> Result<WindowedDataset> {
    let ds = build_windows(series, p, q)?;
    let ds = match policy {
        SplitPolicy::Paper => ds.assign_paper_splits().0,
        SplitPolicy::Fraction { train, val } => ds.assign_fraction_splits(train, val)?,
    };
    ds.standardize()
}

fn stamp(year: i32, week: u8) -> WeekStamp {
    WeekStamp { year, week }
}

fn pred(s: WeekStamp) -> WeekStamp {
    if s.week == 1 {
        stamp(s.year - 1, 52)
    } else {
        stamp(s.year, s.week - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::IliPoint;
    use proptest::prelude::*;

    fn series_from(values: &[f64], start: WeekStamp) -> IliSeries {
        let mut s = start;
        let pts = values
            .iter()
            .map(|&rate| {
                let pt = IliPoint { stamp: s, rate };
                s = s.succ();
                pt
            })
            .collect();
        IliSeries::new(pts, "test").unwrap()
    }

    /// Independent window enumeration: walk the series and slice.
    fn enumerate_windows(o: &[f64], p: usize, q: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut out = Vec::new();
        for cur in (p - 1)..o.len() {
            if cur + q >= o.len() {
                break;
            }
            let mut past: Vec<f64> = o[cur + 1 - p..=cur].to_vec();
            past.reverse();
            out.push((past, o[cur + 1..=cur + q].to_vec()));
        }
        out
    }

    #[test]
    fn node_count() {
        let s = series_from(&vec![0.01; 730], stamp(2003, 30));
        assert_eq!(build_windows(&s, 9, 1).unwrap().n_nodes(), 721);
    }

    #[test]
    fn ten_point_layout() {
        let o: Vec<f64> = (1..=10).map(|i| i as f64 / 100.0).collect();
        let ds = build_windows(&series_from(&o, stamp(2010, 1)), 3, 3).unwrap();
        assert_eq!(ds.n_nodes(), 5);
        assert_eq!(ds.chi.row(0), &[o[2], o[1], o[0]]);
        assert_eq!(ds.targets.row(0), &[o[3], o[4], o[5]]);
        assert_eq!(ds.node_stamps[0], stamp(2010, 3));
    }

    #[test]
    fn ramp_matches_enumeration() {
        let o: Vec<f64> = (1..=8).map(|t| t as f64 / 10.0).collect();
        let ds = build_windows(&series_from(&o, stamp(2010, 1)), 2, 1).unwrap();
        assert_eq!(ds.chi.row(0), &[0.2, 0.1]);
        assert_eq!(ds.targets.row(0), &[0.3]);
        let oracle = enumerate_windows(&o, 2, 1);
        assert_eq!(oracle.len(), ds.n_nodes());
        for (v, (past, fut)) in oracle.iter().enumerate() {
            assert_eq!(ds.chi.row(v), past.as_slice());
            assert_eq!(ds.targets.row(v), fut.as_slice());
        }
    }

    #[test]
    fn too_short_reports_minimum() {
        let s = series_from(&[0.01; 5], stamp(2010, 1));
        match build_windows(&s, 9, 1) {
            Err(Error::TooShort { required, actual }) => assert_eq!((required, actual), (10, 5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn paper_split_labels() {
        let s = series_from(&vec![0.02; 731], stamp(2003, 30));
        let (ds, counts) = build_windows(&s, 9, 1).unwrap().assign_paper_splits();
        let label = |y, w| ds.split[ds.node_of(stamp(y, w)).unwrap()];
        assert_eq!(label(2010, 1), Split::Train);
        assert_eq!(label(2012, 3), Split::Val);
        assert_eq!(label(2014, 43), Split::Test);
        assert_eq!(label(2003, 40), Split::Unused);
        assert!(counts.unused > 0);
        let test = ds.indices(Split::Test);
        assert_eq!(ds.node_stamps[*test.last().unwrap()], stamp(2017, 29));
    }

    #[test]
    fn paper_test_end_depends_on_q() {
        let s = series_from(&vec![0.02; 731], stamp(2003, 30));
        for (q, end) in [(3, stamp(2017, 27)), (6, stamp(2017, 24))] {
            let (ds, _) = build_windows(&s, 9, q).unwrap().assign_paper_splits();
            let test = ds.indices(Split::Test);
            assert_eq!(ds.node_stamps[*test.last().unwrap()], end);
        }
    }

    #[test]
    fn constant_train_is_degenerate() {
        let s = series_from(&[0.03; 30], stamp(2010, 1));
        let ds = build_windows(&s, 3, 1).unwrap();
        assert!(matches!(ds.standardize(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn two_value_toy_standardizes_to_unit() {
        // 21 points so the windows cover exactly 20, balanced between the two values.
        let o: Vec<f64> = (0..21).map(|i| if i % 2 == 0 { 0.0 } else { 0.2 }).collect();
        let ds = build_windows(&series_from(&o, stamp(2010, 1)), 2, 1)
            .unwrap()
            .standardize()
            .unwrap();
        let norm = ds.norm.unwrap();
        assert!((norm.mean - 0.1).abs() < 1e-12, "{norm:?}");
        assert!((norm.std - 0.1).abs() < 1e-12, "{norm:?}");
        assert!(ds.chi.as_slice().iter().all(|z| (z.abs() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn identity_norm_is_noop() {
        let n = Norm::IDENTITY;
        assert_eq!(n.apply(0.3), 0.3);
        assert_eq!(n.invert(0.3), 0.3);
    }

    #[test]
    fn json_round_trip_uses_nested_rows() {
        let o: Vec<f64> = (0..12).map(|i| 0.01 * (i as f64 + 1.0)).collect();
        let ds = build_windows(&series_from(&o, stamp(2010, 1)), 3, 2).unwrap();
        let json = ds.to_json().unwrap();
        assert!(json.contains("\"chi\":[["));
        assert!(json.contains("\"2010/03\""));
        assert_eq!(WindowedDataset::from_json(&json).unwrap(), ds);
    }

    proptest! {
        #[test]
        fn window_invariants(
            raw in prop::collection::vec(0.0f64..0.1, 20..80),
            p in 1usize..6,
            q in 1usize..4,
        ) {
            prop_assume!(raw.iter().any(|x| (x - raw[0]).abs() > 1e-6));
            let s = series_from(&raw, stamp(2005, 40));
            let ds = build_windows(&s, p, q).unwrap().assign_fraction_splits(0.6, 0.2).unwrap();
            prop_assert_eq!(ds.n_nodes(), raw.len() - p - q + 1);
            let std = match ds.clone().standardize() {
                Ok(d) => d,
                Err(_) => return Ok(()),
            };
            let back = std.clone().destandardize();
            for (a, b) in back.chi.as_slice().iter().zip(ds.chi.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-3));
            }
            let norm = std.norm.unwrap();
            for v in 0..std.n_nodes() {
                let raw_now = raw[std.series_index(v)];
                prop_assert!((norm.invert(std.chi[(v, 0)]) - raw_now).abs() < 1e-12);
                let last_input = std.series_index(v);
                prop_assert!(s.points[last_input].stamp < s.points[last_input + 1].stamp);
                prop_assert_eq!(std.targets[(v, 0)], norm.apply(raw[last_input + 1]));
            }
            let tr = std.indices(Split::Train);
            let va = std.indices(Split::Val);
            let te = std.indices(Split::Test);
            if let (Some(a), Some(b)) = (tr.last(), va.first()) {
                prop_assert!(std.node_stamps[*a] < std.node_stamps[*b]);
            }
            if let (Some(a), Some(b)) = (va.last(), te.first()) {
                prop_assert!(std.node_stamps[*a] < std.node_stamps[*b]);
            }
        }
    }
}
