//! Reference forecasters and the fixed-graph ablation mask.

use serde::{Deserialize, Serialize};

use crate::data::{Split, WindowedDataset};
use crate::error::{Error, Result};
use crate::model::NeighborhoodMask;
use crate::numerics::{lstsq, Matrix};
use crate::training::EvalReport;

/// Linear autoregression on the observation window, one step ahead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    /// One weight per window position, `coefficients[j]` multiplies `o_{v-j}`.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Number of window positions that were linearly independent in the fit.
    pub rank: usize,
}

/// Ordinary least squares with an intercept.
///
/// Regressors are centered, which moves the intercept out of the solve.
/// Columns that are linear combinations of earlier ones (constant or ramp
/// series) get a zero coefficient, so the fit stays exact on such inputs.
pub fn ar_fit(windows: &Matrix, targets: &Matrix) -> Result<ArModel> {
    if targets.cols() != 1 {
        return Err(Error::Unsupported(format!(
            "autoregression predicts one step ahead; got q = {}",
            targets.cols()
        )));
    }
    let (n, p) = windows.shape();
    if targets.rows() != n {
        return Err(Error::Dimension {
            op: "ar_fit",
            lhs: windows.shape(),
            rhs: targets.shape(),
        });
    }
    if n <= p + 1 {
        return Err(Error::TooShort {
            required: p + 2,
            actual: n,
        });
    }
    let x_mean: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| windows[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let y_mean = (0..n).map(|i| targets[(i, 0)]).sum::<f64>() / n as f64;
    let xc = Matrix::from_fn(n, p, |i, j| windows[(i, j)] - x_mean[j]);
    let yc: Vec<f64> = (0..n).map(|i| targets[(i, 0)] - y_mean).collect();

    let mut kept: Vec<usize> = Vec::new();
    let mut beta_kept = Vec::new();
    for j in 0..p {
        let mut trial = kept.clone();
        trial.push(j);
        let sub = Matrix::from_fn(n, trial.len(), |i, c| xc[(i, trial[c])]);
        match lstsq(&sub, &yc) {
            Ok(b) => {
                kept = trial;
                beta_kept = b;
            }
            Err(Error::Rank { .. }) => {
                log::debug!("ar_fit: window position {j} is collinear, coefficient pinned to 0")
            }
            Err(e) => return Err(e),
        }
    }
    let mut coefficients = vec![0.0; p];
    for (&j, &b) in kept.iter().zip(&beta_kept) {
        coefficients[j] = b;
    }
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    if !intercept.is_finite() || coefficients.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite {
            stage: "ar_fit".into(),
        });
    }
    Ok(ArModel {
        coefficients,
        intercept,
        rank: kept.len(),
    })
}

pub fn ar_predict(model: &ArModel, window: &[f64]) -> f64 {
    model.intercept
        + model
            .coefficients
            .iter()
            .zip(window)
            .map(|(b, x)| b * x)
            .sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Mean target of the `k` train windows closest to `query` in Euclidean
/// distance. Equal distances keep the earlier row first.
pub fn knn_predict(
    cfg: KnnConfig,
    train_windows: &Matrix,
    train_targets: &Matrix,
    query: &[f64],
) -> Result<Vec<f64>> {
    let n = train_windows.rows();
    if n == 0 {
        return Err(Error::Argument("k-NN needs a non-empty train set".into()));
    }
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::Argument(format!(
            "k = {} must lie in 1..={n}",
            cfg.k
        )));
    }
    if query.len() != train_windows.cols() {
        return Err(Error::Dimension {
            op: "knn_predict",
            lhs: (1, query.len()),
            rhs: train_windows.shape(),
        });
    }
    let mut dist: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let d: f64 = train_windows
                .row(i)
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            (d, i)
        })
        .collect();
    // Stable sort keeps index order among ties.
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let q = train_targets.cols();
    let mut out = vec![0.0; q];
    for &(_, i) in &dist[..cfg.k] {
        for (o, t) in out.iter_mut().zip(train_targets.row(i)) {
            *o += t;
        }
    }
    for o in &mut out {
        *o /= cfg.k as f64;
    }
    Ok(out)
}

/// Repeats the current observation `window[0]` for `q` weeks.
pub fn persistence_predict(window: &[f64], q: usize) -> Vec<f64> {
    vec![window[0]; q]
}

/// Support of the fixed virtual graph: each node sees itself, the node one
/// week earlier and the node 52 weeks earlier, by chronological index.
pub fn fixed_graph_mask(ds: &WindowedDataset) -> NeighborhoodMask {
    NeighborhoodMask::from_fn(ds.n_nodes(), |v, u| {
        u == v || (v >= 1 && u == v - 1) || (v >= 52 && u == v - 52)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Baseline {
    Ar,
    Knn(KnnConfig),
    Persistence,
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Ar => "ar",
            Baseline::Knn(_) => "knn",
            Baseline::Persistence => "persistence",
        }
    }
}

/// Fits on the train split (where applicable) and scores `split`.
pub fn evaluate_baseline(
    baseline: Baseline,
    ds: &WindowedDataset,
    split: Split,
) -> Result<EvalReport> {
    let eval_idx = crate::training::eval_indices(ds, split)?;
    let train_idx = ds.indices(Split::Train);
    let x_train = ds.chi.select_rows(&train_idx);
    let y_train = ds.targets.select_rows(&train_idx);
    let mut y_hat = Matrix::zeros(eval_idx.len(), ds.q);
    match baseline {
        Baseline::Ar => {
            let model = ar_fit(&x_train, &y_train)?;
            for (r, &v) in eval_idx.iter().enumerate() {
                y_hat[(r, 0)] = ar_predict(&model, ds.chi.row(v));
            }
        }
        Baseline::Knn(cfg) => {
            for (r, &v) in eval_idx.iter().enumerate() {
                let pred = knn_predict(cfg, &x_train, &y_train, ds.chi.row(v))?;
                y_hat.row_mut(r).copy_from_slice(&pred);
            }
        }
        Baseline::Persistence => {
            for (r, &v) in eval_idx.iter().enumerate() {
                let pred = persistence_predict(ds.chi.row(v), ds.q);
                y_hat.row_mut(r).copy_from_slice(&pred);
            }
        }
    }
    let y = ds.targets.select_rows(&eval_idx);
    EvalReport::from_predictions(split, &y, &y_hat, ds.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_windows, IliPoint, IliSeries, WeekStamp};
    use crate::numerics::Rng;
    use proptest::prelude::*;

    fn series(values: &[f64]) -> IliSeries {
        let mut s = WeekStamp::new(2005, 1).unwrap();
        let points = values
            .iter()
            .map(|&rate| {
                let p = IliPoint { stamp: s, rate };
                s = s.succ();
                p
            })
            .collect();
        IliSeries::new(points, "test").unwrap()
    }

    #[test]
    fn constant_series_gives_constant_fit() {
        let ds = build_windows(&series(&[0.3; 40]), 4, 1).unwrap();
        let m = ar_fit(&ds.chi, &ds.targets).unwrap();
        assert!((m.intercept - 0.3).abs() < 1e-12);
        assert!((ar_predict(&m, &[0.3; 4]) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ramp_is_predicted_exactly() {
        let o: Vec<f64> = (0..30).map(|t| t as f64 / 100.0).collect();
        let ds = build_windows(&series(&o), 2, 1).unwrap();
        let m = ar_fit(&ds.chi, &ds.targets).unwrap();
        // Next value after the window [0.40, 0.39] is 0.41.
        assert!((ar_predict(&m, &[0.40, 0.39]) - 0.41).abs() < 1e-8);
    }

    #[test]
    fn ar_rejects_multi_step_targets() {
        let ds = build_windows(&series(&[0.1, 0.2, 0.3, 0.2, 0.1, 0.3, 0.2, 0.4]), 2, 2).unwrap();
        assert!(matches!(
            ar_fit(&ds.chi, &ds.targets),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn ar_needs_more_rows_than_columns() {
        let x = Matrix::zeros(3, 2);
        let y = Matrix::zeros(3, 1);
        assert!(matches!(ar_fit(&x, &y), Err(Error::TooShort { .. })));
    }

    #[test]
    fn ar_residuals_orthogonal_to_regressors() {
        let mut rng = Rng::new(3);
        let x = Matrix::from_fn(80, 5, |_, _| rng.normal());
        let y = Matrix::from_fn(80, 1, |i, _| x[(i, 0)] * 0.7 - x[(i, 3)] + 0.2 * rng.normal());
        let m = ar_fit(&x, &y).unwrap();
        assert_eq!(m.rank, 5);
        let resid: Vec<f64> = (0..80).map(|i| y[(i, 0)] - ar_predict(&m, x.row(i))).collect();
        assert!(resid.iter().sum::<f64>().abs() < 1e-8);
        for j in 0..5 {
            let d: f64 = (0..80).map(|i| resid[i] * x[(i, j)]).sum();
            assert!(d.abs() < 1e-8, "column {j}: {d}");
        }
    }

    #[test]
    fn knn_exact_match_returns_its_target() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 5.0]]).unwrap();
        let y = Matrix::from_rows(&[vec![10.0], vec![20.0], vec![30.0]]).unwrap();
        let pred = knn_predict(KnnConfig { k: 1 }, &x, &y, &[1.0, 1.0]).unwrap();
        assert_eq!(pred, vec![20.0]);
        let all = knn_predict(KnnConfig { k: 3 }, &x, &y, &[9.0, 9.0]).unwrap();
        assert_eq!(all, vec![20.0]);
        assert!(knn_predict(KnnConfig { k: 4 }, &x, &y, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn knn_ties_prefer_earlier_rows() {
        let x = Matrix::from_rows(&[vec![-1.0], vec![1.0], vec![3.0]]).unwrap();
        let y = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(knn_predict(KnnConfig { k: 1 }, &x, &y, &[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn knn_five_point_toy_matches_hand_distances() {
        // Squared distances to (0, 0): 25, 2, 8, 1, 13.
        let x = Matrix::from_rows(&[
            vec![3.0, 4.0],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![0.0, 1.0],
            vec![2.0, 3.0],
        ])
        .unwrap();
        let y = Matrix::from_rows(&[
            vec![1.0, -1.0],
            vec![2.0, -2.0],
            vec![3.0, -3.0],
            vec![4.0, -4.0],
            vec![5.0, -5.0],
        ])
        .unwrap();
        let pred = knn_predict(KnnConfig { k: 3 }, &x, &y, &[0.0, 0.0]).unwrap();
        // Nearest three: rows 3, 1, 2.
        assert_eq!(pred, vec![3.0, -3.0]);
    }

    /// Full sort by (distance, index) as an independent reference.
    fn knn_oracle(k: usize, x: &Matrix, y: &Matrix, q: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..x.rows()).collect();
        let d = |i: usize| -> f64 { x.row(i).iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum() };
        order.sort_by(|&a, &b| d(a).partial_cmp(&d(b)).unwrap().then(a.cmp(&b)));
        (0..y.cols())
            .map(|j| order[..k].iter().map(|&i| y[(i, j)]).sum::<f64>() / k as f64)
            .collect()
    }

    proptest! {
        #[test]
        fn knn_matches_sort_oracle(seed in any::<u64>(), n in 1usize..30, k_frac in 0.0f64..1.0) {
            let mut rng = Rng::new(seed);
            // Coarse grid values make exact ties common.
            let x = Matrix::from_fn(n, 3, |_, _| rng.below(4) as f64);
            let y = Matrix::from_fn(n, 2, |_, _| rng.normal());
            let q: Vec<f64> = (0..3).map(|_| rng.below(4) as f64).collect();
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let got = knn_predict(KnnConfig { k }, &x, &y, &q).unwrap();
            prop_assert_eq!(got, knn_oracle(k, &x, &y, &q));
        }

        #[test]
        fn knn_self_query_returns_own_target(seed in any::<u64>(), n in 1usize..30) {
            let mut rng = Rng::new(seed);
            let x = Matrix::from_fn(n, 4, |_, _| rng.normal());
            let y = Matrix::from_fn(n, 1, |_, _| rng.normal());
            let v = rng.below(n);
            let got = knn_predict(KnnConfig { k: 1 }, &x, &y, x.row(v)).unwrap();
            prop_assert_eq!(got[0], y[(v, 0)]);
        }
    }

    #[test]
    fn persistence_repeats_current_value() {
        assert_eq!(persistence_predict(&[0.5, 0.2, 0.1], 3), vec![0.5; 3]);
    }

    #[test]
    fn persistence_on_constant_series_is_exact() {
        let ds = build_windows(&series(&[0.2; 30]), 3, 2)
            .unwrap()
            .assign_fraction_splits(0.5, 0.2)
            .unwrap();
        let r = evaluate_baseline(Baseline::Persistence, &ds, Split::Test).unwrap();
        assert_eq!(r.mse_std, 0.0);
    }

    #[test]
    fn fixed_mask_neighbors() {
        let o: Vec<f64> = (0..100).map(|t| (t as f64 * 0.1).sin() * 0.01 + 0.02).collect();
        let ds = build_windows(&series(&o), 3, 1).unwrap();
        let m = fixed_graph_mask(&ds);
        assert_eq!(m.row_count(0), 1);
        let row60: Vec<usize> = (0..ds.n_nodes()).filter(|&u| m.allows(60, u)).collect();
        assert_eq!(row60, vec![8, 59, 60]);
        for v in 0..ds.n_nodes() {
            assert!((1..=3).contains(&m.row_count(v)));
            for u in 0..ds.n_nodes() {
                if m.allows(v, u) {
                    assert!(u <= v);
                }
            }
        }
    }
}
