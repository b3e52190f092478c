//! Synthetic weekly series for tests, demos and smoke runs.

use super::{IliPoint, IliSeries, WeekStamp};
use crate::numerics::Rng;

fn build(start: WeekStamp, values: impl Iterator<Item = f64>, provenance: &str) -> IliSeries {
    let mut s = start;
    let points = values
        .map(|rate| {
            let p = IliPoint { stamp: s, rate };
            s = s.succ();
            p
        })
        .collect();
    IliSeries {
        points,
        provenance: provenance.to_string(),
    }
}

/// Noiseless sinusoid `0.5 + amplitude·sin(2πt/period)`.
pub fn sinusoid(start: WeekStamp, len: usize, period: f64, amplitude: f64) -> IliSeries {
    let values = (0..len)
        .map(|t| 0.5 + amplitude * (std::f64::consts::TAU * t as f64 / period).sin());
    build(start, values, "synthetic:sinusoid")
}

/// ILI-like series: a low baseline with one bell-shaped epidemic per season
/// whose timing, height and width vary from year to year, plus an optional
/// off-season multi-wave outbreak.
pub fn seasonal_ili(seed: u64, start: WeekStamp, len: usize, with_pandemic: bool) -> IliSeries {
    let mut rng = Rng::new(seed);
    // Season k peaks near week 6 of its second calendar year, ±6 weeks.
    let n_seasons = len / 52 + 2;
    let seasons: Vec<(f64, f64, f64)> = (0..n_seasons)
        .map(|k| {
            let centre = 52.0 * k as f64 + (32.0 - start.week as f64) + rng.uniform(-6.0, 6.0);
            let height = rng.uniform(0.015, 0.05);
            let width = rng.uniform(4.0, 8.0);
            (centre, height, width)
        })
        .collect();
    let pandemic = with_pandemic.then(|| {
        let base = 52.0 * (n_seasons as f64 / 2.0).floor() + 10.0;
        [(base, 0.02, 4.0), (base + 18.0, 0.045, 6.0)]
    });
    let mut noise_rng = rng.fork();
    let values: Vec<f64> = (0..len)
        .map(|t| {
            let t = t as f64;
            let mut x = 0.008;
            for &(c, h, w) in &seasons {
                x += h * (-0.5 * ((t - c) / w).powi(2)).exp();
            }
            if let Some(waves) = &pandemic {
                for &(c, h, w) in waves {
                    x += h * (-0.5 * ((t - c) / w).powi(2)).exp();
                }
            }
            (x * (1.0 + 0.03 * noise_rng.normal())).clamp(0.0, 1.0)
        })
        .collect();
    build(start, values.into_iter(), "synthetic:seasonal")
}
