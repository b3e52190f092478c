//! Season descriptive statistics: peak weeks, highest rates, durations.

use serde::{Deserialize, Serialize};

use super::{IliSeries, WeekStamp};

/// Rate above which a week counts toward a season's duration.
pub const SEASON_THRESHOLD: f64 = 0.01;
/// Minimum topographic prominence for a secondary peak inside one season.
pub const PEAK_PROMINENCE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Season {
    /// e.g. `"2009-2010"`
    pub label: String,
    pub start: WeekStamp,
    pub end: WeekStamp,
    /// Consecutive weeks with rate above the threshold.
    pub duration: usize,
    /// Chronological peaks; the first-listed highest is the season maximum.
    pub peaks: Vec<(WeekStamp, f64)>,
}

impl Season {
    pub fn highest(&self) -> f64 {
        self.peaks.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeasonSummary {
    pub seasons: Vec<Season>,
    /// Mean over every listed peak rate.
    pub peak_mean: f64,
    /// Sample standard deviation over every listed peak rate.
    pub peak_sd: f64,
    pub duration_mean: f64,
    pub duration_sd: f64,
}

/// Seasons are maximal runs of consecutive weeks with rate strictly above
/// `threshold`. Inside a run the global maximum is always a peak; other local
/// maxima are kept when their prominence is at least `prominence`.
pub fn season_summary(series: &IliSeries, threshold: f64, prominence: f64) -> SeasonSummary {
    let pts = &series.points;
    let mut seasons = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        if pts[i].rate <= threshold {
            i += 1;
            continue;
        }
        let start = i;
        while i < pts.len() && pts[i].rate > threshold {
            i += 1;
        }
        let run: Vec<f64> = pts[start..i].iter().map(|p| p.rate).collect();
        let peaks = prominent_peaks(&run, prominence)
            .into_iter()
            .map(|k| (pts[start + k].stamp, run[k]))
            .collect();
        let first = pts[start].stamp;
        let first_year = if first.week >= 27 { first.year } else { first.year - 1 };
        seasons.push(Season {
            label: format!("{}-{}", first_year, first_year + 1),
            start: first,
            end: pts[i - 1].stamp,
            duration: i - start,
            peaks,
        });
    }

    let rates: Vec<f64> = seasons
        .iter()
        .flat_map(|s| s.peaks.iter().map(|p| p.1))
        .collect();
    let durations: Vec<f64> = seasons.iter().map(|s| s.duration as f64).collect();
    let (peak_mean, peak_sd) = mean_sd(&rates);
    let (duration_mean, duration_sd) = mean_sd(&durations);
    SeasonSummary {
        seasons,
        peak_mean,
        peak_sd,
        duration_mean,
        duration_sd,
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Indices of peaks inside `run`, chronologically.
fn prominent_peaks(run: &[f64], prominence: f64) -> Vec<usize> {
    let n = run.len();
    let top = (0..n).fold(0, |best, k| if run[k] > run[best] { k } else { best });
    let mut out = Vec::new();
    for k in 0..n {
        if k == top {
            out.push(k);
            continue;
        }
        let left_ok = k == 0 || run[k] > run[k - 1];
        let right_ok = k + 1 == n || run[k] >= run[k + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        // Walk outwards until a strictly higher point; the bases are the minima on the way.
        let mut left_min = run[k];
        let mut j = k;
        while j > 0 {
            j -= 1;
            if run[j] > run[k] {
                break;
            }
            left_min = left_min.min(run[j]);
        }
        let mut right_min = run[k];
        let mut j = k + 1;
        while j < n {
            if run[j] > run[k] {
                break;
            }
            right_min = right_min.min(run[j]);
            j += 1;
        }
        if run[k] - left_min.max(right_min) >= prominence {
            out.push(k);
        }
    }
    out
}

/// Renders the summary as a fixed-width table.
pub fn format_season_table(summary: &SeasonSummary) -> String {
    let mut out = String::new();
    out.push_str("Season      Peak week   Highest rate   Duration (weeks)\n");
    for s in &summary.seasons {
        for (i, (stamp, rate)) in s.peaks.iter().enumerate() {
            let (label, dur) = if i == 0 {
                (s.label.as_str(), s.duration.to_string())
            } else {
                ("", String::new())
            };
            out.push_str(&format!("{label:<11} {stamp:<11} {rate:<14.4} {dur}\n"));
        }
    }
    out.push_str(&format!(
        "MEAN        -           {:<14.4} {:.0}\n",
        summary.peak_mean, summary.duration_mean
    ));
    out.push_str(&format!(
        "SD          -           {:<14.4} {:.0}\n",
        summary.peak_sd, summary.duration_sd
    ));
    out
}
