//! Weekly ILI ingestion, supervised windowing, splits and standardization.

mod seasons;
mod series;
mod stamp;
pub mod synthetic;
mod window;

pub use seasons::{
    format_season_table, season_summary, Season, SeasonSummary, PEAK_PROMINENCE, SEASON_THRESHOLD,
};
pub use series::{parse_ili_csv, IliPoint, IliSeries};
pub use stamp::WeekStamp;
pub use window::{
    build_windows, prepare_dataset, Norm, Split, SplitCounts, SplitPolicy, WindowedDataset,
};
