use serde::{Deserialize, Serialize};

use super::WeekStamp;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IliPoint {
    pub stamp: WeekStamp,
    pub rate: f64,
}

/// Gap-free weekly ILI rate series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IliSeries {
    pub points: Vec<IliPoint>,
    pub provenance: String,
}

impl IliSeries {
    /// Validates ordering, contiguity and rate range.
    pub fn new(points: Vec<IliPoint>, provenance: impl Into<String>) -> Result<Self> {
        for (i, pt) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&pt.rate) || !pt.rate.is_finite() {
                return Err(Error::Format(format!(
                    "rate {} at {} (row {}) outside [0, 1]",
                    pt.rate,
                    pt.stamp,
                    i + 1
                )));
            }
        }
        let mut missing = Vec::new();
        for w in points.windows(2) {
            let (a, b) = (w[0].stamp, w[1].stamp);
            if b <= a {
                return Err(Error::Format(format!(
                    "stamps not strictly increasing: {a} then {b}"
                )));
            }
            if !a.is_followed_by(b) {
                let mut s = a.succ();
                while s < b && !s.is_followed_by(b) {
                    missing.push(s.to_string());
                    s = s.succ();
                }
                if s < b {
                    missing.push(s.to_string());
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::Gap { missing });
        }
        Ok(Self {
            points,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate).collect()
    }

    pub fn stamps(&self) -> Vec<WeekStamp> {
        self.points.iter().map(|p| p.stamp).collect()
    }

    pub fn position(&self, stamp: WeekStamp) -> Option<usize> {
        self.points.binary_search_by(|p| p.stamp.cmp(&stamp)).ok()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("YEAR,WEEK,ILI_RATE\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.stamp.year, p.stamp.week, p.rate));
        }
        out
    }
}

fn normalize_header(h: &str) -> String {
    h.trim()
        .trim_start_matches('\u{feff}')
        .to_ascii_uppercase()
        .replace(['.', '%'], "")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
}

/// Parses a weekly ILI table.
///
/// Accepts `YEAR,WEEK,ILI_RATE` or `YEAR,WEEK,ILITOTAL,TOTAL_PATIENTS`
/// (rate = ILITOTAL / TOTAL_PATIENTS). Header matching ignores case, spaces
/// and dots, so FluView's `TOTAL PATIENTS` is accepted; preamble lines before
/// the header row are skipped.
pub fn parse_ili_csv(raw: &str) -> Result<IliSeries> {
    let header_line = raw
        .lines()
        .position(|l| {
            let cols: Vec<String> = l.split(',').map(normalize_header).collect();
            cols.iter().any(|c| c == "YEAR") && cols.iter().any(|c| c == "WEEK")
        })
        .ok_or_else(|| Error::Format("missing YEAR/WEEK header".into()))?;
    let body: String = raw
        .lines()
        .skip(header_line)
        .collect::<Vec<_>>()
        .join("\n");

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(body.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(normalize_header).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let year_col = col("YEAR").ok_or_else(|| Error::Format("missing YEAR column".into()))?;
    let week_col = col("WEEK").ok_or_else(|| Error::Format("missing WEEK column".into()))?;

    enum Source {
        Rate(usize),
        Counts(usize, usize),
    }
    let source = match (col("ILI_RATE"), col("ILITOTAL"), col("TOTAL_PATIENTS")) {
        (Some(r), _, _) => Source::Rate(r),
        (None, Some(n), Some(d)) => Source::Counts(n, d),
        _ => {
            return Err(Error::Format(
                "need ILI_RATE or both ILITOTAL and TOTAL_PATIENTS columns".into(),
            ))
        }
    };

    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = header_line + i + 2;
        let field = |c: usize| -> Result<&str> {
            rec.get(c)
                .ok_or_else(|| Error::Format(format!("row {row}: missing column {}", c + 1)))
        };
        let num = |c: usize| -> Result<f64> {
            let s = field(c)?;
            s.parse::<f64>()
                .map_err(|_| Error::Format(format!("row {row}: cannot parse {s:?} as a number")))
        };
        let year = field(year_col)?
            .parse::<i32>()
            .map_err(|_| Error::Format(format!("row {row}: bad YEAR")))?;
        let week = field(week_col)?
            .parse::<u8>()
            .map_err(|_| Error::Format(format!("row {row}: bad WEEK")))?;
        let stamp = WeekStamp::new(year, week)
            .map_err(|e| Error::Format(format!("row {row}: {e}")))?;
        let rate = match source {
            Source::Rate(r) => num(r)?,
            Source::Counts(n, d) => {
                let total = num(d)?;
                if total == 0.0 {
                    return Err(Error::ZeroDenominator { row });
                }
                num(n)? / total
            }
        };
        points.push(IliPoint { stamp, rate });
    }
    IliSeries::new(points, "csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_give_rate() {
        let s = parse_ili_csv("YEAR,WEEK,ILITOTAL,TOTAL_PATIENTS\n2009,42,762,10000\n").unwrap();
        assert!((s.points[0].rate - 0.0762).abs() < 1e-15);
        assert_eq!(s.points[0].stamp.to_string(), "2009/42");
    }

    #[test]
    fn zero_numerator() {
        let s = parse_ili_csv("YEAR,WEEK,ILITOTAL,TOTAL_PATIENTS\n2009,42,0,10000\n").unwrap();
        assert_eq!(s.points[0].rate, 0.0);
    }

    #[test]
    fn gap_names_missing_week() {
        let err = parse_ili_csv("YEAR,WEEK,ILI_RATE\n2009,10,0.01\n2009,12,0.02\n").unwrap_err();
        match err {
            Error::Gap { missing } => assert_eq!(missing, vec!["2009/11".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_total_names_row() {
        let err = parse_ili_csv("YEAR,WEEK,ILITOTAL,TOTAL_PATIENTS\n2009,1,5,10\n2009,2,5,0\n")
            .unwrap_err();
        assert!(matches!(err, Error::ZeroDenominator { row: 3 }), "{err:?}");
    }

    #[test]
    fn missing_columns() {
        let err = parse_ili_csv("YEAR,WEEK,ILITOTAL\n2009,1,5\n").unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        assert!(parse_ili_csv("A,B\n1,2\n").is_err());
    }

    #[test]
    fn year_rollover_is_contiguous() {
        let s = parse_ili_csv("YEAR,WEEK,ILI_RATE\n2008,52,0.01\n2008,53,0.01\n2009,1,0.02\n")
            .unwrap();
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn fluview_style_export() {
        let raw = "PERCENTAGE OF VISITS FOR INFLUENZA-LIKE-ILLNESS\n\
                   REGION TYPE,REGION,YEAR,WEEK,% WEIGHTED ILI,ILITOTAL,NUM. OF PROVIDERS,TOTAL PATIENTS\n\
                   National,X,2003,40,1.2,500,1000,50000\n\
                   National,X,2003,41,1.3,600,1000,50000\n";
        let s = parse_ili_csv(raw).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.points[1].rate - 0.012).abs() < 1e-15);
    }

    #[test]
    fn rate_out_of_range() {
        assert!(parse_ili_csv("YEAR,WEEK,ILI_RATE\n2009,1,1.5\n").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = parse_ili_csv("YEAR,WEEK,ILI_RATE\n2009,1,0.0123456789\n2009,2,0.02\n").unwrap();
        assert_eq!(parse_ili_csv(&s.to_csv()).unwrap().points, s.points);
    }
}
