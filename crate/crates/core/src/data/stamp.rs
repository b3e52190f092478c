use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Epidemiological week of a year, serialized as `"YYYY/WW"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeekStamp {
    pub year: i32,
    pub week: u8,
}

impl WeekStamp {
    pub fn new(year: i32, week: u8) -> Result<Self, Error> {
        if !(1..=53).contains(&week) {
            return Err(Error::Format(format!("week {week} outside 1..=53")));
        }
        Ok(Self { year, week })
    }

    /// The stamp one week later, assuming a 52-week year.
    ///
    /// Used for listing missing weeks; [`WeekStamp::is_followed_by`] also
    /// accepts week 53.
    pub fn succ(self) -> Self {
        if self.week >= 52 {
            Self {
                year: self.year + 1,
                week: 1,
            }
        } else {
            Self {
                year: self.year,
                week: self.week + 1,
            }
        }
    }

    /// True when `next` is the week immediately after `self`. A rollover from
    /// week 52 or 53 into week 1 counts as consecutive.
    pub fn is_followed_by(self, next: Self) -> bool {
        (next.year == self.year && next.week == self.week + 1)
            || (next.year == self.year + 1 && next.week == 1 && self.week >= 52)
    }
}

impl fmt::Display for WeekStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}/{:02}", self.year, self.week)
    }
}

impl FromStr for WeekStamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Format(format!("bad stamp {s:?}, expected YYYY/WW"));
        let (y, w) = s.trim().split_once('/').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let week = w.parse().map_err(|_| bad())?;
        WeekStamp::new(year, week)
    }
}

impl Serialize for WeekStamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WeekStamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_year_then_week() {
        let a = WeekStamp::new(2009, 52).unwrap();
        let b = WeekStamp::new(2010, 1).unwrap();
        assert!(a < b);
        assert!(a.is_followed_by(b));
        let c = WeekStamp::new(2009, 53).unwrap();
        assert!(a.is_followed_by(c) && c.is_followed_by(b));
        assert!(!b.is_followed_by(a));
    }

    #[test]
    fn parse_and_display() {
        let s: WeekStamp = "2009/07".parse().unwrap();
        assert_eq!(s, WeekStamp { year: 2009, week: 7 });
        assert_eq!(s.to_string(), "2009/07");
        assert!("2009/54".parse::<WeekStamp>().is_err());
        assert!("2009-07".parse::<WeekStamp>().is_err());
    }
}
