//! Day-of-year indexing and date-range utilities.
//!
//! All temporal addressing inside a tensor uses whole days elapsed since
//! January 1 of the tensor's year: January 1 is day 0, December 31 is day
//! 364 (365 in leap years). Ranges are half-open `[start, end)`.

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CalendarError {
    #[error("invalid day range: start {start} > end {end}")]
    InvalidRange { start: u32, end: u32 },
    #[error("month-day {month:02}{day:02} does not exist")]
    BadMonthDay { month: u32, day: u32 },
    #[error("month-day {month:02}{day:02} does not exist in year {year}")]
    BadMonthDayForYear { month: u32, day: u32, year: i32 },
    #[error("cannot parse '{0}' as MMDD month-day")]
    BadMonthDayString(String),
    #[error("date {date} does not fall in year {year}")]
    OutOfYear { date: NaiveDate, year: i32 },
}

/// Number of days in `year` (365, or 366 for leap years).
pub fn days_in_year(year: i32) -> u32 {
    if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366
    } else {
        365
    }
}

/// Day index of `date` within `year`: whole days elapsed since January 1,
/// or `None` when the date falls in a different year.
pub fn day_index_of_date(date: NaiveDate, year: i32) -> Option<u32> {
    if date.year() == year {
        Some(date.ordinal0())
    } else {
        None
    }
}

/// Day index of a timestamp within `year`; the time of day is ignored.
pub fn day_index(ts: NaiveDateTime, year: i32) -> Option<u32> {
    day_index_of_date(ts.date(), year)
}

/// The calendar date at day index `t` of `year`, if `t` is in range.
pub fn date_of_day(year: i32, t: u32) -> Option<NaiveDate> {
    NaiveDate::from_yo_opt(year, t + 1)
}

/// A half-open range of day indices `[start, end)` within one year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DayRange {
    start: u32,
    end: u32,
}

impl DayRange {
    pub fn new(start: u32, end: u32) -> Result<Self, CalendarError> {
        if start > end {
            return Err(CalendarError::InvalidRange { start, end });
        }
        Ok(Self { start, end })
    }

    /// The full year `[0, n_days)`.
    pub fn full_year(year: i32) -> Self {
        Self {
            start: 0,
            end: days_in_year(year),
        }
    }

    /// Converts an inclusive date interval into a half-open index range.
    /// Both dates must fall in `year`.
    pub fn from_inclusive_dates(
        from: NaiveDate,
        to: NaiveDate,
        year: i32,
    ) -> Result<Self, CalendarError> {
        let start = day_index_of_date(from, year)
            .ok_or(CalendarError::OutOfYear { date: from, year })?;
        let last = day_index_of_date(to, year).ok_or(CalendarError::OutOfYear { date: to, year })?;
        Self::new(start, last + 1)
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn end(&self) -> u32 {
        self.end
    }

    pub fn len(&self) -> u32 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, t: u32) -> bool {
        t >= self.start && t < self.end
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> {
        self.start..self.end
    }
}

impl std::fmt::Display for DayRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// A month and day without a year, e.g. season window endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MonthDay {
    month: u32,
    day: u32,
}

impl MonthDay {
    pub fn new(month: u32, day: u32) -> Result<Self, CalendarError> {
        // Validate against a leap year so Feb 29 is representable; whether it
        // exists in a concrete year is checked by `resolve`.
        if NaiveDate::from_ymd_opt(2024, month, day).is_none() {
            return Err(CalendarError::BadMonthDay { month, day });
        }
        Ok(Self { month, day })
    }

    /// Parses the 4-digit `MMDD` form used in season preset files.
    pub fn parse_mmdd(s: &str) -> Result<Self, CalendarError> {
        let s = s.trim();
        if s.len() != 4 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(CalendarError::BadMonthDayString(s.to_string()));
        }
        let month: u32 = s[..2].parse().unwrap();
        let day: u32 = s[2..].parse().unwrap();
        Self::new(month, day).map_err(|_| CalendarError::BadMonthDayString(s.to_string()))
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    /// The concrete date in `year`, or an error for Feb 29 in non-leap years.
    pub fn resolve(&self, year: i32) -> Result<NaiveDate, CalendarError> {
        NaiveDate::from_ymd_opt(year, self.month, self.day).ok_or(
            CalendarError::BadMonthDayForYear {
                month: self.month,
                day: self.day,
                year,
            },
        )
    }
}

impl std::fmt::Display for MonthDay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:02}{:02}", self.month, self.day)
    }
}

/// Half-open day ranges of the twelve months of `year`, in order.
pub fn month_ranges(year: i32) -> [DayRange; 12] {
    let mut out = [DayRange { start: 0, end: 0 }; 12];
    for m in 1..=12u32 {
        let first = NaiveDate::from_ymd_opt(year, m, 1).expect("month start");
        let next = if m == 12 {
            NaiveDate::from_ymd_opt(year + 1, 1, 1).expect("next year start")
        } else {
            NaiveDate::from_ymd_opt(year, m + 1, 1).expect("next month start")
        };
        let start = first.ordinal0();
        let end = if m == 12 {
            days_in_year(year)
        } else {
            next.ordinal0()
        };
        out[(m - 1) as usize] = DayRange { start, end };
    }
    out
}
