//! Trend analytics: monthly volumes, seasonal windows with weekend and
//! holiday annotation, peak days and year-over-year comparison.
//!
//! Season windows are configuration data, not code. Three presets covering
//! spring flower viewing, autumn foliage and winter ski seasons ship with
//! the crate ([`builtin_presets`]); users supply their own preset CSV for
//! other studies.

use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate, Weekday};
use thiserror::Error;

use crate::calendar::{date_of_day, days_in_year, CalendarError, DayRange, MonthDay};
use crate::model::{ICRegistry, TimeCategory};
use crate::query::{destination_series, DaySeries, QueryError};
use crate::tensor::ODTensor;

#[derive(Debug, Error)]
pub enum TrendError {
    #[error("season window '{label}' has start after end")]
    WindowOrder { label: String },
    #[error("season window '{label}' does not resolve in year {year}")]
    WindowNotInYear { label: String, year: i32 },
    #[error("preset csv line {line}: {reason}")]
    PresetsCsv { line: u64, reason: String },
    #[error("no season preset labeled '{0}'")]
    UnknownLabel(String),
    #[error("holiday csv line {line}: {reason}")]
    HolidayCsv { line: u64, reason: String },
    #[error("tensors mix categories: {0} vs {1}")]
    MixedCategories(TimeCategory, TimeCategory),
    #[error("two tensors for year {0}")]
    DuplicateYear(i32),
    #[error("year-over-year needs at least 2 years")]
    NeedTwoYears,
    #[error("series windows differ between years")]
    MismatchedWindows,
    #[error(transparent)]
    Calendar(#[from] CalendarError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// True for every day of `year` that falls on Saturday or Sunday.
pub fn weekend_mask(year: i32) -> Vec<bool> {
    (0..days_in_year(year))
        .map(|t| {
            let wd = date_of_day(year, t).expect("day in year").weekday();
            wd == Weekday::Sat || wd == Weekday::Sun
        })
        .collect()
}

/// Total counts per calendar month; entries sum to `tensor.total()`.
pub fn monthly_totals(tensor: &ODTensor) -> [u64; 12] {
    let ranges = crate::calendar::month_ranges(tensor.year());
    let mut out = [0u64; 12];
    for (m, range) in ranges.iter().enumerate() {
        for t in range.iter() {
            out[m] += tensor
                .day_cells(t)
                .iter()
                .map(|c| u64::from(c.count))
                .sum::<u64>();
        }
    }
    out
}

/// CSV form of monthly totals: `month,count` with months 1..12.
pub fn write_monthly_csv<W: Write>(totals: &[u64; 12], mut w: W) -> Result<(), TrendError> {
    writeln!(w, "month,count")?;
    for (m, v) in totals.iter().enumerate() {
        writeln!(w, "{},{}", m + 1, v)?;
    }
    Ok(())
}

/// A labeled month-day window plus the destination set of one case study.
/// Endpoints are inclusive and convert to half-open day ranges per year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeasonWindow {
    pub label: String,
    pub start: MonthDay,
    pub end: MonthDay,
    pub dest_ic_ids: Vec<String>,
}

impl SeasonWindow {
    pub fn new(
        label: impl Into<String>,
        start: MonthDay,
        end: MonthDay,
        dest_ic_ids: Vec<String>,
    ) -> Result<Self, TrendError> {
        let label = label.into();
        if start > end {
            return Err(TrendError::WindowOrder { label });
        }
        Ok(Self {
            label,
            start,
            end,
            dest_ic_ids,
        })
    }

    /// The half-open day-index range of this window in `year`.
    pub fn day_range(&self, year: i32) -> Result<DayRange, TrendError> {
        let from = self
            .start
            .resolve(year)
            .map_err(|_| TrendError::WindowNotInYear {
                label: self.label.clone(),
                year,
            })?;
        let to = self
            .end
            .resolve(year)
            .map_err(|_| TrendError::WindowNotInYear {
                label: self.label.clone(),
                year,
            })?;
        Ok(DayRange::from_inclusive_dates(from, to, year)?)
    }
}

/// Parses a season preset CSV:
/// `label,start_mmdd,end_mmdd,dest_ic_ids` (destinations `;`-separated).
pub fn parse_presets<R: Read>(reader: R) -> Result<Vec<SeasonWindow>, TrendError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let line = k as u64 + 1;
        let row = row.map_err(|e| TrendError::PresetsCsv {
            line,
            reason: e.to_string(),
        })?;
        if line == 1 && row.get(0) == Some("label") {
            continue;
        }
        if row.len() != 4 {
            return Err(TrendError::PresetsCsv {
                line,
                reason: format!("expected 4 columns, found {}", row.len()),
            });
        }
        let start = MonthDay::parse_mmdd(&row[1]).map_err(|e| TrendError::PresetsCsv {
            line,
            reason: e.to_string(),
        })?;
        let end = MonthDay::parse_mmdd(&row[2]).map_err(|e| TrendError::PresetsCsv {
            line,
            reason: e.to_string(),
        })?;
        let dests: Vec<String> = row[3]
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if dests.is_empty() {
            return Err(TrendError::PresetsCsv {
                line,
                reason: "no destination ids".to_string(),
            });
        }
        out.push(SeasonWindow::new(&row[0], start, end, dests)?);
    }
    Ok(out)
}

/// The presets shipped with the crate: spring flower viewing, autumn
/// foliage and ski season windows with placeholder destination ids.
pub fn builtin_presets() -> Vec<SeasonWindow> {
    parse_presets(include_str!("../data/season_presets.csv").as_bytes())
        .expect("embedded presets are valid")
}

/// Finds a window by label.
pub fn preset_by_label<'a>(
    presets: &'a [SeasonWindow],
    label: &str,
) -> Result<&'a SeasonWindow, TrendError> {
    presets
        .iter()
        .find(|w| w.label == label)
        .ok_or_else(|| TrendError::UnknownLabel(label.to_string()))
}

/// A user-supplied set of holiday dates.
#[derive(Debug, Clone, Default)]
pub struct HolidayCalendar {
    dates: HashSet<NaiveDate>,
}

impl HolidayCalendar {
    /// Reads a holiday CSV: one `YYYY-MM-DD` per line, optional `date` header.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, TrendError> {
        let mut dates = HashSet::new();
        let mut buf = String::new();
        let mut reader = reader;
        reader.read_to_string(&mut buf)?;
        for (k, raw) in buf.lines().enumerate() {
            let line = k as u64 + 1;
            let s = raw.trim();
            if s.is_empty() || (line == 1 && s == "date") {
                continue;
            }
            let d = NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| {
                TrendError::HolidayCsv {
                    line,
                    reason: format!("bad date '{s}'"),
                }
            })?;
            dates.insert(d);
        }
        Ok(Self { dates })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.dates.contains(&date)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// A day series with per-day weekend and holiday flags. Annotation never
/// alters the counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSeries {
    pub series: DaySeries,
    pub weekend: Vec<bool>,
    pub holiday: Vec<bool>,
}

impl AnnotatedSeries {
    /// Plot-ready CSV: `date,count,is_weekend,is_holiday` (flags as 1/0).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), TrendError> {
        writeln!(w, "date,count,is_weekend,is_holiday")?;
        for (k, (t, v)) in self.series.days().enumerate() {
            let date = date_of_day(self.series.year(), t).expect("day in range");
            writeln!(
                w,
                "{date},{v},{},{}",
                u8::from(self.weekend[k]),
                u8::from(self.holiday[k])
            )?;
        }
        Ok(())
    }
}

/// One annotated destination series per year over a season window.
///
/// All tensors must share one category; each must be a distinct year.
pub fn season_series(
    tensors: &[&ODTensor],
    window: &SeasonWindow,
    registry: &ICRegistry,
    holidays: Option<&HolidayCalendar>,
) -> Result<Vec<AnnotatedSeries>, TrendError> {
    if let Some((first, rest)) = tensors.split_first() {
        for t in rest {
            if t.category() != first.category() {
                return Err(TrendError::MixedCategories(
                    first.category(),
                    t.category(),
                ));
            }
        }
    }
    let mut seen_years = HashSet::new();
    let mut out = Vec::with_capacity(tensors.len());
    for tensor in tensors {
        if !seen_years.insert(tensor.year()) {
            return Err(TrendError::DuplicateYear(tensor.year()));
        }
        let range = window.day_range(tensor.year())?;
        let series = destination_series(tensor, &window.dest_ic_ids, range, registry)?;
        let mask = weekend_mask(tensor.year());
        let weekend: Vec<bool> = range.iter().map(|t| mask[t as usize]).collect();
        let holiday: Vec<bool> = range
            .iter()
            .map(|t| {
                holidays
                    .map(|h| h.contains(date_of_day(tensor.year(), t).expect("in year")))
                    .unwrap_or(false)
            })
            .collect();
        out.push(AnnotatedSeries {
            series,
            weekend,
            holiday,
        });
    }
    Ok(out)
}

/// The `k` highest-count days of a series: descending by count, ties broken
/// by ascending day index. Day indices are absolute within the year.
pub fn peak_days(series: &DaySeries, k: usize) -> Vec<(u32, u64)> {
    let mut days: Vec<(u32, u64)> = series.days().collect();
    days.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    days.truncate(k);
    days
}

/// Totals per year over a common window, with consecutive-year ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct YearOverYear {
    pub years: Vec<i32>,
    pub totals: Vec<u64>,
    /// `ratios[k]` = totals of year `k+1` over year `k`; `None` when the
    /// earlier total is zero.
    pub ratios: Vec<Option<f64>>,
}

/// Compares the same window across years. Series must cover identical
/// month-day windows (their day-index ranges may differ around leap days).
pub fn year_over_year(series: &[&DaySeries]) -> Result<YearOverYear, TrendError> {
    if series.len() < 2 {
        return Err(TrendError::NeedTwoYears);
    }
    let window_of = |s: &DaySeries| -> Result<(u32, u32, u32, u32), TrendError> {
        if s.range().is_empty() {
            return Err(TrendError::MismatchedWindows);
        }
        let first = date_of_day(s.year(), s.range().start()).expect("in year");
        let last = date_of_day(s.year(), s.range().end() - 1).expect("in year");
        Ok((first.month(), first.day(), last.month(), last.day()))
    };
    let mut ordered: Vec<&DaySeries> = series.to_vec();
    ordered.sort_by_key(|s| s.year());
    for pair in ordered.windows(2) {
        if pair[0].year() == pair[1].year() {
            return Err(TrendError::DuplicateYear(pair[0].year()));
        }
    }
    let want = window_of(ordered[0])?;
    for s in &ordered[1..] {
        if window_of(s)? != want {
            return Err(TrendError::MismatchedWindows);
        }
    }
    let years: Vec<i32> = ordered.iter().map(|s| s.year()).collect();
    let totals: Vec<u64> = ordered.iter().map(|s| s.total()).collect();
    let ratios = totals
        .windows(2)
        .map(|w| (w[0] > 0).then(|| w[1] as f64 / w[0] as f64))
        .collect();
    Ok(YearOverYear {
        years,
        totals,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InterchangeRecord;
    use crate::tensor::ODTensorBuilder;

    fn registry(n: u32) -> ICRegistry {
        let entries = (0..n)
            .map(|k| {
                InterchangeRecord::new(
                    format!("IC{k:03}"),
                    format!("IC {k}"),
                    130.0 + k as f64 * 0.01,
                    35.0,
                )
                .unwrap()
            })
            .collect();
        ICRegistry::build(entries).unwrap()
    }

    #[test]
    fn weekend_mask_known_anchors() {
        // 2023-01-01 was a Sunday, 2024-01-01 a Monday.
        let m23 = weekend_mask(2023);
        assert!(m23[0]);
        assert!(!m23[2]);
        assert_eq!(m23.len(), 365);
        let m24 = weekend_mask(2024);
        assert!(!m24[0]);
        assert_eq!(m24.len(), 366);
    }

    #[test]
    fn weekend_runs_never_exceed_two_days() {
        for year in [2023, 2024] {
            let mask = weekend_mask(year);
            let mut run = 0;
            for &w in &mask {
                run = if w { run + 1 } else { 0 };
                assert!(run <= 2);
            }
        }
    }

    #[test]
    fn monthly_totals_zero_tensor() {
        let t = ODTensor::zero(2023, TimeCategory::Specified, 4);
        assert_eq!(monthly_totals(&t), [0u64; 12]);
    }

    #[test]
    fn monthly_totals_day_zero_is_january() {
        let mut b = ODTensorBuilder::new(2023, TimeCategory::Specified, 4);
        b.add(0, 1, 0, 7).unwrap();
        b.add(0, 1, 40, 2).unwrap(); // Feb 10
        b.add(2, 3, 364, 1).unwrap(); // Dec 31
        let t = b.finish();
        let m = monthly_totals(&t);
        assert_eq!(m[0], 7);
        assert_eq!(m[1], 2);
        assert_eq!(m[11], 1);
        assert_eq!(m.iter().sum::<u64>(), t.total());
    }

    #[test]
    fn builtin_presets_parse() {
        let presets = builtin_presets();
        assert_eq!(presets.len(), 3);
        let nemophila = preset_by_label(&presets, "nemophila").unwrap();
        assert_eq!(nemophila.start, MonthDay::new(3, 15).unwrap());
        assert_eq!(nemophila.end, MonthDay::new(5, 30).unwrap());
        assert_eq!(nemophila.dest_ic_ids.len(), 3);
        assert!(preset_by_label(&presets, "missing").is_err());
    }

    #[test]
    fn nemophila_window_length_is_77_days_in_non_leap_years() {
        let presets = builtin_presets();
        let w = preset_by_label(&presets, "nemophila").unwrap();
        // Calendar oracle: 17 (Mar 15-31) + 30 + 30 (Apr, May 1-30) days.
        assert_eq!(w.day_range(2023).unwrap().len(), 77);
        assert_eq!(w.day_range(2024).unwrap().len(), 77);
        // Leap day sits inside the ski window, stretching it by one.
        let ski = preset_by_label(&presets, "ski").unwrap();
        assert_eq!(ski.day_range(2023).unwrap().len(), 90);
        assert_eq!(ski.day_range(2024).unwrap().len(), 91);
    }

    #[test]
    fn window_order_is_validated() {
        let err = SeasonWindow::new(
            "backwards",
            MonthDay::new(5, 30).unwrap(),
            MonthDay::new(3, 15).unwrap(),
            vec!["IC000".to_string()],
        )
        .unwrap_err();
        assert!(matches!(err, TrendError::WindowOrder { .. }));
    }

    #[test]
    fn preset_csv_errors_carry_line_numbers() {
        let data = "label,start_mmdd,end_mmdd,dest_ic_ids\nok,0315,0530,A;B\nbad,9999,0530,A\n";
        match parse_presets(data.as_bytes()).unwrap_err() {
            TrendError::PresetsCsv { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn holiday_calendar_parses_and_flags() {
        let data = "date\n2023-05-03\n2023-05-04\n";
        let h = HolidayCalendar::from_reader(data.as_bytes()).unwrap();
        assert_eq!(h.len(), 2);
        assert!(h.contains(NaiveDate::from_ymd_opt(2023, 5, 3).unwrap()));
        assert!(!h.contains(NaiveDate::from_ymd_opt(2023, 5, 5).unwrap()));
        assert!(HolidayCalendar::from_reader("nonsense\n".as_bytes()).is_err());
    }

    fn spike_tensor(year: i32, day: u32, dest: u32, count: u32) -> ODTensor {
        let mut b = ODTensorBuilder::new(year, TimeCategory::Specified, 6);
        b.add(0, dest, day, count).unwrap();
        b.finish()
    }

    #[test]
    fn season_series_single_day_window() {
        let reg = registry(6);
        let w = SeasonWindow::new(
            "one-day",
            MonthDay::new(4, 1).unwrap(),
            MonthDay::new(4, 1).unwrap(),
            vec!["IC002".to_string()],
        )
        .unwrap();
        let t = spike_tensor(2023, 90, 2, 9); // Apr 1
        let out = season_series(&[&t], &w, &reg, None).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].series.values(), &[9]);
        assert_eq!(out[0].weekend.len(), 1);
    }

    #[test]
    fn season_series_annotation_preserves_counts() {
        let reg = registry(6);
        let presets = builtin_presets();
        let mut w = preset_by_label(&presets, "nemophila").unwrap().clone();
        w.dest_ic_ids = vec!["IC002".to_string()];
        let t = spike_tensor(2023, 100, 2, 4);
        let annotated = season_series(&[&t], &w, &reg, None).unwrap();
        let range = w.day_range(2023).unwrap();
        let bare = destination_series(&t, &w.dest_ic_ids, range, &reg).unwrap();
        assert_eq!(annotated[0].series.values(), bare.values());
        // Holiday flags come from the calendar when provided.
        let h = HolidayCalendar::from_reader("2023-05-03\n".as_bytes()).unwrap();
        let with_h = season_series(&[&t], &w, &reg, Some(&h)).unwrap();
        let may3_idx = (122 - range.start()) as usize; // 2023-05-03 is day 122
        assert!(with_h[0].holiday[may3_idx]);
        assert!(!annotated[0].holiday[may3_idx]);
    }

    #[test]
    fn season_series_rejects_mixed_categories_and_dup_years() {
        let reg = registry(6);
        let w = SeasonWindow::new(
            "w",
            MonthDay::new(4, 1).unwrap(),
            MonthDay::new(4, 2).unwrap(),
            vec!["IC000".to_string()],
        )
        .unwrap();
        let a = ODTensor::zero(2023, TimeCategory::Specified, 6);
        let b = ODTensor::zero(2024, TimeCategory::Unspecified, 6);
        assert!(matches!(
            season_series(&[&a, &b], &w, &reg, None),
            Err(TrendError::MixedCategories(..))
        ));
        let c = ODTensor::zero(2023, TimeCategory::Specified, 6);
        assert!(matches!(
            season_series(&[&a, &c], &w, &reg, None),
            Err(TrendError::DuplicateYear(2023))
        ));
    }

    #[test]
    fn peak_days_constant_series_picks_first_day() {
        let s = DaySeries::new(2023, DayRange::new(90, 95).unwrap(), vec![3; 5], "const");
        assert_eq!(peak_days(&s, 1), vec![(90, 3)]);
    }

    #[test]
    fn peak_days_finds_spike_and_orders_ties() {
        let s = DaySeries::new(
            2023,
            DayRange::new(10, 16).unwrap(),
            vec![1, 9, 2, 9, 0, 3],
            "spiky",
        );
        assert_eq!(peak_days(&s, 3), vec![(11, 9), (13, 9), (15, 3)]);
        // k beyond length returns everything, still ordered.
        assert_eq!(peak_days(&s, 100).len(), 6);
    }

    #[test]
    fn year_over_year_identical_series() {
        let a = DaySeries::new(2022, DayRange::new(90, 95).unwrap(), vec![2; 5], "a");
        let b = DaySeries::new(2023, DayRange::new(90, 95).unwrap(), vec![2; 5], "b");
        let yoy = year_over_year(&[&a, &b]).unwrap();
        assert_eq!(yoy.years, vec![2022, 2023]);
        assert_eq!(yoy.totals, vec![10, 10]);
        assert_eq!(yoy.ratios, vec![Some(1.0)]);
    }

    #[test]
    fn year_over_year_doubled_series() {
        let a = DaySeries::new(2022, DayRange::new(90, 95).unwrap(), vec![2; 5], "a");
        let b = DaySeries::new(2023, DayRange::new(90, 95).unwrap(), vec![4; 5], "b");
        let yoy = year_over_year(&[&b, &a]).unwrap(); // order-insensitive
        assert_eq!(yoy.ratios, vec![Some(2.0)]);
    }

    #[test]
    fn year_over_year_validates_input() {
        let a = DaySeries::new(2022, DayRange::new(90, 95).unwrap(), vec![2; 5], "a");
        assert!(matches!(
            year_over_year(&[&a]),
            Err(TrendError::NeedTwoYears)
        ));
        // Same day-index range in different years maps to different
        // month-days when leap offsets differ: use a mismatched range.
        let c = DaySeries::new(2023, DayRange::new(91, 96).unwrap(), vec![2; 5], "c");
        assert!(matches!(
            year_over_year(&[&a, &c]),
            Err(TrendError::MismatchedWindows)
        ));
    }

    #[test]
    fn annotated_csv_shape() {
        let reg = registry(6);
        let w = SeasonWindow::new(
            "w",
            MonthDay::new(1, 1).unwrap(),
            MonthDay::new(1, 2).unwrap(),
            vec!["IC001".to_string()],
        )
        .unwrap();
        let t = spike_tensor(2023, 0, 1, 5);
        let out = season_series(&[&t], &w, &reg, None).unwrap();
        let mut buf = Vec::new();
        out[0].write_csv(&mut buf).unwrap();
        // Jan 1 2023 is a Sunday.
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "date,count,is_weekend,is_holiday\n2023-01-01,5,1,0\n2023-01-02,0,0,0\n"
        );
    }
}
