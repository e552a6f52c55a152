//! Line-oriented parsing of the search-log CSV format.
//!
//! One record per line: `search_time,departure_ic,arrival_ic,specified_time`
//! with datetimes as `YYYY-MM-DDTHH:MM` and a possibly empty specified-time
//! column. Seconds, if present in the input, are accepted and truncated.

use std::io::BufRead;

use chrono::NaiveDateTime;
use thiserror::Error;

use crate::model::SearchRecord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("expected 4 columns, found {0}")]
    WrongColumnCount(usize),
    #[error("malformed {field} datetime '{value}'")]
    BadDatetime { field: &'static str, value: String },
    #[error("empty {0} column")]
    EmptyField(&'static str),
}

/// A parse failure located at a 1-based line number.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("log line {line}: {kind}")]
pub struct ParseError {
    pub line: u64,
    pub kind: ParseErrorKind,
}

const MINUTE_FORMAT: &str = "%Y-%m-%dT%H:%M";
const SECOND_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

fn parse_datetime(field: &'static str, value: &str) -> Result<NaiveDateTime, ParseErrorKind> {
    NaiveDateTime::parse_from_str(value, MINUTE_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(value, SECOND_FORMAT))
        .map_err(|_| ParseErrorKind::BadDatetime {
            field,
            value: value.to_string(),
        })
}

/// Parses one log line into a [`SearchRecord`].
pub fn parse_record(line: &str) -> Result<SearchRecord, ParseErrorKind> {
    let mut cols = line.split(',');
    let search = cols.next().unwrap_or("");
    let (Some(dep), Some(arr), Some(spec)) = (cols.next(), cols.next(), cols.next()) else {
        return Err(ParseErrorKind::WrongColumnCount(
            line.split(',').count().min(3),
        ));
    };
    let extra = cols.count();
    if extra > 0 {
        return Err(ParseErrorKind::WrongColumnCount(4 + extra));
    }
    if search.is_empty() {
        return Err(ParseErrorKind::EmptyField("search_time"));
    }
    if dep.is_empty() {
        return Err(ParseErrorKind::EmptyField("departure_ic"));
    }
    if arr.is_empty() {
        return Err(ParseErrorKind::EmptyField("arrival_ic"));
    }
    let search_time = parse_datetime("search_time", search)?;
    let specified_time = if spec.is_empty() {
        None
    } else {
        Some(parse_datetime("specified_time", spec)?)
    };
    Ok(SearchRecord::new(search_time, dep, arr, specified_time))
}

/// Serializes a record back to its normalized log line (no trailing newline).
pub fn to_log_line(record: &SearchRecord) -> String {
    let spec = record
        .specified_time
        .map(|t| t.format(MINUTE_FORMAT).to_string())
        .unwrap_or_default();
    format!(
        "{},{},{},{}",
        record.search_time.format(MINUTE_FORMAT),
        record.departure_ic_id,
        record.arrival_ic_id,
        spec
    )
}

/// The log CSV header line, written and recognized by [`LogReader`].
pub const LOG_HEADER: &str = "search_time,departure_ic,arrival_ic,specified_time";

/// Iterator over the records of a log stream.
///
/// Yields one `Result` per non-empty line so the caller can choose between
/// aborting on the first [`ParseError`] and skip-and-count. Lines are counted
/// from 1, including a skipped header.
pub struct LogReader<R: BufRead> {
    lines: std::io::Lines<R>,
    line_no: u64,
    skip_header: bool,
}

impl<R: BufRead> LogReader<R> {
    pub fn new(reader: R, has_header: bool) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            skip_header: has_header,
        }
    }

    /// 1-based number of the last line yielded.
    pub fn line_number(&self) -> u64 {
        self.line_no
    }
}

impl<R: BufRead> Iterator for LogReader<R> {
    type Item = Result<SearchRecord, LogIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(LogIoError::Io(e))),
            };
            self.line_no += 1;
            let line = line.strip_suffix('\r').unwrap_or(&line).to_string();
            if self.line_no == 1 && self.skip_header {
                continue;
            }
            if line.is_empty() {
                continue;
            }
            return Some(match parse_record(&line) {
                Ok(r) => Ok(r),
                Err(kind) => Err(LogIoError::Parse(ParseError {
                    line: self.line_no,
                    kind,
                })),
            });
        }
    }
}

/// Either an I/O failure or a malformed line while reading a log stream.
#[derive(Debug, Error)]
pub enum LogIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn dt(y: i32, mo: u32, d: u32, h: u32, mi: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, mo, d)
            .unwrap()
            .and_hms_opt(h, mi, 0)
            .unwrap()
    }

    #[test]
    fn parses_specified_record() {
        let r = parse_record("2023-04-20T09:15,IC001,IC002,2023-04-29T08:00").unwrap();
        assert_eq!(r.search_time, dt(2023, 4, 20, 9, 15));
        assert_eq!(r.departure_ic_id, "IC001");
        assert_eq!(r.arrival_ic_id, "IC002");
        assert_eq!(r.specified_time, Some(dt(2023, 4, 29, 8, 0)));
    }

    #[test]
    fn parses_empty_specified_column() {
        let r = parse_record("2023-04-20T09:15,IC001,IC002,").unwrap();
        assert_eq!(r.specified_time, None);
    }

    #[test]
    fn rejects_empty_departure() {
        assert_eq!(
            parse_record("2023-04-20T09:15,,IC002,").unwrap_err(),
            ParseErrorKind::EmptyField("departure_ic")
        );
    }

    #[test]
    fn rejects_wrong_column_count() {
        assert!(matches!(
            parse_record("2023-04-20T09:15,IC001,IC002").unwrap_err(),
            ParseErrorKind::WrongColumnCount(_)
        ));
        assert!(matches!(
            parse_record("2023-04-20T09:15,IC001,IC002,,extra").unwrap_err(),
            ParseErrorKind::WrongColumnCount(5)
        ));
    }

    #[test]
    fn rejects_malformed_datetime() {
        assert!(matches!(
            parse_record("2023-13-20T09:15,IC001,IC002,").unwrap_err(),
            ParseErrorKind::BadDatetime {
                field: "search_time",
                ..
            }
        ));
        assert!(matches!(
            parse_record("2023-04-20T09:15,IC001,IC002,someday").unwrap_err(),
            ParseErrorKind::BadDatetime {
                field: "specified_time",
                ..
            }
        ));
    }

    #[test]
    fn seconds_accepted_and_truncated() {
        let r = parse_record("2023-04-20T09:15:42,IC001,IC002,2023-04-21T08:00:01").unwrap();
        assert_eq!(r.search_time, dt(2023, 4, 20, 9, 15));
        assert_eq!(r.specified_time, Some(dt(2023, 4, 21, 8, 0)));
    }

    #[test]
    fn normalized_roundtrip() {
        for line in [
            "2023-04-20T09:15,IC001,IC002,2023-04-29T08:00",
            "2023-04-20T09:15,IC001,IC002,",
        ] {
            let r = parse_record(line).unwrap();
            assert_eq!(to_log_line(&r), line);
        }
        // Seconds normalize away.
        let r = parse_record("2023-04-20T09:15:42,IC001,IC002,").unwrap();
        assert_eq!(to_log_line(&r), "2023-04-20T09:15,IC001,IC002,");
    }

    #[test]
    fn reader_counts_lines_and_skips_header() {
        let data = format!("{LOG_HEADER}\n2023-04-20T09:15,A,B,\n\nbadline\n");
        let mut rdr = LogReader::new(data.as_bytes(), true);
        let first = rdr.next().unwrap().unwrap();
        assert_eq!(first.departure_ic_id, "A");
        let err = rdr.next().unwrap().unwrap_err();
        match err {
            LogIoError::Parse(p) => assert_eq!(p.line, 4),
            other => panic!("unexpected: {other}"),
        }
        assert!(rdr.next().is_none());
    }

    #[test]
    fn reader_handles_crlf() {
        let data = "2023-04-20T09:15,A,B,\r\n2023-04-21T10:00,C,D,\r\n";
        let recs: Vec<_> = LogReader::new(data.as_bytes(), false)
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].arrival_ic_id, "D");
    }
}
