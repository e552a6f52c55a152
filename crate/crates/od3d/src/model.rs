//! Domain types: interchange registry, search records and their
//! specified/unspecified classification.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::{NaiveDateTime, Timelike};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate interchange id '{0}'")]
    DuplicateIc(String),
    #[error("interchange id must not be empty")]
    EmptyIcId,
    #[error("interchange '{ic_id}' has coordinates out of range: lon {longitude}, lat {latitude}")]
    InvalidCoordinates {
        ic_id: String,
        longitude: f64,
        latitude: f64,
    },
    #[error("registry csv line {line}: {reason}")]
    RegistryCsv { line: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One expressway interchange: the nodes between which routes are searched.
#[derive(Debug, Clone, PartialEq)]
pub struct InterchangeRecord {
    pub ic_id: String,
    pub name: String,
    pub longitude: f64,
    pub latitude: f64,
}

impl InterchangeRecord {
    pub fn new(
        ic_id: impl Into<String>,
        name: impl Into<String>,
        longitude: f64,
        latitude: f64,
    ) -> Result<Self, ModelError> {
        let rec = Self {
            ic_id: ic_id.into(),
            name: name.into(),
            longitude,
            latitude,
        };
        rec.validate()?;
        Ok(rec)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.ic_id.is_empty() {
            return Err(ModelError::EmptyIcId);
        }
        let lon_ok = (-180.0..=180.0).contains(&self.longitude);
        let lat_ok = (-90.0..=90.0).contains(&self.latitude);
        if !lon_ok || !lat_ok {
            return Err(ModelError::InvalidCoordinates {
                ic_id: self.ic_id.clone(),
                longitude: self.longitude,
                latitude: self.latitude,
            });
        }
        Ok(())
    }
}

/// The interchange universe with deterministic integer index assignment.
///
/// Indices are `0..N-1` in ascending `(longitude, latitude, ic_id)` order,
/// so any permutation of the same entries produces identical indices.
#[derive(Debug, Clone)]
pub struct ICRegistry {
    entries: Vec<InterchangeRecord>,
    index_of: HashMap<String, u32>,
}

impl ICRegistry {
    pub fn build(mut entries: Vec<InterchangeRecord>) -> Result<Self, ModelError> {
        for e in &entries {
            e.validate()?;
        }
        // Coordinates are validated finite, so total_cmp matches numeric order.
        entries.sort_by(|a, b| {
            a.longitude
                .total_cmp(&b.longitude)
                .then(a.latitude.total_cmp(&b.latitude))
                .then_with(|| a.ic_id.cmp(&b.ic_id))
        });
        let mut index_of = HashMap::with_capacity(entries.len());
        for (k, e) in entries.iter().enumerate() {
            if index_of.insert(e.ic_id.clone(), k as u32).is_some() {
                return Err(ModelError::DuplicateIc(e.ic_id.clone()));
            }
        }
        Ok(Self { entries, index_of })
    }

    pub fn len(&self) -> u32 {
        self.entries.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index assigned to `ic_id`, if present.
    pub fn index(&self, ic_id: &str) -> Option<u32> {
        self.index_of.get(ic_id).copied()
    }

    /// The interchange at index `idx`.
    pub fn get(&self, idx: u32) -> Option<&InterchangeRecord> {
        self.entries.get(idx as usize)
    }

    pub fn entries(&self) -> &[InterchangeRecord] {
        &self.entries
    }
}

/// Builds a registry from unordered entries. See [`ICRegistry::build`].
pub fn build_registry(entries: Vec<InterchangeRecord>) -> Result<ICRegistry, ModelError> {
    ICRegistry::build(entries)
}

/// Reads a registry CSV (`ic_id,name,longitude,latitude`); a header row is
/// detected and skipped.
pub fn read_registry_csv<R: Read>(reader: R) -> Result<Vec<InterchangeRecord>, ModelError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let line = k as u64 + 1;
        let row = row.map_err(|e| ModelError::RegistryCsv {
            line,
            reason: e.to_string(),
        })?;
        if line == 1 && row.get(0) == Some("ic_id") {
            continue;
        }
        if row.len() != 4 {
            return Err(ModelError::RegistryCsv {
                line,
                reason: format!("expected 4 columns, found {}", row.len()),
            });
        }
        let lon: f64 = row[2].trim().parse().map_err(|_| ModelError::RegistryCsv {
            line,
            reason: format!("bad longitude '{}'", &row[2]),
        })?;
        let lat: f64 = row[3].trim().parse().map_err(|_| ModelError::RegistryCsv {
            line,
            reason: format!("bad latitude '{}'", &row[3]),
        })?;
        out.push(InterchangeRecord::new(&row[0], &row[1], lon, lat)?);
    }
    Ok(out)
}

/// Writes a registry CSV with a header row.
pub fn write_registry_csv<W: Write>(
    entries: &[InterchangeRecord],
    writer: W,
) -> Result<(), ModelError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["ic_id", "name", "longitude", "latitude"])
        .map_err(csv_io)?;
    for e in entries {
        wtr.write_record([
            e.ic_id.as_str(),
            e.name.as_str(),
            &format!("{}", e.longitude),
            &format!("{}", e.latitude),
        ])
        .map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> ModelError {
    ModelError::Io(std::io::Error::other(e))
}

/// Whether a search carried a usable future specified time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeCategory {
    Unspecified,
    Specified,
}

impl TimeCategory {
    /// Stable on-disk code: 0 = unspecified, 1 = specified.
    pub fn code(self) -> u16 {
        match self {
            TimeCategory::Unspecified => 0,
            TimeCategory::Specified => 1,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        match code {
            0 => Some(TimeCategory::Unspecified),
            1 => Some(TimeCategory::Specified),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeCategory::Unspecified => "unspecified",
            TimeCategory::Specified => "specified",
        }
    }
}

impl std::fmt::Display for TimeCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One parsed route-search log entry.
///
/// Timestamps are naive local datetimes at minute precision; seconds are
/// truncated on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchRecord {
    pub search_time: NaiveDateTime,
    pub departure_ic_id: String,
    pub arrival_ic_id: String,
    pub specified_time: Option<NaiveDateTime>,
}

impl SearchRecord {
    pub fn new(
        search_time: NaiveDateTime,
        departure_ic_id: impl Into<String>,
        arrival_ic_id: impl Into<String>,
        specified_time: Option<NaiveDateTime>,
    ) -> Self {
        Self {
            search_time: truncate_to_minute(search_time),
            departure_ic_id: departure_ic_id.into(),
            arrival_ic_id: arrival_ic_id.into(),
            specified_time: specified_time.map(truncate_to_minute),
        }
    }

    /// A search is specified-time only when the specified time is present
    /// and strictly later than the search time. An absent, equal (the
    /// default-fill case) or past specified time is unspecified.
    pub fn classify(&self) -> TimeCategory {
        match self.specified_time {
            Some(spec) if spec > self.search_time => TimeCategory::Specified,
            _ => TimeCategory::Unspecified,
        }
    }

    /// The timestamp that places this record on the time axis: the specified
    /// time for specified-time records, the search time otherwise.
    pub fn effective_timestamp(&self) -> NaiveDateTime {
        match self.classify() {
            TimeCategory::Specified => self.specified_time.expect("specified implies present"),
            TimeCategory::Unspecified => self.search_time,
        }
    }
}

fn truncate_to_minute(ts: NaiveDateTime) -> NaiveDateTime {
    ts.with_second(0)
        .and_then(|t| t.with_nanosecond(0))
        .expect("second/nanosecond 0 is always valid")
}
