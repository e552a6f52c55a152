//! Build, store and query origin x destination x day search-count tensors
//! from expressway route-search logs.
//!
//! Route-search services log which interchange pair a user asked about and
//! for when. Folding those logs into one sparse 3D count tensor per calendar
//! year and time category (searches with a future specified time vs.
//! everything else) turns gigabytes of text into megabytes of counts that
//! answer spatiotemporal questions directly: total searches toward a
//! destination, day-range slices, top origins for a destination, seasonal
//! demand curves.
//!
//! The pipeline:
//!
//! 1. [`ingest`] parses log lines into [`model::SearchRecord`]s.
//! 2. [`model::ICRegistry`] assigns each interchange a deterministic index.
//! 3. [`tensor`] folds records into per-day sparse count slabs.
//! 4. [`format`] persists tensors in a compact checksummed binary file.
//! 5. [`query`] and [`trend`] answer read-only statistical questions.
//! 6. [`synth`] generates seeded synthetic corpora with planted seasonal
//!    structure and known ground truth.
//!
//! Runnable examples, one per capability (`cargo run -p od3d --example ...`):
//!
//! - `generate_corpus` — write a synthetic registry + search log to disk
//! - `build_tensors` — parse a log and build both category tensors
//! - `query_basics` — aggregate, slice and rank origins
//! - `destination_series` — per-day counts toward selected destinations
//! - `season_trends` — seasonal windows, peak days, year-over-year growth
//! - `inspect_file` — tensor file internals and integrity checking
//!
//! The same operations are scriptable through the thin `od3d` binary
//! (`gen`, `build`, `query`, `trend`, `info`).

pub mod calendar;
pub mod format;
pub mod ingest;
pub mod model;
pub mod query;
pub mod synth;
pub mod tensor;
pub mod trend;

pub use calendar::{day_index, days_in_year, DayRange, MonthDay};
pub use model::{ICRegistry, InterchangeRecord, SearchRecord, TimeCategory};
pub use tensor::{build_both, build_od_tensor, merge, IngestStats, ODTensor, UnknownIcPolicy};

use thiserror::Error;

/// Umbrella error for pipelines that cross module boundaries.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Parse(#[from] ingest::ParseError),
    #[error(transparent)]
    Log(#[from] ingest::LogIoError),
    #[error(transparent)]
    Calendar(#[from] calendar::CalendarError),
    #[error(transparent)]
    Tensor(#[from] tensor::TensorError),
    #[error(transparent)]
    Format(#[from] format::FormatError),
    #[error(transparent)]
    Query(#[from] query::QueryError),
    #[error(transparent)]
    Trend(#[from] trend::TrendError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
