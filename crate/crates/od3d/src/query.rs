//! Read-only spatiotemporal queries over [`ODTensor`]s.
//!
//! Interchanges are addressed by `ic_id` at the boundary and resolved to
//! indices internally, so saved tensors stay valid when display names
//! change. All operations are pure; results serialize to plain CSV.

use std::io::Write;

use thiserror::Error;

use crate::calendar::{date_of_day, DayRange};
use crate::model::{ICRegistry, TimeCategory};
use crate::tensor::ODTensor;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("day range [{start}, {end}) invalid for a {n_days}-day tensor")]
    InvalidRange { start: u32, end: u32, n_days: u32 },
    #[error("unknown interchange id '{0}'")]
    UnknownIc(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn check_range(tensor: &ODTensor, range: DayRange) -> Result<(), QueryError> {
    if range.end() > tensor.n_days() {
        return Err(QueryError::InvalidRange {
            start: range.start(),
            end: range.end(),
            n_days: tensor.n_days(),
        });
    }
    Ok(())
}

/// A 2D OD matrix summed over a day range, with provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ODMatrix {
    n_ics: u32,
    values: Vec<u64>,
    year: i32,
    category: TimeCategory,
    day_range: DayRange,
}

impl ODMatrix {
    pub fn n_ics(&self) -> u32 {
        self.n_ics
    }

    pub fn get(&self, origin: u32, dest: u32) -> u64 {
        self.values[origin as usize * self.n_ics as usize + dest as usize]
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn category(&self) -> TimeCategory {
        self.category
    }

    pub fn day_range(&self) -> DayRange {
        self.day_range
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    /// Nonzero entries as `(origin, dest, count)` in `(i, j)` order.
    pub fn nonzero(&self) -> impl Iterator<Item = (u32, u32, u64)> + '_ {
        let n = self.n_ics;
        self.values.iter().enumerate().filter_map(move |(k, &v)| {
            (v > 0).then(|| (k as u32 / n, k as u32 % n, v))
        })
    }

    /// Sparse CSV form: `i,j,count` for nonzero cells.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), QueryError> {
        writeln!(w, "i,j,count")?;
        for (i, j, v) in self.nonzero() {
            writeln!(w, "{i},{j},{v}")?;
        }
        Ok(())
    }
}

/// A day-indexed count vector for one year, the unit of trend analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaySeries {
    year: i32,
    range: DayRange,
    values: Vec<u64>,
    label: String,
}

impl DaySeries {
    pub fn new(year: i32, range: DayRange, values: Vec<u64>, label: impl Into<String>) -> Self {
        assert_eq!(values.len() as u32, range.len(), "series length mismatch");
        Self {
            year,
            range,
            values,
            label: label.into(),
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn range(&self) -> DayRange {
        self.range
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    /// `(absolute day index, count)` pairs in day order.
    pub fn days(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.range.iter().zip(self.values.iter().copied())
    }

    /// CSV form: `day_index,date,count`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), QueryError> {
        writeln!(w, "day_index,date,count")?;
        for (t, v) in self.days() {
            let date = date_of_day(self.year, t).expect("day in range");
            writeln!(w, "{t},{date},{v}")?;
        }
        Ok(())
    }
}

/// Sums across the origin axis: total searches toward each destination
/// over the day range. `result[j] == sum_i sum_t S[i][j][t]`.
pub fn aggregate_over_origin(
    tensor: &ODTensor,
    range: DayRange,
) -> Result<Vec<u64>, QueryError> {
    check_range(tensor, range)?;
    let mut out = vec![0u64; tensor.n_ics() as usize];
    for t in range.iter() {
        for c in tensor.day_cells(t) {
            out[c.dest as usize] += u64::from(c.count);
        }
    }
    Ok(out)
}

/// Collapses a day range into a single OD matrix.
pub fn slice_time(tensor: &ODTensor, range: DayRange) -> Result<ODMatrix, QueryError> {
    check_range(tensor, range)?;
    let n = tensor.n_ics() as usize;
    let mut values = vec![0u64; n * n];
    for t in range.iter() {
        for c in tensor.day_cells(t) {
            values[c.origin as usize * n + c.dest as usize] += u64::from(c.count);
        }
    }
    Ok(ODMatrix {
        n_ics: tensor.n_ics(),
        values,
        year: tensor.year(),
        category: tensor.category(),
        day_range: range,
    })
}

fn resolve_dests(registry: &ICRegistry, dest_ids: &[String]) -> Result<Vec<u32>, QueryError> {
    dest_ids
        .iter()
        .map(|id| {
            registry
                .index(id)
                .ok_or_else(|| QueryError::UnknownIc(id.clone()))
        })
        .collect()
}

/// Per-day total searches from any origin toward a destination set.
pub fn destination_series(
    tensor: &ODTensor,
    dest_ids: &[String],
    range: DayRange,
    registry: &ICRegistry,
) -> Result<DaySeries, QueryError> {
    check_range(tensor, range)?;
    let dests = resolve_dests(registry, dest_ids)?;
    let mut is_dest = vec![false; tensor.n_ics() as usize];
    for &j in &dests {
        is_dest[j as usize] = true;
    }
    let mut values = Vec::with_capacity(range.len() as usize);
    for t in range.iter() {
        let day_total: u64 = tensor
            .day_cells(t)
            .iter()
            .filter(|c| is_dest[c.dest as usize])
            .map(|c| u64::from(c.count))
            .sum();
        values.push(day_total);
    }
    let label = format!(
        "{} {} to {}",
        tensor.year(),
        tensor.category(),
        dest_ids.join("+")
    );
    Ok(DaySeries::new(tensor.year(), range, values, label))
}

/// One ranked origin for a destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedOrigin {
    pub ic_id: String,
    pub origin: u32,
    pub count: u64,
}

/// Origins ranked by summed search count toward `dest_id` over the range.
///
/// Descending by count, ties broken by ascending origin index; zero-count
/// origins are omitted; at most `k` entries.
pub fn top_k_origins(
    tensor: &ODTensor,
    dest_id: &str,
    range: DayRange,
    k: usize,
    registry: &ICRegistry,
) -> Result<Vec<RankedOrigin>, QueryError> {
    check_range(tensor, range)?;
    if k == 0 {
        return Err(QueryError::ZeroK);
    }
    let dest = registry
        .index(dest_id)
        .ok_or_else(|| QueryError::UnknownIc(dest_id.to_string()))?;
    let mut per_origin = vec![0u64; tensor.n_ics() as usize];
    for t in range.iter() {
        for c in tensor.day_cells(t) {
            if c.dest == dest {
                per_origin[c.origin as usize] += u64::from(c.count);
            }
        }
    }
    let mut ranked: Vec<RankedOrigin> = per_origin
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v > 0)
        .map(|(i, &v)| RankedOrigin {
            ic_id: registry.get(i as u32).expect("index in registry").ic_id.clone(),
            origin: i as u32,
            count: v,
        })
        .collect();
    ranked.sort_by(|a, b| b.count.cmp(&a.count).then(a.origin.cmp(&b.origin)));
    ranked.truncate(k);
    Ok(ranked)
}

/// CSV form of a top-k ranking: `rank,origin_ic,count`.
pub fn write_top_k_csv<W: Write>(entries: &[RankedOrigin], mut w: W) -> Result<(), QueryError> {
    writeln!(w, "rank,origin_ic,count")?;
    for (k, e) in entries.iter().enumerate() {
        writeln!(w, "{},{},{}", k + 1, e.ic_id, e.count)?;
    }
    Ok(())
}

/// CSV form of per-destination totals: `dest_index,count`.
pub fn write_destination_totals_csv<W: Write>(
    totals: &[u64],
    mut w: W,
) -> Result<(), QueryError> {
    writeln!(w, "dest_index,count")?;
    for (j, v) in totals.iter().enumerate() {
        writeln!(w, "{j},{v}")?;
    }
    Ok(())
}
