//! Per-year, per-category origin x destination x day count tensors.
//!
//! A tensor holds one sparse day slab per calendar day: a coordinate list of
//! `(origin, dest, count)` sorted by `(origin, dest)`. Dense storage at the
//! real network's scale (2728 x 2728 x 365 cells) would run to ~11 GB, far
//! beyond the information content of the counts, so slabs stay sparse and a
//! single day can be materialized densely on demand.

use std::collections::HashMap;

use thiserror::Error;

use crate::calendar::{day_index, days_in_year};
use crate::model::{ICRegistry, SearchRecord, TimeCategory};

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("unknown interchange id '{ic_id}' at record {record}")]
    UnknownIc { ic_id: String, record: u64 },
    #[error("count overflow at origin {origin}, dest {dest}, day {day}")]
    CountOverflow { origin: u32, dest: u32, day: u32 },
    #[error("cell (origin {origin}, dest {dest}, day {day}) outside tensor bounds")]
    OutOfBounds { origin: u32, dest: u32, day: u32 },
    #[error("cannot merge tensors: {field} differs")]
    MergeMismatch { field: &'static str },
}

/// One nonzero tensor cell within a day slab.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub origin: u32,
    pub dest: u32,
    pub count: u32,
}

/// A per-year, per-category 3D search-count tensor.
///
/// Immutable once built; all accessors are read-only and safe to share
/// across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ODTensor {
    year: i32,
    category: TimeCategory,
    n_ics: u32,
    days: Vec<Vec<Cell>>,
}

impl ODTensor {
    /// An all-zero tensor for `year`.
    pub fn zero(year: i32, category: TimeCategory, n_ics: u32) -> Self {
        Self {
            year,
            category,
            n_ics,
            days: vec![Vec::new(); days_in_year(year) as usize],
        }
    }

    /// Internal constructor for slabs already sorted and validated.
    pub(crate) fn from_slabs(
        year: i32,
        category: TimeCategory,
        n_ics: u32,
        days: Vec<Vec<Cell>>,
    ) -> Self {
        debug_assert_eq!(days.len(), days_in_year(year) as usize);
        Self {
            year,
            category,
            n_ics,
            days,
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn category(&self) -> TimeCategory {
        self.category
    }

    pub fn n_ics(&self) -> u32 {
        self.n_ics
    }

    pub fn n_days(&self) -> u32 {
        self.days.len() as u32
    }

    /// The sparse slab for day `t`, sorted by `(origin, dest)`.
    pub fn day_cells(&self, t: u32) -> &[Cell] {
        &self.days[t as usize]
    }

    /// Count stored at `(origin, dest, day)`; zero for absent cells.
    pub fn get(&self, origin: u32, dest: u32, day: u32) -> u32 {
        let Some(slab) = self.days.get(day as usize) else {
            return 0;
        };
        slab.binary_search_by_key(&(origin, dest), |c| (c.origin, c.dest))
            .map(|k| slab[k].count)
            .unwrap_or(0)
    }

    /// Sum of every cell; equals the number of records folded in.
    pub fn total(&self) -> u64 {
        self.days
            .iter()
            .flatten()
            .map(|c| u64::from(c.count))
            .sum()
    }

    /// Number of nonzero cells across all days.
    pub fn nonzero_cells(&self) -> u64 {
        self.days.iter().map(|s| s.len() as u64).sum()
    }

    /// Fraction of all `(origin, dest, day)` cells that are nonzero.
    pub fn density(&self) -> f64 {
        let total_cells = self.n_ics as f64 * self.n_ics as f64 * self.n_days() as f64;
        if total_cells == 0.0 {
            0.0
        } else {
            self.nonzero_cells() as f64 / total_cells
        }
    }

    /// All nonzero cells as `(day, cell)` in day-major, coordinate order.
    pub fn iter_cells(&self) -> impl Iterator<Item = (u32, Cell)> + '_ {
        self.days
            .iter()
            .enumerate()
            .flat_map(|(t, slab)| slab.iter().map(move |c| (t as u32, *c)))
    }

    /// Dense row-major `n_ics x n_ics` matrix for a single day.
    pub fn dense_day(&self, t: u32) -> Vec<u32> {
        let n = self.n_ics as usize;
        let mut out = vec![0u32; n * n];
        for c in self.day_cells(t) {
            out[c.origin as usize * n + c.dest as usize] = c.count;
        }
        out
    }
}

/// Accumulates `(origin, dest, day)` increments into an [`ODTensor`].
pub struct ODTensorBuilder {
    year: i32,
    category: TimeCategory,
    n_ics: u32,
    days: Vec<HashMap<(u32, u32), u32>>,
}

impl ODTensorBuilder {
    pub fn new(year: i32, category: TimeCategory, n_ics: u32) -> Self {
        Self {
            year,
            category,
            n_ics,
            days: vec![HashMap::new(); days_in_year(year) as usize],
        }
    }

    /// Increments a cell by one.
    pub fn record(&mut self, origin: u32, dest: u32, day: u32) -> Result<(), TensorError> {
        self.add(origin, dest, day, 1)
    }

    /// Adds `count` to a cell, detecting 32-bit overflow.
    pub fn add(&mut self, origin: u32, dest: u32, day: u32, count: u32) -> Result<(), TensorError> {
        if origin >= self.n_ics || dest >= self.n_ics || day as usize >= self.days.len() {
            return Err(TensorError::OutOfBounds { origin, dest, day });
        }
        let cell = self.days[day as usize].entry((origin, dest)).or_insert(0);
        *cell = cell
            .checked_add(count)
            .ok_or(TensorError::CountOverflow { origin, dest, day })?;
        Ok(())
    }

    /// Freezes the accumulated counts into canonical sorted-slab form, so the
    /// result is independent of insertion order.
    pub fn finish(self) -> ODTensor {
        let days = self
            .days
            .into_iter()
            .map(|m| {
                let mut slab: Vec<Cell> = m
                    .into_iter()
                    .filter(|&(_, count)| count > 0)
                    .map(|((origin, dest), count)| Cell {
                        origin,
                        dest,
                        count,
                    })
                    .collect();
                slab.sort_unstable_by_key(|c| (c.origin, c.dest));
                slab
            })
            .collect();
        ODTensor::from_slabs(self.year, self.category, self.n_ics, days)
    }
}

/// How records referencing interchanges absent from the registry are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownIcPolicy {
    /// Fail on the first unknown id (the default).
    #[default]
    Error,
    /// Exclude the record and count it in the stats.
    Skip,
}

/// Accounting for one single-category build pass.
///
/// Each record lands in exactly one bucket, tested in this order: unknown
/// interchange, other category, out of year, accepted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub records_read: u64,
    pub accepted: u64,
    pub other_category: u64,
    pub out_of_year: u64,
    pub unknown_ic: u64,
}

impl IngestStats {
    /// Exact conservation: read == accepted + excluded buckets.
    pub fn reconciles(&self) -> bool {
        self.records_read == self.accepted + self.other_category + self.out_of_year + self.unknown_ic
    }
}

impl std::fmt::Display for IngestStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "read {} accepted {} other-category {} out-of-year {} unknown-ic {}",
            self.records_read, self.accepted, self.other_category, self.out_of_year, self.unknown_ic
        )
    }
}

/// Accounting for a single-pass build of both category tensors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub records_read: u64,
    pub unknown_ic: u64,
    pub specified_in_year: u64,
    pub specified_out_of_year: u64,
    pub unspecified_in_year: u64,
    pub unspecified_out_of_year: u64,
}

impl BuildReport {
    /// The per-tensor view of this report for one category.
    pub fn stats_for(&self, category: TimeCategory) -> IngestStats {
        let (own_in, own_out, other_in, other_out) = match category {
            TimeCategory::Specified => (
                self.specified_in_year,
                self.specified_out_of_year,
                self.unspecified_in_year,
                self.unspecified_out_of_year,
            ),
            TimeCategory::Unspecified => (
                self.unspecified_in_year,
                self.unspecified_out_of_year,
                self.specified_in_year,
                self.specified_out_of_year,
            ),
        };
        IngestStats {
            records_read: self.records_read,
            accepted: own_in,
            other_category: other_in + other_out,
            out_of_year: own_out,
            unknown_ic: self.unknown_ic,
        }
    }

    pub fn reconciles(&self) -> bool {
        self.records_read
            == self.unknown_ic
                + self.specified_in_year
                + self.specified_out_of_year
                + self.unspecified_in_year
                + self.unspecified_out_of_year
    }
}

impl std::fmt::Display for BuildReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "records read: {}", self.records_read)?;
        writeln!(f, "accepted specified: {}", self.specified_in_year)?;
        writeln!(f, "accepted unspecified: {}", self.unspecified_in_year)?;
        writeln!(
            f,
            "out of year: {}",
            self.specified_out_of_year + self.unspecified_out_of_year
        )?;
        write!(f, "skipped unknown ic: {}", self.unknown_ic)
    }
}

fn resolve_indices(
    record: &SearchRecord,
    registry: &ICRegistry,
    ordinal: u64,
    policy: UnknownIcPolicy,
) -> Result<Option<(u32, u32)>, TensorError> {
    let pair = (
        registry.index(&record.departure_ic_id),
        registry.index(&record.arrival_ic_id),
    );
    match pair {
        (Some(i), Some(j)) => Ok(Some((i, j))),
        (None, _) | (_, None) => match policy {
            UnknownIcPolicy::Skip => Ok(None),
            UnknownIcPolicy::Error => {
                let missing = if registry.index(&record.departure_ic_id).is_none() {
                    &record.departure_ic_id
                } else {
                    &record.arrival_ic_id
                };
                Err(TensorError::UnknownIc {
                    ic_id: missing.clone(),
                    record: ordinal,
                })
            }
        },
    }
}

/// Folds records of one category and year into a tensor.
///
/// Each record whose classification matches `category` and whose effective
/// timestamp falls in `year` increments exactly one cell; everything else is
/// counted in the returned [`IngestStats`]. The result does not depend on
/// record order.
pub fn build_od_tensor<I>(
    records: I,
    registry: &ICRegistry,
    year: i32,
    category: TimeCategory,
    policy: UnknownIcPolicy,
) -> Result<(ODTensor, IngestStats), TensorError>
where
    I: IntoIterator<Item = SearchRecord>,
{
    let mut builder = ODTensorBuilder::new(year, category, registry.len());
    let mut stats = IngestStats::default();
    for record in records {
        stats.records_read += 1;
        let Some((i, j)) = resolve_indices(&record, registry, stats.records_read, policy)? else {
            stats.unknown_ic += 1;
            continue;
        };
        if record.classify() != category {
            stats.other_category += 1;
            continue;
        }
        match day_index(record.effective_timestamp(), year) {
            Some(t) => {
                builder.record(i, j, t)?;
                stats.accepted += 1;
            }
            None => stats.out_of_year += 1,
        }
    }
    Ok((builder.finish(), stats))
}

/// Single-pass build of both category tensors for one year, mirroring the
/// specified/unspecified split while scanning the log only once.
///
/// Returns `(unspecified, specified, report)`.
pub fn build_both<I>(
    records: I,
    registry: &ICRegistry,
    year: i32,
    policy: UnknownIcPolicy,
) -> Result<(ODTensor, ODTensor, BuildReport), TensorError>
where
    I: IntoIterator<Item = SearchRecord>,
{
    let n = registry.len();
    let mut unspec = ODTensorBuilder::new(year, TimeCategory::Unspecified, n);
    let mut spec = ODTensorBuilder::new(year, TimeCategory::Specified, n);
    let mut report = BuildReport::default();
    for record in records {
        report.records_read += 1;
        let Some((i, j)) = resolve_indices(&record, registry, report.records_read, policy)? else {
            report.unknown_ic += 1;
            continue;
        };
        let category = record.classify();
        let in_year = day_index(record.effective_timestamp(), year);
        match (category, in_year) {
            (TimeCategory::Specified, Some(t)) => {
                spec.record(i, j, t)?;
                report.specified_in_year += 1;
            }
            (TimeCategory::Specified, None) => report.specified_out_of_year += 1,
            (TimeCategory::Unspecified, Some(t)) => {
                unspec.record(i, j, t)?;
                report.unspecified_in_year += 1;
            }
            (TimeCategory::Unspecified, None) => report.unspecified_out_of_year += 1,
        }
    }
    Ok((unspec.finish(), spec.finish(), report))
}

/// Elementwise sum of two tensors with identical metadata.
///
/// Commutative and associative, so sharded builds can be merged in any
/// order and still equal the single-pass result.
pub fn merge(a: &ODTensor, b: &ODTensor) -> Result<ODTensor, TensorError> {
    if a.year != b.year {
        return Err(TensorError::MergeMismatch { field: "year" });
    }
    if a.category != b.category {
        return Err(TensorError::MergeMismatch { field: "category" });
    }
    if a.n_ics != b.n_ics {
        return Err(TensorError::MergeMismatch { field: "n_ics" });
    }
    let mut days = Vec::with_capacity(a.days.len());
    for (t, (sa, sb)) in a.days.iter().zip(&b.days).enumerate() {
        let mut slab = Vec::with_capacity(sa.len() + sb.len());
        let (mut ka, mut kb) = (0, 0);
        while ka < sa.len() && kb < sb.len() {
            let (ca, cb) = (sa[ka], sb[kb]);
            match (ca.origin, ca.dest).cmp(&(cb.origin, cb.dest)) {
                std::cmp::Ordering::Less => {
                    slab.push(ca);
                    ka += 1;
                }
                std::cmp::Ordering::Greater => {
                    slab.push(cb);
                    kb += 1;
                }
                std::cmp::Ordering::Equal => {
                    let count =
                        ca.count
                            .checked_add(cb.count)
                            .ok_or(TensorError::CountOverflow {
                                origin: ca.origin,
                                dest: ca.dest,
                                day: t as u32,
                            })?;
                    slab.push(Cell { count, ..ca });
                    ka += 1;
                    kb += 1;
                }
            }
        }
        slab.extend_from_slice(&sa[ka..]);
        slab.extend_from_slice(&sb[kb..]);
        days.push(slab);
    }
    Ok(ODTensor::from_slabs(a.year, a.category, a.n_ics, days))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InterchangeRecord;
    use chrono::{NaiveDate, NaiveDateTime};
    use proptest::prelude::*;

    fn dt(y: i32, mo: u32, d: u32, h: u32, mi: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, mo, d)
            .unwrap()
            .and_hms_opt(h, mi, 0)
            .unwrap()
    }

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

    fn rec(
        search: NaiveDateTime,
        dep: &str,
        arr: &str,
        spec: Option<NaiveDateTime>,
    ) -> SearchRecord {
        SearchRecord::new(search, dep, arr, spec)
    }

    /// Five hand-written records: two specified in 2023, one unspecified,
    /// one specified out of year, one equal-time (unspecified).
    fn five_records() -> Vec<SearchRecord> {
        vec![
            rec(
                dt(2023, 4, 20, 9, 15),
                "IC000",
                "IC001",
                Some(dt(2023, 4, 29, 8, 0)),
            ),
            rec(
                dt(2023, 6, 1, 7, 0),
                "IC002",
                "IC000",
                Some(dt(2023, 6, 3, 12, 30)),
            ),
            rec(dt(2023, 8, 15, 22, 45), "IC001", "IC001", None),
            rec(
                dt(2023, 12, 30, 10, 0),
                "IC000",
                "IC002",
                Some(dt(2024, 1, 2, 9, 0)),
            ),
            rec(
                dt(2023, 5, 5, 5, 5),
                "IC002",
                "IC001",
                Some(dt(2023, 5, 5, 5, 5)),
            ),
        ]
    }

    /// Independent oracle: brute-force triple-key counting with its own
    /// classification and day arithmetic.
    fn oracle_counts(
        records: &[SearchRecord],
        registry: &ICRegistry,
        year: i32,
        specified: bool,
    ) -> HashMap<(u32, u32, u32), u32> {
        let jan1 = NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
        let mut counts = HashMap::new();
        for r in records {
            let is_spec = matches!(r.specified_time, Some(s) if s > r.search_time);
            if is_spec != specified {
                continue;
            }
            let eff = if is_spec {
                r.specified_time.unwrap()
            } else {
                r.search_time
            };
            let delta = (eff.date() - jan1).num_days();
            if delta < 0 || delta >= i64::from(days_in_year(year)) {
                continue;
            }
            let (Some(i), Some(j)) = (
                registry.index(&r.departure_ic_id),
                registry.index(&r.arrival_ic_id),
            ) else {
                continue;
            };
            *counts.entry((i, j, delta as u32)).or_insert(0) += 1;
        }
        counts
    }

    fn assert_matches_oracle(tensor: &ODTensor, oracle: &HashMap<(u32, u32, u32), u32>) {
        let mut seen = 0u64;
        for (t, cell) in tensor.iter_cells() {
            assert_eq!(
                oracle.get(&(cell.origin, cell.dest, t)),
                Some(&cell.count),
                "cell ({}, {}, {t})",
                cell.origin,
                cell.dest,
            );
            seen += 1;
        }
        assert_eq!(seen, oracle.len() as u64);
    }

    #[test]
    fn empty_stream_builds_zero_tensor() {
        let reg = registry(3);
        let (t, stats) = build_od_tensor(
            Vec::new(),
            &reg,
            2023,
            TimeCategory::Specified,
            UnknownIcPolicy::Error,
        )
        .unwrap();
        assert_eq!(t.total(), 0);
        assert_eq!(t.n_days(), 365);
        assert_eq!(stats, IngestStats::default());
        assert_eq!(t, ODTensor::zero(2023, TimeCategory::Specified, 3));
    }

    #[test]
    fn five_record_fixture_matches_hand_count() {
        let reg = registry(3);
        let records = five_records();
        let (spec, stats) = build_od_tensor(
            records.clone(),
            &reg,
            2023,
            TimeCategory::Specified,
            UnknownIcPolicy::Error,
        )
        .unwrap();
        assert_eq!(spec.total(), 2);
        assert_eq!(stats.accepted, 2);
        assert_eq!(stats.other_category, 2);
        assert_eq!(stats.out_of_year, 1); // Jan 2 2024 specified time
        assert!(stats.reconciles());
        assert_matches_oracle(&spec, &oracle_counts(&records, &reg, 2023, true));

        let (unspec, ustats) = build_od_tensor(
            records.clone(),
            &reg,
            2023,
            TimeCategory::Unspecified,
            UnknownIcPolicy::Error,
        )
        .unwrap();
        assert_eq!(unspec.total(), 2);
        assert!(ustats.reconciles());
        assert_matches_oracle(&unspec, &oracle_counts(&records, &reg, 2023, false));
    }

    #[test]
    fn build_both_equals_two_single_passes() {
        let reg = registry(3);
        let records = five_records();
        let (unspec, spec, report) =
            build_both(records.clone(), &reg, 2023, UnknownIcPolicy::Error).unwrap();
        let (spec_single, _) = build_od_tensor(
            records.clone(),
            &reg,
            2023,
            TimeCategory::Specified,
            UnknownIcPolicy::Error,
        )
        .unwrap();
        let (unspec_single, _) = build_od_tensor(
            records,
            &reg,
            2023,
            TimeCategory::Unspecified,
            UnknownIcPolicy::Error,
        )
        .unwrap();
        assert_eq!(spec, spec_single);
        assert_eq!(unspec, unspec_single);
        assert!(report.reconciles());
        assert!(report.stats_for(TimeCategory::Specified).reconciles());
        assert!(report.stats_for(TimeCategory::Unspecified).reconciles());
        assert_eq!(report.stats_for(TimeCategory::Specified).accepted, 2);
        assert_eq!(report.stats_for(TimeCategory::Unspecified).accepted, 2);
    }

    #[test]
    fn self_loops_are_counted() {
        let reg = registry(2);
        let records = vec![rec(dt(2023, 1, 1, 0, 0), "IC000", "IC000", None)];
        let (t, _) = build_od_tensor(
            records,
            &reg,
            2023,
            TimeCategory::Unspecified,
            UnknownIcPolicy::Error,
        )
        .unwrap();
        assert_eq!(t.get(0, 0, 0), 1);
    }

    #[test]
    fn leap_year_dec_31_lands_on_day_365() {
        let reg = registry(2);
        let records = vec![rec(dt(2024, 12, 31, 23, 59), "IC000", "IC001", None)];
        let (t, _) = build_od_tensor(
            records,
            &reg,
            2024,
            TimeCategory::Unspecified,
            UnknownIcPolicy::Error,
        )
        .unwrap();
        assert_eq!(t.n_days(), 366);
        assert_eq!(t.get(0, 1, 365), 1);
    }

    #[test]
    fn unknown_ic_errors_by_default_and_skips_on_request() {
        let reg = registry(2);
        let records = vec![
            rec(dt(2023, 1, 1, 0, 0), "IC000", "IC001", None),
            rec(dt(2023, 1, 2, 0, 0), "IC000", "GONE", None),
        ];
        let err = build_od_tensor(
            records.clone(),
            &reg,
            2023,
            TimeCategory::Unspecified,
            UnknownIcPolicy::Error,
        )
        .unwrap_err();
        match err {
            TensorError::UnknownIc { ic_id, record } => {
                assert_eq!(ic_id, "GONE");
                assert_eq!(record, 2);
            }
            other => panic!("unexpected: {other}"),
        }
        let (t, stats) = build_od_tensor(
            records,
            &reg,
            2023,
            TimeCategory::Unspecified,
            UnknownIcPolicy::Skip,
        )
        .unwrap();
        assert_eq!(t.total(), 1);
        assert_eq!(stats.unknown_ic, 1);
        assert!(stats.reconciles());
    }

    #[test]
    fn overflow_is_detected() {
        let mut b = ODTensorBuilder::new(2023, TimeCategory::Specified, 2);
        b.add(0, 1, 10, u32::MAX).unwrap();
        assert!(matches!(
            b.record(0, 1, 10),
            Err(TensorError::CountOverflow { .. })
        ));
    }

    #[test]
    fn builder_rejects_out_of_bounds() {
        let mut b = ODTensorBuilder::new(2023, TimeCategory::Specified, 2);
        assert!(matches!(
            b.record(2, 0, 0),
            Err(TensorError::OutOfBounds { .. })
        ));
        assert!(matches!(
            b.record(0, 0, 365),
            Err(TensorError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn merge_with_zero_is_identity() {
        let reg = registry(3);
        let (t, _) = build_od_tensor(
            five_records(),
            &reg,
            2023,
            TimeCategory::Specified,
            UnknownIcPolicy::Error,
        )
        .unwrap();
        let z = ODTensor::zero(2023, TimeCategory::Specified, 3);
        assert_eq!(merge(&t, &z).unwrap(), t);
        assert_eq!(merge(&z, &t).unwrap(), t);
    }

    #[test]
    fn merge_rejects_mismatched_metadata() {
        let a = ODTensor::zero(2023, TimeCategory::Specified, 3);
        let b = ODTensor::zero(2024, TimeCategory::Specified, 3);
        assert!(matches!(
            merge(&a, &b),
            Err(TensorError::MergeMismatch { field: "year" })
        ));
        let c = ODTensor::zero(2023, TimeCategory::Unspecified, 3);
        assert!(merge(&a, &c).is_err());
        let d = ODTensor::zero(2023, TimeCategory::Specified, 4);
        assert!(merge(&a, &d).is_err());
    }

    #[test]
    fn dense_day_matches_sparse() {
        let reg = registry(3);
        let (t, _) = build_od_tensor(
            five_records(),
            &reg,
            2023,
            TimeCategory::Specified,
            UnknownIcPolicy::Error,
        )
        .unwrap();
        for day in 0..t.n_days() {
            let dense = t.dense_day(day);
            for i in 0..3u32 {
                for j in 0..3u32 {
                    assert_eq!(dense[(i * 3 + j) as usize], t.get(i, j, day));
                }
            }
        }
    }

    /// Strategy: a small batch of records over a 4-IC registry, spread around
    /// the 2023 year boundary so out-of-year paths get exercised.
    fn record_batch() -> impl Strategy<Value = Vec<SearchRecord>> {
        let one = (0u32..4, 0u32..4, 0i64..500, prop::option::of(-20i64..400))
            .prop_map(|(dep, arr, day_off, spec_off)| {
                let base = NaiveDate::from_ymd_opt(2022, 11, 1)
                    .unwrap()
                    .and_hms_opt(12, 0, 0)
                    .unwrap();
                let search = base + chrono::Duration::days(day_off);
                let spec = spec_off.map(|o| search + chrono::Duration::hours(o));
                rec(
                    search,
                    &format!("IC{dep:03}"),
                    &format!("IC{arr:03}"),
                    spec,
                )
            });
        prop::collection::vec(one, 0..120)
    }

    proptest! {
        #[test]
        fn order_independence(records in record_batch(), seed in 0u64..1000) {
            let reg = registry(4);
            let (a, _) = build_od_tensor(
                records.clone(), &reg, 2023, TimeCategory::Specified, UnknownIcPolicy::Error,
            ).unwrap();
            let mut shuffled = records;
            // Cheap deterministic shuffle.
            let n = shuffled.len();
            if n > 1 {
                for k in 0..n {
                    let other = (k as u64 * 31 + seed) as usize % n;
                    shuffled.swap(k, other);
                }
            }
            let (b, _) = build_od_tensor(
                shuffled, &reg, 2023, TimeCategory::Specified, UnknownIcPolicy::Error,
            ).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn shard_merge_equals_single_pass(records in record_batch(), split in 0usize..120) {
            let reg = registry(4);
            let split = split.min(records.len());
            let (whole, stats) = build_od_tensor(
                records.clone(), &reg, 2023, TimeCategory::Unspecified, UnknownIcPolicy::Error,
            ).unwrap();
            let (left, _) = build_od_tensor(
                records[..split].to_vec(), &reg, 2023, TimeCategory::Unspecified, UnknownIcPolicy::Error,
            ).unwrap();
            let (right, _) = build_od_tensor(
                records[split..].to_vec(), &reg, 2023, TimeCategory::Unspecified, UnknownIcPolicy::Error,
            ).unwrap();
            let merged = merge(&left, &right).unwrap();
            prop_assert_eq!(&whole, &merged);
            prop_assert_eq!(merge(&right, &left).unwrap(), merged);
            // Conservation under sharding.
            prop_assert_eq!(whole.total(), stats.accepted);
            prop_assert!(stats.reconciles());
        }
    }
}
