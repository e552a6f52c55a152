//! Deterministic synthetic log-corpus generation with planted structure.
//!
//! Real route-search corpora are proprietary, so every downstream statistic
//! here is validated against generated data with retained ground truth. The
//! model is Poisson counts per `(origin, dest, day)` cell:
//!
//! ```text
//! intensity = base_rate x popularity(i) x popularity(j)
//!           x seasonal(dest, day) x weekend(dest, day)
//!           x yearly_growth ^ (year - first year)
//! ```
//!
//! Popularity is a unit-mean power-law weight over interchange indices
//! (`pair_skew` 0 makes every pair equally likely; real search traffic is
//! heavily concentrated on a few pairs). Hotspot destinations get a
//! triangular seasonal bump peaking mid-window plus a weekend multiplier
//! inside the window. The generator emits the log CSV consumed by
//! [`crate::ingest`] and a [`GroundTruth`] holding the exact per-destination
//! daily intensity table and the planted peak days.
//!
//! Identical `(seed, config)` always reproduce identical bytes.

use std::io::Write;

use chrono::{Datelike, Duration};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{date_of_day, days_in_year, MonthDay};
use crate::ingest::to_log_line;
use crate::model::{ICRegistry, InterchangeRecord, SearchRecord};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("registry has {actual} interchanges, config expects {expected}")]
    RegistryMismatch { expected: u32, actual: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A destination with planted seasonal demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    /// Registry index of the destination interchange.
    pub dest_index: u32,
    pub season_start: MonthDay,
    pub season_end: MonthDay,
    /// Intensity multiplier at the mid-window peak day; ramps linearly
    /// from the window edges.
    pub peak_multiplier: f64,
    /// Extra multiplier on Saturdays and Sundays inside the window.
    pub weekend_multiplier: f64,
}

/// Parameters of one synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub years: Vec<i32>,
    pub n_ics: u32,
    /// Mean searches per OD pair per day before seasonal/weekend boosts.
    pub base_rate: f64,
    pub hotspots: Vec<Hotspot>,
    /// Probability that a record carries a future specified time.
    pub specified_fraction: f64,
    /// Multiplicative volume factor per calendar year after the first.
    pub yearly_growth: f64,
    /// Maximum gap in days between search time and specified time.
    pub lookahead_days: u32,
    /// Power-law exponent of the pair-popularity weights; 0 = uniform.
    pub pair_skew: f64,
}

impl GeneratorConfig {
    /// CI-friendly default profile: 200 interchanges, two years, roughly
    /// 100k records with three seasonal hotspots and 20% yearly growth.
    pub fn desk_scale() -> Self {
        Self {
            seed: 42,
            years: vec![2023, 2024],
            n_ics: 200,
            base_rate: 0.0031,
            hotspots: vec![
                Hotspot {
                    dest_index: 12,
                    season_start: MonthDay::new(3, 15).expect("valid"),
                    season_end: MonthDay::new(5, 30).expect("valid"),
                    peak_multiplier: 10.0,
                    weekend_multiplier: 1.5,
                },
                Hotspot {
                    dest_index: 47,
                    season_start: MonthDay::new(9, 25).expect("valid"),
                    season_end: MonthDay::new(12, 10).expect("valid"),
                    peak_multiplier: 8.0,
                    weekend_multiplier: 1.4,
                },
                Hotspot {
                    dest_index: 88,
                    season_start: MonthDay::new(1, 1).expect("valid"),
                    season_end: MonthDay::new(3, 31).expect("valid"),
                    peak_multiplier: 6.0,
                    weekend_multiplier: 1.6,
                },
            ],
            specified_fraction: 0.7,
            yearly_growth: 1.2,
            lookahead_days: 14,
            pair_skew: 1.7,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.n_ics == 0 {
            return bad("n_ics must be at least 1".into());
        }
        if self.years.is_empty() {
            return bad("years must not be empty".into());
        }
        let mut sorted = self.years.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.years.len() {
            return bad("years contain duplicates".into());
        }
        for (name, v) in [
            ("base_rate", self.base_rate),
            ("yearly_growth", self.yearly_growth),
            ("pair_skew", self.pair_skew),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be finite and >= 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.specified_fraction) {
            return bad("specified_fraction must be in [0, 1]".into());
        }
        if self.specified_fraction > 0.0 && self.lookahead_days == 0 {
            return bad("lookahead_days must be >= 1 when specified records occur".into());
        }
        let mut seen = std::collections::HashSet::new();
        for h in &self.hotspots {
            if h.dest_index >= self.n_ics {
                return bad(format!("hotspot dest_index {} >= n_ics", h.dest_index));
            }
            if !seen.insert(h.dest_index) {
                return bad(format!("two hotspots share dest_index {}", h.dest_index));
            }
            if h.season_start > h.season_end {
                return bad(format!("hotspot {} season start after end", h.dest_index));
            }
            for (name, v) in [
                ("peak_multiplier", h.peak_multiplier),
                ("weekend_multiplier", h.weekend_multiplier),
            ] {
                if !v.is_finite() || v < 0.0 {
                    return bad(format!("hotspot {name} must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Unit-mean popularity weight per registry index.
    pub fn popularity_weights(&self) -> Vec<f64> {
        let n = self.n_ics as usize;
        let mut w: Vec<f64> = (0..n).map(|k| ((k + 1) as f64).powf(-self.pair_skew)).collect();
        let mean = w.iter().sum::<f64>() / n as f64;
        for v in &mut w {
            *v /= mean;
        }
        w
    }
}

/// One planted seasonal peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedPeak {
    pub dest_index: u32,
    pub peak_day: u32,
}

/// The intensity table one year of the corpus was drawn from.
#[derive(Debug, Clone)]
pub struct YearTruth {
    pub year: i32,
    pub n_ics: u32,
    pub n_days: u32,
    /// Expected arrivals per destination per day, both categories combined,
    /// dest-major: entry `dest * n_days + t`. The specified-category share
    /// is `specified_fraction` of each value.
    intensity: Vec<f64>,
    pub planted_peaks: Vec<PlantedPeak>,
}

impl YearTruth {
    /// Expected total arrivals toward `dest` on day `t`.
    pub fn intensity(&self, dest: u32, t: u32) -> f64 {
        self.intensity[dest as usize * self.n_days as usize + t as usize]
    }

    /// CSV form: `dest_index,day_index,intensity`.
    pub fn write_intensity_csv<W: Write>(&self, mut w: W) -> Result<(), SynthError> {
        writeln!(w, "dest_index,day_index,intensity")?;
        for dest in 0..self.n_ics {
            for t in 0..self.n_days {
                writeln!(w, "{dest},{t},{}", self.intensity(dest, t))?;
            }
        }
        Ok(())
    }
}

/// Ground truth across all generated years.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub years: Vec<YearTruth>,
}

impl GroundTruth {
    pub fn for_year(&self, year: i32) -> Option<&YearTruth> {
        self.years.iter().find(|y| y.year == year)
    }

    /// CSV form: `dest_index,year,peak_day_index`.
    pub fn write_planted_peaks_csv<W: Write>(&self, mut w: W) -> Result<(), SynthError> {
        writeln!(w, "dest_index,year,peak_day_index")?;
        for y in &self.years {
            for p in &y.planted_peaks {
                writeln!(w, "{},{},{}", p.dest_index, y.year, p.peak_day)?;
            }
        }
        Ok(())
    }
}

/// What [`generate`] produced.
#[derive(Debug, Clone)]
pub struct GenerationSummary {
    pub records_written: u64,
    pub ground_truth: GroundTruth,
}

/// Synthetic interchanges on a jittered grid over a Kanto-sized box.
/// Coordinates are pairwise distinct; same seed, same file.
pub fn make_registry(n_ics: u32, seed: u64) -> Vec<InterchangeRecord> {
    const LON: (f64, f64) = (138.0, 141.8);
    const LAT: (f64, f64) = (34.2, 37.8);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let side = (n_ics as f64).sqrt().ceil() as u32;
    let lon_step = (LON.1 - LON.0) / side as f64;
    let lat_step = (LAT.1 - LAT.0) / side as f64;
    (0..n_ics)
        .map(|k| {
            let gx = k / side;
            let gy = k % side;
            // Jitter stays strictly inside the cell, keeping cells disjoint.
            let lon = LON.0 + (gx as f64 + 0.1 + 0.8 * rng.gen::<f64>()) * lon_step;
            let lat = LAT.0 + (gy as f64 + 0.1 + 0.8 * rng.gen::<f64>()) * lat_step;
            InterchangeRecord::new(
                format!("IC{k:04}"),
                format!("Synthetic IC {k:04}"),
                lon,
                lat,
            )
            .expect("grid coordinates are in range")
        })
        .collect()
}

/// Per-day demand factor for one destination in one year: 1 outside any
/// hotspot window; inside, a triangular ramp to `peak_multiplier` at the
/// mid-window day, times the weekend multiplier on Sat/Sun.
fn day_factors(year: i32, n_days: u32, hotspot: Option<&Hotspot>) -> (Vec<f64>, Option<u32>) {
    let mut factors = vec![1.0; n_days as usize];
    let Some(h) = hotspot else {
        return (factors, None);
    };
    let (Ok(start), Ok(end)) = (h.season_start.resolve(year), h.season_end.resolve(year)) else {
        // Window touches Feb 29 in a non-leap year; no bump planted.
        return (factors, None);
    };
    let weekend = crate::trend::weekend_mask(year);
    let s = start.ordinal0();
    let e = end.ordinal0();
    let peak = (s + e) / 2;
    for t in s..=e {
        let shape = if t <= peak {
            1.0 - f64::from(peak - t) / f64::from(peak - s + 1)
        } else {
            1.0 - f64::from(t - peak) / f64::from(e - peak + 1)
        };
        let mut f = 1.0 + (h.peak_multiplier - 1.0) * shape;
        if weekend[t as usize] {
            f *= h.weekend_multiplier;
        }
        factors[t as usize] = f;
    }
    (factors, Some(peak))
}

const MINUTES_PER_DAY: u32 = 24 * 60;

/// Writes a seeded synthetic log corpus to `sink` and returns its ground
/// truth. Records are drawn year by year, pair by pair in index order, so
/// the byte stream is a pure function of `(config, registry)`.
pub fn generate<W: Write>(
    config: &GeneratorConfig,
    registry: &ICRegistry,
    sink: &mut W,
) -> Result<GenerationSummary, SynthError> {
    config.validate()?;
    if registry.len() != config.n_ics {
        return Err(SynthError::RegistryMismatch {
            expected: config.n_ics,
            actual: registry.len(),
        });
    }
    let n = config.n_ics as usize;
    let weights = config.popularity_weights();
    let mut years = config.years.clone();
    years.sort_unstable();
    let first_year = years[0];

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let hotspot_of = |dest: u32| config.hotspots.iter().find(|h| h.dest_index == dest);
    let mut truth_years = Vec::with_capacity(years.len());
    let mut records_written = 0u64;

    for &year in &years {
        let n_days = days_in_year(year);
        let growth = config.yearly_growth.powi(year - first_year);

        // Per-destination day factors, their cumulative sums for day
        // sampling, and the ground-truth intensity table.
        let mut factor_cum: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut factor_sum: Vec<f64> = Vec::with_capacity(n);
        let mut intensity = vec![0.0f64; n * n_days as usize];
        let mut planted_peaks = Vec::new();
        for dest in 0..config.n_ics {
            let (factors, peak) = day_factors(year, n_days, hotspot_of(dest));
            if let Some(peak_day) = peak {
                planted_peaks.push(PlantedPeak {
                    dest_index: dest,
                    peak_day,
                });
            }
            // Arrival intensity toward dest: sum over origins of
            // base * w_i * w_j * growth * factor = base * n * w_j * growth * factor.
            let arrival_scale = config.base_rate * n as f64 * weights[dest as usize] * growth;
            for (t, &f) in factors.iter().enumerate() {
                intensity[dest as usize * n_days as usize + t] = arrival_scale * f;
            }
            let mut cum = Vec::with_capacity(n_days as usize);
            let mut acc = 0.0;
            for &f in &factors {
                acc += f;
                cum.push(acc);
            }
            factor_sum.push(acc);
            factor_cum.push(cum);
        }

        for i in 0..config.n_ics {
            for j in 0..config.n_ics {
                let lambda = config.base_rate
                    * weights[i as usize]
                    * weights[j as usize]
                    * growth
                    * factor_sum[j as usize];
                if lambda <= 0.0 {
                    continue;
                }
                let n_records =
                    Poisson::new(lambda).expect("lambda is positive finite").sample(&mut rng)
                        as u64;
                let dep_id = &registry.get(i).expect("index in registry").ic_id;
                let arr_id = &registry.get(j).expect("index in registry").ic_id;
                let cum = &factor_cum[j as usize];
                let total = factor_sum[j as usize];
                for _ in 0..n_records {
                    let u = rng.gen_range(0.0..total);
                    let day = cum.partition_point(|&c| c <= u).min(cum.len() - 1) as u32;
                    let record = draw_record(&mut rng, config, year, day, dep_id, arr_id);
                    sink.write_all(to_log_line(&record).as_bytes())?;
                    sink.write_all(b"\n")?;
                    records_written += 1;
                }
            }
        }

        truth_years.push(YearTruth {
            year,
            n_ics: config.n_ics,
            n_days,
            intensity,
            planted_peaks,
        });
    }

    Ok(GenerationSummary {
        records_written,
        ground_truth: GroundTruth { years: truth_years },
    })
}

/// Draws the record-level attributes for one search landing on `day`.
///
/// Specified records place their specified time on the day and back-date
/// the search time up to `lookahead_days`; unspecified records happen on
/// the day itself, half of them echoing the search time into the specified
/// column the way a default-filled form would.
fn draw_record(
    rng: &mut ChaCha8Rng,
    config: &GeneratorConfig,
    year: i32,
    day: u32,
    dep_id: &str,
    arr_id: &str,
) -> SearchRecord {
    let date = date_of_day(year, day).expect("sampled day is in year");
    let minute = rng.gen_range(0..MINUTES_PER_DAY);
    let on_day = date
        .and_hms_opt(minute / 60, minute % 60, 0)
        .expect("minute of day is valid");
    if rng.gen_bool(config.specified_fraction) {
        let lookback = rng.gen_range(1..=i64::from(config.lookahead_days) * 1440);
        let search = on_day - Duration::minutes(lookback);
        SearchRecord::new(search, dep_id, arr_id, Some(on_day))
    } else {
        let echoed = rng.gen_bool(0.5);
        SearchRecord::new(on_day, dep_id, arr_id, echoed.then_some(on_day))
    }
}
