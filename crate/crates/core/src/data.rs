//! Series ingestion, calendars, synthetic data and the rolling forecast
//! driver.
//!
//! A [`TimeSeries`] is a sequence of dated whole cycles (24 hourly values
//! per day for load data). Dates must increase strictly but need not be
//! contiguous: excluded (atypical) dates are simply absent, and training
//! pairs touching them drop out of the training set. Source data must use
//! a fixed-offset clock with exactly one row per hour; DST-affected
//! series have to be normalized before ingestion.

use std::collections::HashSet;
use std::path::Path;

use chrono::{Datelike, Days, Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{train_ensemble, DiversityStrategy};
use crate::error::{Error, Result};
use crate::patterns::{build_training_set, encode_input, SeasonalSequence, WeekdayPairing};
use crate::randnn::RandNNConfig;

/// Spacing between per-day seeds in the rolling driver, large enough that
/// member seeds (`day seed + k`, `k <= M`) never collide across days.
pub const DAY_SEED_STRIDE: u64 = 1_000_003;

/// An hourly-style series stored as dated whole cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    cycle_len: usize,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Build a series from `(date, cycle)` pairs.
    ///
    /// Dates must be strictly increasing and every cycle must hold exactly
    /// `cycle_len` finite values.
    pub fn from_days(cycle_len: usize, days: Vec<(NaiveDate, Vec<f64>)>) -> Result<Self> {
        if cycle_len < 2 {
            return Err(Error::InvalidParameter {
                name: "cycle_len",
                reason: "must be at least 2".into(),
            });
        }
        if days.is_empty() {
            return Err(Error::InsufficientData("series has no cycles".into()));
        }
        let mut dates = Vec::with_capacity(days.len());
        let mut values = Vec::with_capacity(days.len() * cycle_len);
        for (date, cycle) in days {
            if cycle.len() != cycle_len {
                return Err(Error::MisalignedCycles {
                    len: cycle.len(),
                    cycle_len,
                });
            }
            if cycle.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("series values"));
            }
            if let Some(last) = dates.last() {
                if date <= *last {
                    return Err(Error::DuplicateTimestamp(
                        date.and_hms_opt(0, 0, 0).expect("midnight exists"),
                    ));
                }
            }
            dates.push(date);
            values.extend(cycle);
        }
        Ok(Self {
            cycle_len,
            dates,
            values,
        })
    }

    /// Build a contiguous series from a flat value vector starting at
    /// `start_date`. Fails with [`Error::MisalignedCycles`] when the
    /// length is not a whole number of cycles.
    pub fn from_values(cycle_len: usize, start_date: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if cycle_len >= 2 && values.len() % cycle_len != 0 {
            return Err(Error::MisalignedCycles {
                len: values.len(),
                cycle_len,
            });
        }
        let days = values
            .chunks(cycle_len.max(1))
            .enumerate()
            .map(|(i, chunk)| {
                let date = start_date
                    .checked_add_days(Days::new(i as u64))
                    .expect("date in range");
                (date, chunk.to_vec())
            })
            .collect();
        Self::from_days(cycle_len, days)
    }

    pub fn cycle_len(&self) -> usize {
        self.cycle_len
    }

    /// Total number of points `K`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_cycles(&self) -> usize {
        self.dates.len()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        *self.dates.last().expect("series is non-empty")
    }

    pub fn contains_date(&self, date: NaiveDate) -> bool {
        self.position(date).is_some()
    }

    fn position(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// The cycle values for `date`, if present.
    pub fn day_values(&self, date: NaiveDate) -> Option<&[f64]> {
        self.position(date)
            .map(|i| &self.values[i * self.cycle_len..(i + 1) * self.cycle_len])
    }

    /// The cycle for `date` as a [`SeasonalSequence`] (1-based index).
    pub fn cycle_at(&self, date: NaiveDate) -> Option<SeasonalSequence> {
        self.position(date).map(|i| SeasonalSequence {
            values: self.values[i * self.cycle_len..(i + 1) * self.cycle_len].to_vec(),
            index: i + 1,
            start_date: date,
        })
    }

    /// All cycles in temporal order, tagged with their weekday via the
    /// start date. Concatenating the returned values reconstructs the
    /// series exactly.
    pub fn split_cycles(&self) -> Vec<SeasonalSequence> {
        self.dates
            .iter()
            .enumerate()
            .map(|(i, date)| SeasonalSequence {
                values: self.values[i * self.cycle_len..(i + 1) * self.cycle_len].to_vec(),
                index: i + 1,
                start_date: *date,
            })
            .collect()
    }

    /// Flat concatenation of all cycle values.
    pub fn flat_values(&self) -> &[f64] {
        &self.values
    }

    /// Drop whole cycles whose date is in the exclusion list.
    pub fn without_dates(&self, excluded: &[NaiveDate]) -> Result<Self> {
        let excluded: HashSet<NaiveDate> = excluded.iter().copied().collect();
        let days: Vec<(NaiveDate, Vec<f64>)> = self
            .dates
            .iter()
            .enumerate()
            .filter(|(_, d)| !excluded.contains(d))
            .map(|(i, d)| {
                (
                    *d,
                    self.values[i * self.cycle_len..(i + 1) * self.cycle_len].to_vec(),
                )
            })
            .collect();
        if days.is_empty() {
            return Err(Error::InsufficientData(
                "all cycles fall on excluded dates".into(),
            ));
        }
        Self::from_days(self.cycle_len, days)
    }
}

/// Column names and clock convention for CSV ingestion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    #[serde(default = "default_timestamp_column")]
    pub timestamp_column: String,
    #[serde(default = "default_value_column")]
    pub value_column: String,
    /// Fixed offset ("UTC", "Z" or "+HH:MM") that offset-carrying
    /// timestamps are converted to before taking the clock time. Naive
    /// timestamps are used as-is.
    #[serde(default)]
    pub timezone: Option<String>,
}

fn default_timestamp_column() -> String {
    "timestamp".into()
}

fn default_value_column() -> String {
    "value".into()
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp_column: default_timestamp_column(),
            value_column: default_value_column(),
            timezone: None,
        }
    }
}

fn parse_offset(spec: &str) -> Result<chrono::FixedOffset> {
    if spec.eq_ignore_ascii_case("utc") || spec == "Z" {
        return Ok(chrono::FixedOffset::east_opt(0).expect("zero offset"));
    }
    spec.parse::<chrono::FixedOffset>()
        .map_err(|_| Error::InvalidParameter {
            name: "timezone",
            reason: format!("cannot parse fixed offset from `{spec}`"),
        })
}

fn parse_timestamp(raw: &str, offset: Option<chrono::FixedOffset>, row: usize) -> Result<NaiveDateTime> {
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(raw) {
        let target = offset.unwrap_or_else(|| *dt.offset());
        return Ok(dt.with_timezone(&target).naive_local());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Ok(dt);
        }
    }
    Err(Error::ParseError {
        row,
        message: format!("cannot parse timestamp `{raw}`"),
    })
}

/// Load an hourly CSV into a 24-point-cycle series, dropping excluded
/// dates as whole cycles.
///
/// The file must have a header row and one row per hour with no gaps or
/// duplicates; the first row must fall on hour 0 and the last on hour 23.
pub fn load_csv(path: &Path, schema: &CsvSchema, exclusions: &[NaiveDate]) -> Result<TimeSeries> {
    let offset = schema.timezone.as_deref().map(parse_offset).transpose()?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ParseError {
                row: 1,
                message: format!("missing column `{name}`"),
            })
    };
    let ts_col = find(&schema.timestamp_column)?;
    let val_col = find(&schema.value_column)?;

    let mut rows: Vec<(NaiveDateTime, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header
        let record = record?;
        let raw_ts = record.get(ts_col).ok_or_else(|| Error::ParseError {
            row,
            message: "missing timestamp field".into(),
        })?;
        let raw_val = record.get(val_col).ok_or_else(|| Error::ParseError {
            row,
            message: "missing value field".into(),
        })?;
        let ts = parse_timestamp(raw_ts.trim(), offset, row)?;
        let value: f64 = raw_val.trim().parse().map_err(|_| Error::ParseError {
            row,
            message: format!("cannot parse value `{raw_val}`"),
        })?;
        if !value.is_finite() {
            return Err(Error::NonFinite("csv value"));
        }
        if ts.minute() != 0 || ts.second() != 0 {
            return Err(Error::ParseError {
                row,
                message: format!("timestamp {ts} is not on a whole hour"),
            });
        }
        rows.push((ts, value));
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("csv has no data rows".into()));
    }

    // Strictly increasing hourly grid.
    let mut missing = Vec::new();
    for (i, window) in rows.windows(2).enumerate() {
        let (prev, next) = (window[0].0, window[1].0);
        if next == prev {
            return Err(Error::DuplicateTimestamp(next));
        }
        if next < prev {
            return Err(Error::ParseError {
                row: i + 3, // 1-based line of `next`, after the header
                message: format!("timestamps not increasing at {next}"),
            });
        }
        let mut cursor = prev + Duration::hours(1);
        while cursor < next {
            missing.push(cursor);
            cursor += Duration::hours(1);
        }
    }
    if !missing.is_empty() {
        return Err(Error::Gap { missing });
    }
    if rows[0].0.hour() != 0 || rows.last().expect("non-empty").0.hour() != 23 {
        return Err(Error::MisalignedCycles {
            len: rows.len(),
            cycle_len: 24,
        });
    }

    let days: Vec<(NaiveDate, Vec<f64>)> = rows
        .chunks(24)
        .map(|chunk| (chunk[0].0.date(), chunk.iter().map(|(_, v)| *v).collect()))
        .collect();
    TimeSeries::from_days(24, days)?.without_dates(exclusions)
}

/// Read an exclusion list: one ISO date per line, blank lines and `#`
/// comments ignored.
pub fn load_exclusions(path: &Path) -> Result<Vec<NaiveDate>> {
    let text = std::fs::read_to_string(path)?;
    let mut dates = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let date = line.parse::<NaiveDate>().map_err(|_| Error::ParseError {
            row: i + 1,
            message: format!("cannot parse date `{line}`"),
        })?;
        dates.push(date);
    }
    Ok(dates)
}

/// Parameters of the synthetic triple-seasonal generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthParams {
    /// Number of daily cycles (at least 14).
    pub days: usize,
    pub start_date: NaiveDate,
    /// Points per cycle.
    pub cycle_len: usize,
    /// Overall level, in load units.
    pub base_level: f64,
    /// Multiplier per weekday, Monday first.
    pub weekday_amplitudes: [f64; 7],
    /// Within-day shape; defaults to a two-peak profile when absent.
    pub daily_shape: Option<Vec<f64>>,
    /// Relative amplitude of the yearly sine, in [0, 1).
    pub yearly_amplitude: f64,
    /// Standard deviation of the multiplicative Gaussian noise.
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            days: 365,
            start_date: NaiveDate::from_ymd_opt(2012, 1, 2).expect("valid date"),
            cycle_len: 24,
            base_level: 1000.0,
            weekday_amplitudes: [1.0, 1.02, 1.03, 1.02, 1.0, 0.9, 0.85],
            daily_shape: None,
            yearly_amplitude: 0.15,
            noise_sd: 0.02,
            seed: 0,
        }
    }
}

/// A plausible two-peak daily load profile, strictly positive.
pub fn default_daily_shape(cycle_len: usize) -> Vec<f64> {
    use std::f64::consts::TAU;
    (0..cycle_len)
        .map(|h| {
            let t = h as f64 / cycle_len as f64;
            1.0 + 0.3 * (TAU * (t - 0.3)).sin() + 0.15 * (2.0 * TAU * t).sin()
        })
        .collect()
}

/// Generate a synthetic series with yearly, weekly and daily seasonality:
/// `base·(1 + A_y·sin(2π·dayofyear/365))·w(dow)·s(hour)·(1 + ε)` with
/// `ε ~ N(0, noise_sd)`. Deterministic per seed; noise draws are made in
/// (day, hour) order.
pub fn synth_series(params: &SynthParams) -> Result<TimeSeries> {
    use std::f64::consts::TAU;
    let invalid = |name: &'static str, reason: String| Error::InvalidParameter { name, reason };
    if params.days < 14 {
        return Err(invalid("days", format!("{} is below the 14-day minimum", params.days)));
    }
    if params.cycle_len < 2 {
        return Err(invalid("cycle_len", "must be at least 2".into()));
    }
    if !(params.base_level > 0.0) {
        return Err(invalid("base_level", "must be positive".into()));
    }
    if params.weekday_amplitudes.iter().any(|a| !(*a > 0.0)) {
        return Err(invalid("weekday_amplitudes", "must all be positive".into()));
    }
    if !(0.0..1.0).contains(&params.yearly_amplitude) {
        return Err(invalid("yearly_amplitude", "must lie in [0, 1)".into()));
    }
    if !(params.noise_sd >= 0.0 && params.noise_sd.is_finite()) {
        return Err(invalid("noise_sd", "must be finite and non-negative".into()));
    }
    let shape = match &params.daily_shape {
        Some(s) => {
            if s.len() != params.cycle_len {
                return Err(invalid(
                    "daily_shape",
                    format!("has {} points, cycle length is {}", s.len(), params.cycle_len),
                ));
            }
            if s.iter().any(|v| !(*v > 0.0)) {
                return Err(invalid("daily_shape", "must be strictly positive".into()));
            }
            s.clone()
        }
        None => default_daily_shape(params.cycle_len),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, params.noise_sd)
        .map_err(|_| invalid("noise_sd", "not a valid standard deviation".into()))?;
    let mut days = Vec::with_capacity(params.days);
    for d in 0..params.days {
        let date = params
            .start_date
            .checked_add_days(Days::new(d as u64))
            .ok_or_else(|| invalid("days", "date range overflows the calendar".into()))?;
        let yearly = 1.0 + params.yearly_amplitude * (TAU * date.ordinal() as f64 / 365.0).sin();
        let weekday = params.weekday_amplitudes[date.weekday().num_days_from_monday() as usize];
        let cycle: Vec<f64> = shape
            .iter()
            .map(|s| {
                let noise = if params.noise_sd == 0.0 {
                    0.0
                } else {
                    normal.sample(&mut rng)
                };
                params.base_level * yearly * weekday * s * (1.0 + noise)
            })
            .collect();
        days.push((date, cycle));
    }
    TimeSeries::from_days(params.cycle_len, days)
}

/// Forecast a day by copying the cycle seven days earlier.
pub fn naive_forecast(series: &TimeSeries, date: NaiveDate) -> Result<Vec<f64>> {
    let source = date
        .checked_sub_days(Days::new(7))
        .ok_or(Error::MissingHistory(date))?;
    series
        .day_values(source)
        .map(|v| v.to_vec())
        .ok_or(Error::MissingHistory(date))
}

/// The model retrained for every forecast day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ForecastModel {
    /// Copy the cycle seven days before the target.
    Naive,
    /// An ensemble of randomized networks.
    Ensemble {
        strategy: DiversityStrategy,
        members: usize,
        base: RandNNConfig,
    },
}

/// Options of the rolling driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingOptions {
    /// Forecast horizon in cycles.
    pub horizon: usize,
    pub pairing: WeekdayPairing,
    /// Keep per-member forecasts for diversity computation.
    pub collect_members: bool,
}

impl Default for RollingOptions {
    fn default() -> Self {
        Self {
            horizon: 1,
            pairing: WeekdayPairing::Both,
            collect_members: true,
        }
    }
}

/// Actuals and forecasts for one test day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayForecast {
    pub date: NaiveDate,
    pub actual: Vec<f64>,
    pub forecast: Vec<f64>,
    pub member_forecasts: Option<Vec<Vec<f64>>>,
}

/// A test day that produced no forecast, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedDay {
    pub date: NaiveDate,
    pub reason: String,
}

/// Output of [`rolling_forecast`].
#[derive(Debug, Clone, PartialEq)]
pub struct RollingForecastResult {
    pub days: Vec<DayForecast>,
    pub skipped: Vec<SkippedDay>,
    pub horizon: usize,
}

impl RollingForecastResult {
    pub fn actual_matrix(&self) -> Vec<Vec<f64>> {
        self.days.iter().map(|d| d.actual.clone()).collect()
    }

    pub fn forecast_matrix(&self) -> Vec<Vec<f64>> {
        self.days.iter().map(|d| d.forecast.clone()).collect()
    }

    /// Per-day per-position absolute errors.
    pub fn abs_error_matrix(&self) -> Vec<Vec<f64>> {
        self.days
            .iter()
            .map(|d| {
                d.actual
                    .iter()
                    .zip(&d.forecast)
                    .map(|(a, f)| (a - f).abs())
                    .collect()
            })
            .collect()
    }

    /// Member forecasts regrouped as member × day × position, if they
    /// were collected for every day.
    pub fn member_matrix(&self) -> Option<Vec<Vec<Vec<f64>>>> {
        let first = self.days.first()?.member_forecasts.as_ref()?;
        let m = first.len();
        let mut out = vec![Vec::with_capacity(self.days.len()); m];
        for day in &self.days {
            let members = day.member_forecasts.as_ref()?;
            if members.len() != m {
                return None;
            }
            for (k, f) in members.iter().enumerate() {
                out[k].push(f.clone());
            }
        }
        Some(out)
    }
}

enum DayOutcome {
    Forecast(Box<DayForecast>),
    Skipped(SkippedDay),
}

fn forecast_one_day(
    series: &TimeSeries,
    date: NaiveDate,
    day_seed: u64,
    model: &ForecastModel,
    opts: &RollingOptions,
) -> Result<DayOutcome> {
    let skip = |reason: String| Ok(DayOutcome::Skipped(SkippedDay { date, reason }));
    let actual = match series.day_values(date) {
        Some(v) => v.to_vec(),
        None => return skip("date not in series (excluded or out of range)".into()),
    };
    match model {
        ForecastModel::Naive => match naive_forecast(series, date) {
            Ok(forecast) => Ok(DayOutcome::Forecast(Box::new(DayForecast {
                date,
                actual,
                forecast,
                member_forecasts: None,
            }))),
            Err(Error::MissingHistory(_)) => skip("no cycle 7 days earlier".into()),
            Err(e) => Err(e),
        },
        ForecastModel::Ensemble {
            strategy,
            members,
            base,
        } => {
            let query_date = match date.checked_sub_days(Days::new(opts.horizon as u64)) {
                Some(d) => d,
                None => return skip("horizon reaches before the calendar".into()),
            };
            let query = match series.cycle_at(query_date) {
                Some(q) => q,
                None => return skip(format!("query cycle {query_date} not in series")),
            };
            let phi = match build_training_set(series, date, opts.horizon, opts.pairing) {
                Ok(phi) => phi,
                Err(Error::EmptyTrainingSet(_)) => {
                    return skip("no qualifying training pairs".into())
                }
                Err(e) => return Err(e),
            };
            // Strict temporal cutoff: no pair may touch the test day.
            for pair in phi.pairs() {
                let input_date = series.dates()[pair.input.source_index - 1];
                let output_date = input_date
                    .checked_add_days(Days::new(opts.horizon as u64))
                    .expect("date in range");
                assert!(
                    output_date < date,
                    "training pair ending {output_date} leaks into test day {date}"
                );
            }
            let day_config = RandNNConfig {
                seed: day_seed,
                ..*base
            };
            let ensemble = train_ensemble(&phi, strategy, *members, &day_config)?;
            let (_, coding) = encode_input(&query)?;
            let member_forecasts = ensemble.member_forecasts(&query, &coding)?;
            let forecast = crate::ensemble::mean_forecast(&member_forecasts);
            Ok(DayOutcome::Forecast(Box::new(DayForecast {
                date,
                actual,
                forecast,
                member_forecasts: opts.collect_members.then_some(member_forecasts),
            })))
        }
    }
}

/// Retrain-and-predict for every day of the test window.
///
/// For each day a fresh training set is built from strictly earlier
/// cycles (same-weekday pairing by default), the model is trained anew,
/// the query cycle at lag `horizon` is encoded, and the prediction is
/// decoded with the query's coding variables. Days that cannot be
/// forecast are reported in `skipped` and left out of the result days.
///
/// The per-day seed is `base seed + DAY_SEED_STRIDE · (days since
/// test_start)`, so results are independent of processing order and
/// thread count; days run in parallel.
pub fn rolling_forecast(
    series: &TimeSeries,
    test_start: NaiveDate,
    test_end: NaiveDate,
    model: &ForecastModel,
    opts: &RollingOptions,
) -> Result<RollingForecastResult> {
    if test_end < test_start {
        return Err(Error::InvalidParameter {
            name: "test_end",
            reason: format!("{test_end} precedes test_start {test_start}"),
        });
    }
    if opts.horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "must be at least 1 cycle".into(),
        });
    }
    let base_seed = match model {
        ForecastModel::Naive => 0,
        ForecastModel::Ensemble { base, .. } => base.seed,
    };
    let window: Vec<(NaiveDate, u64)> = test_start
        .iter_days()
        .take_while(|d| *d <= test_end)
        .map(|d| {
            let offset = (d - test_start).num_days() as u64;
            (d, base_seed.wrapping_add(DAY_SEED_STRIDE.wrapping_mul(offset)))
        })
        .collect();

    let outcomes: Result<Vec<DayOutcome>> = window
        .into_par_iter()
        .map(|(date, day_seed)| forecast_one_day(series, date, day_seed, model, opts))
        .collect();

    let mut days = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes? {
        match outcome {
            DayOutcome::Forecast(day) => days.push(*day),
            DayOutcome::Skipped(s) => skipped.push(s),
        }
    }
    Ok(RollingForecastResult {
        days,
        skipped,
        horizon: opts.horizon,
    })
}
