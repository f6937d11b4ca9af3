//! Pattern representation of seasonal cycles.
//!
//! A seasonal sequence `e = [E_1, …, E_n]` is encoded into an input
//! pattern `x = (e − mean(e)) / dispersion(e)`, where the dispersion is
//! the root sum of squared deviations from the mean (NOT the standard
//! deviation). This makes every x-pattern zero-mean with unit Euclidean
//! norm, so cycles that differ in level and spread become comparable in
//! shape. Output patterns scale the forecasted cycle by the *input*
//! cycle's coding variables, because the future cycle's own mean and
//! dispersion are unknown at forecast time; decoding inverts that affine
//! map.

use chrono::{Datelike, Days, NaiveDate, NaiveDateTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::data::TimeSeries;
use crate::error::{Error, Result};

/// One seasonal cycle of the raw series (e.g. one day of hourly loads).
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalSequence {
    /// Raw values in load units; length is the cycle length `n`.
    pub values: Vec<f64>,
    /// 1-based position of this cycle within its series.
    pub index: usize,
    /// Calendar date on which the cycle starts.
    pub start_date: NaiveDate,
}

impl SeasonalSequence {
    pub fn new(values: Vec<f64>, index: usize, start_date: NaiveDate) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "seasonal sequence needs at least 2 values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("seasonal sequence"));
        }
        Ok(Self {
            values,
            index,
            start_date,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weekday(&self) -> Weekday {
        self.start_date.weekday()
    }

    /// Midnight at the start of the cycle.
    pub fn start_timestamp(&self) -> NaiveDateTime {
        self.start_date.and_hms_opt(0, 0, 0).expect("midnight exists")
    }
}

/// Mean and dispersion of an input cycle, used to encode and decode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodingVariables {
    /// Cycle mean, in the series' units.
    pub mean: f64,
    /// Root sum of squared deviations from the mean; strictly positive.
    pub dispersion: f64,
}

/// A unified input pattern: zero mean, unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPattern {
    pub x: Vec<f64>,
    /// Index of the seasonal sequence this pattern encodes.
    pub source_index: usize,
}

/// An output pattern: the forecasted cycle scaled by the paired input's
/// coding variables. Not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPattern {
    pub y: Vec<f64>,
    /// Index of the *input* sequence whose coding variables scale `y`.
    pub source_index: usize,
    /// Forecast horizon in cycles (`>= 1`).
    pub horizon: usize,
}

/// An (input, output) pattern pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternPair {
    pub input: InputPattern,
    pub output: OutputPattern,
}

/// The training set: pattern pairs sharing one pattern length.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pairs: Vec<PatternPair>,
    n: usize,
}

impl TrainingSet {
    pub fn new(pairs: Vec<PatternPair>) -> Result<Self> {
        let n = match pairs.first() {
            Some(p) => p.input.x.len(),
            None => {
                return Err(Error::InsufficientData(
                    "training set needs at least one pair".into(),
                ))
            }
        };
        for p in &pairs {
            if p.input.x.len() != n || p.output.y.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "pattern pair for sequence {} does not have length {n}",
                    p.input.source_index
                )));
            }
        }
        Ok(Self { pairs, n })
    }

    pub fn pairs(&self) -> &[PatternPair] {
        &self.pairs
    }

    /// Number of pairs `N`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pattern length `n`.
    pub fn pattern_len(&self) -> usize {
        self.n
    }

    /// The x-patterns, in order; also serves as the anchor pool.
    pub fn x_pool(&self) -> Vec<&[f64]> {
        self.pairs.iter().map(|p| p.input.x.as_slice()).collect()
    }

    /// N×n matrix with one input pattern per row.
    pub fn inputs_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.pairs.len(), self.n, |i, t| self.pairs[i].input.x[t])
    }

    /// N×n matrix with one output pattern per row.
    pub fn outputs_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.pairs.len(), self.n, |i, t| self.pairs[i].output.y[t])
    }
}

/// Which ends of a training pair must match the query pair's weekdays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeekdayPairing {
    /// Input matches the query cycle's weekday and output matches the
    /// forecast day's weekday.
    #[default]
    Both,
    /// Only the input weekday must match.
    InputOnly,
    /// Only the output weekday must match.
    OutputOnly,
    /// No weekday filter.
    Off,
}

fn coding_of(values: &[f64]) -> Result<CodingVariables> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sequence values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let dispersion = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        .sqrt();
    // Finite inputs can still overflow the sum of squares.
    if !mean.is_finite() || !dispersion.is_finite() {
        return Err(Error::NonFinite("coding variables"));
    }
    if dispersion == 0.0 {
        return Err(Error::ZeroDispersion);
    }
    Ok(CodingVariables { mean, dispersion })
}

/// Encode a seasonal sequence into a unified input pattern.
///
/// Returns the pattern together with the coding variables used, which the
/// caller needs later to scale the paired output pattern and to decode
/// forecasts.
pub fn encode_input(seq: &SeasonalSequence) -> Result<(InputPattern, CodingVariables)> {
    if seq.len() < 2 {
        return Err(Error::InsufficientData(
            "cannot encode a sequence shorter than 2".into(),
        ));
    }
    let coding = coding_of(&seq.values)?;
    let x = seq
        .values
        .iter()
        .map(|v| (v - coding.mean) / coding.dispersion)
        .collect();
    Ok((
        InputPattern {
            x,
            source_index: seq.index,
        },
        coding,
    ))
}

/// Encode the forecasted sequence with the *input* cycle's coding
/// variables.
pub fn encode_output(
    future_seq: &SeasonalSequence,
    coding: &CodingVariables,
    horizon: usize,
) -> Result<OutputPattern> {
    if coding.dispersion <= 0.0 {
        return Err(Error::ZeroDispersion);
    }
    if !coding.mean.is_finite() || !coding.dispersion.is_finite() {
        return Err(Error::NonFinite("coding variables"));
    }
    if future_seq.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("future sequence values"));
    }
    let y = future_seq
        .values
        .iter()
        .map(|v| (v - coding.mean) / coding.dispersion)
        .collect();
    Ok(OutputPattern {
        y,
        source_index: future_seq.index.saturating_sub(horizon),
        horizon,
    })
}

/// Decode a forecast pattern back to the series' units: `ê = ŷ·ẽ + ē`.
pub fn decode(y_hat: &[f64], coding: &CodingVariables) -> Result<Vec<f64>> {
    if !coding.mean.is_finite() || !coding.dispersion.is_finite() {
        return Err(Error::NonFinite("coding variables"));
    }
    if y_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forecast pattern"));
    }
    Ok(y_hat
        .iter()
        .map(|v| v * coding.dispersion + coding.mean)
        .collect())
}

/// Build the training set for forecasting the cycle of `query_date`.
///
/// A candidate pair couples the cycle of date `D` (input) with the cycle
/// `horizon` days later (output). The pair qualifies when both cycles are
/// present in the series — cycles on excluded dates are absent, so pairs
/// touching them drop out — and the output cycle falls strictly before
/// `query_date`. With weekday pairing, the pair's weekdays must match the
/// (query cycle, forecast day) weekdays on the selected ends.
///
/// The result is deterministic and ordered by input date.
pub fn build_training_set(
    series: &TimeSeries,
    query_date: NaiveDate,
    horizon: usize,
    pairing: WeekdayPairing,
) -> Result<TrainingSet> {
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "must be at least 1 cycle".into(),
        });
    }
    let offset = Days::new(horizon as u64);
    let query_input_date = query_date
        .checked_sub_days(offset)
        .ok_or_else(|| Error::InvalidParameter {
            name: "query_date",
            reason: "horizon underflows the calendar".into(),
        })?;

    let sequences = series.split_cycles();
    let mut pairs = Vec::new();
    for seq in &sequences {
        let out_date = match seq.start_date.checked_add_days(offset) {
            Some(d) => d,
            None => continue,
        };
        if out_date >= query_date {
            continue;
        }
        let out_seq = match series.cycle_at(out_date) {
            Some(s) => s,
            None => continue,
        };
        let input_ok = seq.start_date.weekday() == query_input_date.weekday();
        let output_ok = out_date.weekday() == query_date.weekday();
        let keep = match pairing {
            WeekdayPairing::Both => input_ok && output_ok,
            WeekdayPairing::InputOnly => input_ok,
            WeekdayPairing::OutputOnly => output_ok,
            WeekdayPairing::Off => true,
        };
        if !keep {
            continue;
        }
        let (input, coding) = encode_input(seq)?;
        let mut output = encode_output(&out_seq, &coding, horizon)?;
        // Exclusions can make series positions jump more than `horizon`
        // between the pair's dates; the coding source is the input cycle.
        output.source_index = input.source_index;
        pairs.push(PatternPair { input, output });
    }
    if pairs.is_empty() {
        return Err(Error::EmptyTrainingSet(query_date));
    }
    TrainingSet::new(pairs)
}

#[cfg(test)]
// Tests assert against frozen decimal expectations like 0.70711.
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::data::TimeSeries;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(values: &[f64]) -> SeasonalSequence {
        SeasonalSequence::new(
            values.to_vec(),
            1,
            NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn encode_simple_ramp() {
        let (pattern, coding) = encode_input(&seq(&[1.0, 2.0, 3.0])).unwrap();
        assert!((coding.mean - 2.0).abs() < 1e-15);
        assert!((coding.dispersion - 2.0_f64.sqrt()).abs() < 1e-15);
        let expected = [-0.70711, 0.0, 0.70711];
        for (got, want) in pattern.x.iter().zip(expected) {
            assert!((got - want).abs() < 1e-5, "{got} vs {want}");
        }
    }

    #[test]
    fn constant_sequence_is_rejected() {
        assert!(matches!(
            encode_input(&seq(&[5.0, 5.0, 5.0])),
            Err(Error::ZeroDispersion)
        ));
    }

    #[test]
    fn unified_sequence_is_a_fixed_point() {
        let v = [-(0.5_f64.sqrt()), 0.0, 0.5_f64.sqrt()];
        let (pattern, coding) = encode_input(&seq(&v)).unwrap();
        assert!(coding.mean.abs() < 1e-15);
        assert!((coding.dispersion - 1.0).abs() < 1e-12);
        for (got, want) in pattern.x.iter().zip(v) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        assert!(matches!(
            encode_input(&SeasonalSequence {
                values: vec![1.0, f64::NAN, 3.0],
                index: 1,
                start_date: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
            }),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn encode_output_uses_input_coding() {
        let coding = CodingVariables {
            mean: 2.0,
            dispersion: 2.0_f64.sqrt(),
        };
        let out = encode_output(&seq(&[3.0, 4.0, 5.0]), &coding, 1).unwrap();
        let expected = [0.70711, 1.41421, 2.12132];
        for (got, want) in out.y.iter().zip(expected) {
            assert!((got - want).abs() < 1e-5);
        }
    }

    #[test]
    fn encode_output_of_the_input_equals_its_x_pattern() {
        let s = seq(&[10.0, 30.0, 50.0, 20.0]);
        let (pattern, coding) = encode_input(&s).unwrap();
        let out = encode_output(&s, &coding, 1).unwrap();
        assert_eq!(out.y, pattern.x);
    }

    #[test]
    fn centered_future_encodes_to_zero() {
        let coding = CodingVariables {
            mean: 2.0,
            dispersion: 2.0_f64.sqrt(),
        };
        let out = encode_output(&seq(&[2.0, 2.0, 2.0]), &coding, 1).unwrap();
        assert!(out.y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn decode_inverts_the_ramp_example() {
        let coding = CodingVariables {
            mean: 2.0,
            dispersion: 1.41421,
        };
        let decoded = decode(&[-0.70711, 0.0, 0.70711], &coding).unwrap();
        let expected = [1.0, 2.0, 3.0];
        for (got, want) in decoded.iter().zip(expected) {
            assert!((got - want).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_pattern_decodes_to_the_mean() {
        let coding = CodingVariables {
            mean: 7.0,
            dispersion: 3.0,
        };
        assert_eq!(decode(&[0.0, 0.0, 0.0], &coding).unwrap(), vec![7.0; 3]);
    }

    #[test]
    fn round_trip_over_random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let n = rng.random_range(2..48usize);
            let scale: f64 = rng.random_range(0.1..1e4);
            let values: Vec<f64> = (0..n)
                .map(|i| scale * (1.0 + rng.random_range(-0.5..0.5)) + i as f64 * 1e-3)
                .collect();
            let s = seq(&values);
            let (_, coding) = encode_input(&s).unwrap();
            let y = encode_output(&s, &coding, 1).unwrap();
            let decoded = decode(&y.y, &coding).unwrap();
            let num: f64 = decoded
                .iter()
                .zip(&values)
                .map(|(d, v)| (d - v) * (d - v))
                .sum::<f64>()
                .sqrt();
            let den: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den < 1e-9, "round-trip error {}", num / den);
        }
    }

    fn weekday_series(days: usize, start: NaiveDate) -> TimeSeries {
        // Small 4-point cycles; value pattern varies by day so dispersion > 0.
        let cycles: Vec<(NaiveDate, Vec<f64>)> = (0..days)
            .map(|d| {
                let date = start.checked_add_days(Days::new(d as u64)).unwrap();
                let base = 100.0 + d as f64;
                (date, vec![base, base + 3.0, base + 7.0, base + 2.0])
            })
            .collect();
        TimeSeries::from_days(4, cycles).unwrap()
    }

    #[test]
    fn weekday_pairing_keeps_only_matching_pairs() {
        // 2024-01-01 is a Monday, so days 1..=21 end on Sunday 2024-01-21
        // and the query day 22 (2024-01-22) is a Monday.
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let series = weekday_series(21, start);
        let query = NaiveDate::from_ymd_opt(2024, 1, 22).unwrap();

        let phi = build_training_set(&series, query, 1, WeekdayPairing::Both).unwrap();
        assert_eq!(phi.len(), 2);
        let input_dates: Vec<NaiveDate> = phi
            .pairs()
            .iter()
            .map(|p| start
                .checked_add_days(Days::new((p.input.source_index - 1) as u64))
                .unwrap())
            .collect();
        assert_eq!(
            input_dates,
            vec![
                NaiveDate::from_ymd_opt(2024, 1, 7).unwrap(),
                NaiveDate::from_ymd_opt(2024, 1, 14).unwrap(),
            ]
        );
        for d in input_dates {
            assert_eq!(d.weekday(), Weekday::Sun);
        }

        let all = build_training_set(&series, query, 1, WeekdayPairing::Off).unwrap();
        assert_eq!(all.len(), 20);
    }

    #[test]
    fn training_set_is_ordered_by_index() {
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let series = weekday_series(30, start);
        let query = NaiveDate::from_ymd_opt(2024, 1, 31).unwrap();
        let phi = build_training_set(&series, query, 1, WeekdayPairing::Off).unwrap();
        let indices: Vec<usize> = phi.pairs().iter().map(|p| p.input.source_index).collect();
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        assert_eq!(indices, sorted);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let series = weekday_series(3, start);
        // Horizon so large that no output cycle can precede the query.
        let query = NaiveDate::from_ymd_opt(2024, 1, 4).unwrap();
        assert!(matches!(
            build_training_set(&series, query, 30, WeekdayPairing::Off),
            Err(Error::EmptyTrainingSet(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn x_patterns_have_zero_mean_and_unit_norm(
                values in proptest::collection::vec(-1e6_f64..1e6, 2..64)
            ) {
                let s = SeasonalSequence::new(
                    values,
                    1,
                    NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
                ).unwrap();
                match encode_input(&s) {
                    Ok((pattern, _)) => {
                        let mean: f64 =
                            pattern.x.iter().sum::<f64>() / pattern.x.len() as f64;
                        let norm: f64 =
                            pattern.x.iter().map(|v| v * v).sum::<f64>().sqrt();
                        prop_assert!(mean.abs() < 1e-10);
                        prop_assert!((norm - 1.0).abs() < 1e-10);
                    }
                    Err(Error::ZeroDispersion) => {}
                    Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
                }
            }

            #[test]
            fn encoding_is_invariant_to_positive_affine_maps(
                values in proptest::collection::vec(0.0_f64..1e3, 3..32),
                scale in 0.01_f64..100.0,
                shift in -1e3_f64..1e3,
            ) {
                let spread: Vec<f64> = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v + i as f64)
                    .collect();
                let mapped: Vec<f64> =
                    spread.iter().map(|v| scale * v + shift).collect();
                let date = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
                let a = SeasonalSequence::new(spread, 1, date).unwrap();
                let b = SeasonalSequence::new(mapped, 1, date).unwrap();
                let (xa, _) = encode_input(&a).unwrap();
                let (xb, _) = encode_input(&b).unwrap();
                for (va, vb) in xa.x.iter().zip(xb.x.iter()) {
                    prop_assert!((va - vb).abs() < 1e-9);
                }
            }
        }
    }
}
