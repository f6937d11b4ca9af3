//! Shared fixtures for the benchmark targets.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use randcast_core::{
    encode_input, encode_output, PatternPair, SeasonalSequence, SynthParams, TimeSeries,
    TrainingSet,
};

/// A training set of encoded load-like pattern pairs.
pub fn training_set(n: usize, pairs: usize, seed: u64) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let date = NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date");
    let collected = (0..pairs)
        .map(|i| {
            let current: Vec<f64> = (0..n)
                .map(|t| 1000.0 * (1.0 + 0.3 * rng.random_range(-1.0..1.0)) + t as f64)
                .collect();
            let future: Vec<f64> = (0..n)
                .map(|t| 1000.0 * (1.0 + 0.3 * rng.random_range(-1.0..1.0)) + t as f64)
                .collect();
            let current = SeasonalSequence::new(current, i + 1, date).expect("valid");
            let future = SeasonalSequence::new(future, i + 2, date).expect("valid");
            let (input, coding) = encode_input(&current).expect("encodable");
            let output = encode_output(&future, &coding, 1).expect("encodable");
            PatternPair { input, output }
        })
        .collect();
    TrainingSet::new(collected).expect("non-empty")
}

/// A two-year synthetic hourly series.
pub fn series(seed: u64) -> TimeSeries {
    randcast_core::synth_series(&SynthParams {
        days: 730,
        noise_sd: 0.02,
        seed,
        ..SynthParams::default()
    })
    .expect("synthesizable")
}
