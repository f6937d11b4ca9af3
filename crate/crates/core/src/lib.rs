//! Pattern-based time series forecasting with ensembles of randomized
//! neural networks.
//!
//! The pipeline has three stages:
//!
//! 1. **Encoding** ([`patterns`]): seasonal cycles of a multi-seasonal
//!    series (e.g. daily profiles of an hourly load series) are mapped to
//!    unified patterns with zero mean and unit norm, which strips level
//!    and dispersion and leaves only cycle shape.
//! 2. **Learning** ([`randnn`]): a single-hidden-layer feedforward network
//!    whose hidden weights are drawn at random and whose biases place each
//!    sigmoid's steepest fragment on a training pattern. Only the output
//!    weights are learned, in closed form, via the Moore-Penrose
//!    pseudoinverse.
//! 3. **Ensembling** ([`ensemble`]): many such learners are combined by
//!    plain averaging; six strategies control how member diversity is
//!    generated (fresh random parameters, training subsets, feature
//!    subsets, node pruning, weight pruning, data noising).
//!
//! [`data`] handles CSV ingestion, calendars, synthetic series generation
//! and the rolling-origin forecast driver; [`evaluation`] provides the
//! forecast-quality metrics and the Giacomini-White conditional
//! predictive ability test.
//!
//! # Reproducibility
//!
//! All randomness flows through [`rand_chacha::ChaCha8Rng`] streams seeded
//! from explicit `u64` seeds, so a given seed produces the same model on
//! every platform and regardless of thread count. Seed derivations are
//! documented on [`ensemble::train_ensemble`] and
//! [`data::rolling_forecast`].

pub mod codec;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod patterns;
pub mod randnn;

pub use data::{
    load_csv, load_exclusions, naive_forecast, rolling_forecast, synth_series, CsvSchema,
    DayForecast, ForecastModel, RollingForecastResult, RollingOptions, SkippedDay, SynthParams,
    TimeSeries, DAY_SEED_STRIDE,
};
pub use ensemble::{diversity, train_ensemble, DiversityReport, DiversityStrategy, Ensemble};
pub use error::{Error, Result};
pub use evaluation::{
    ape_distribution, compute_metrics, gw_test, ApeDistribution, GwDirection, GwTestResult,
    MetricsReport,
};
pub use patterns::{
    build_training_set, decode, encode_input, encode_output, CodingVariables, InputPattern,
    OutputPattern, PatternPair, SeasonalSequence, TrainingSet, WeekdayPairing,
};
pub use randnn::{
    fit_output_weights, generate_hidden_params, grid_search_cv, hidden_output, train, RandNNConfig,
    RandNNModel,
};
