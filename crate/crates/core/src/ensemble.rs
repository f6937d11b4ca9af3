//! Ensembles of randomized networks with controlled member diversity.
//!
//! An ensemble holds `M` members whose forecasts are averaged. Diversity
//! between members comes from exactly one source, selected by
//! [`DiversityStrategy`]:
//!
//! - **randomized-params** — every member reruns all three training steps
//!   with fresh random hidden weights and anchors; the member slope-angle
//!   bound is the diversity parameter.
//! - **training-subsets** — hidden parameters are generated once from the
//!   full training set and shared; each member refits its output weights
//!   on a random subsample (without replacement) of `round(eta·N)` pairs.
//! - **feature-subsets** — a shared base weight matrix over all features;
//!   each member keeps `round(kappa·n)` randomly chosen input positions,
//!   recomputes its biases on the restricted anchors and refits output
//!   weights on the full training set restricted to those inputs. Outputs
//!   keep the full pattern length.
//! - **node-pruning** — one template network; each member keeps a random
//!   subset of `round(rho·m)` hidden nodes and refits output weights.
//! - **weight-pruning** — one template network; each member zeroes
//!   `round(lambda·m·n)` randomly chosen hidden-weight entries, keeps the
//!   biases, and refits output weights.
//! - **data-noising** — shared hidden parameters; each member refits
//!   output weights on multiplicatively noised pattern copies
//!   `x·(1+ζ)`, `y·(1+ξ)` with `ζ, ξ ~ N(0, sigma)`.
//!
//! # Seed discipline
//!
//! The shared template (when a strategy has one) is generated from
//! `base.seed`; member `k` (1-based, as in the aggregation sum) draws its
//! member-specific randomness from a fresh `ChaCha8` stream seeded with
//! `base.seed + k`. Members are therefore independent of training order
//! and may be trained in parallel with identical results.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patterns::{decode, CodingVariables, SeasonalSequence, TrainingSet};
use crate::randnn::{
    fit_output_weights, generate_hidden_params, hidden_output, train, RandNNConfig, RandNNModel,
};

/// How ensemble members are made to differ. See the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DiversityStrategy {
    RandomizedParams {
        /// Member slope-angle bound in degrees, inside (0, 90).
        alpha_max: f64,
    },
    TrainingSubsets {
        /// Subsample fraction, inside (0, 1].
        eta: f64,
    },
    FeatureSubsets {
        /// Feature fraction, inside (0, 1].
        kappa: f64,
        /// Keep the template's full-dimension biases instead of
        /// recomputing them on the restricted anchors.
        #[serde(default)]
        reuse_template_biases: bool,
    },
    NodePruning {
        /// Fraction of hidden nodes kept, inside (0, 1].
        rho: f64,
    },
    WeightPruning {
        /// Fraction of hidden weights zeroed, inside [0, 1).
        lambda: f64,
    },
    DataNoising {
        /// Standard deviation of the multiplicative Gaussian noise, >= 0.
        sigma: f64,
    },
}

impl DiversityStrategy {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, value: f64, domain: &str| Error::InvalidParameter {
            name,
            reason: format!("{value} outside {domain}"),
        };
        match *self {
            Self::RandomizedParams { alpha_max } => {
                if !(alpha_max > 0.0 && alpha_max < 90.0) {
                    return Err(Error::InvalidAngle(alpha_max));
                }
            }
            Self::TrainingSubsets { eta } => {
                if !(eta > 0.0 && eta <= 1.0) {
                    return Err(bad("eta", eta, "(0, 1]"));
                }
            }
            Self::FeatureSubsets { kappa, .. } => {
                if !(kappa > 0.0 && kappa <= 1.0) {
                    return Err(bad("kappa", kappa, "(0, 1]"));
                }
            }
            Self::NodePruning { rho } => {
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(bad("rho", rho, "(0, 1]"));
                }
            }
            Self::WeightPruning { lambda } => {
                if !(lambda >= 0.0 && lambda < 1.0) {
                    return Err(bad("lambda", lambda, "[0, 1)"));
                }
            }
            Self::DataNoising { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(bad("sigma", sigma, "[0, inf)"));
                }
            }
        }
        Ok(())
    }

    /// The numeric diversity parameter, for reports and sweep tables.
    pub fn parameter(&self) -> f64 {
        match *self {
            Self::RandomizedParams { alpha_max } => alpha_max,
            Self::TrainingSubsets { eta } => eta,
            Self::FeatureSubsets { kappa, .. } => kappa,
            Self::NodePruning { rho } => rho,
            Self::WeightPruning { lambda } => lambda,
            Self::DataNoising { sigma } => sigma,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::RandomizedParams { .. } => "randomized-params",
            Self::TrainingSubsets { .. } => "training-subsets",
            Self::FeatureSubsets { .. } => "feature-subsets",
            Self::NodePruning { .. } => "node-pruning",
            Self::WeightPruning { .. } => "weight-pruning",
            Self::DataNoising { .. } => "data-noising",
        }
    }

    /// Replace the diversity parameter, keeping the kind (used by sweeps).
    pub fn with_parameter(&self, value: f64) -> Self {
        match *self {
            Self::RandomizedParams { .. } => Self::RandomizedParams { alpha_max: value },
            Self::TrainingSubsets { .. } => Self::TrainingSubsets { eta: value },
            Self::FeatureSubsets {
                reuse_template_biases,
                ..
            } => Self::FeatureSubsets {
                kappa: value,
                reuse_template_biases,
            },
            Self::NodePruning { .. } => Self::NodePruning { rho: value },
            Self::WeightPruning { .. } => Self::WeightPruning { lambda: value },
            Self::DataNoising { .. } => Self::DataNoising { sigma: value },
        }
    }
}

/// Hidden parameters shared by the members of template-based strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenTemplate {
    pub weights: DMatrix<f64>,
    pub biases: DVector<f64>,
    pub anchor_indices: Vec<usize>,
}

/// A trained ensemble.
#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<RandNNModel>,
    strategy: DiversityStrategy,
    shared_template: Option<HiddenTemplate>,
    base_config: RandNNConfig,
}

/// Ensemble diversity: the average per-position population standard
/// deviation of member forecasts over a test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    /// Diversity in the series' units; zero iff all members forecast
    /// identically.
    pub value: f64,
    /// Number of test cycles the statistic averages over.
    pub test_set_size: usize,
}

impl Ensemble {
    pub(crate) fn from_parts(
        members: Vec<RandNNModel>,
        strategy: DiversityStrategy,
        shared_template: Option<HiddenTemplate>,
        base_config: RandNNConfig,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParameter {
                name: "members",
                reason: "an ensemble needs at least one member".into(),
            });
        }
        Ok(Self {
            members,
            strategy,
            shared_template,
            base_config,
        })
    }

    pub fn members(&self) -> &[RandNNModel] {
        &self.members
    }

    /// Member count `M`.
    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn strategy(&self) -> &DiversityStrategy {
        &self.strategy
    }

    pub fn base_config(&self) -> &RandNNConfig {
        &self.base_config
    }

    pub fn shared_template(&self) -> Option<&HiddenTemplate> {
        self.shared_template.as_ref()
    }

    /// Decoded forecast of every member for one query cycle.
    ///
    /// The query is encoded with the supplied coding variables, restricted
    /// to each member's active features where applicable, and every
    /// member's output pattern is decoded with those same coding
    /// variables.
    pub fn member_forecasts(
        &self,
        query: &SeasonalSequence,
        coding: &CodingVariables,
    ) -> Result<Vec<Vec<f64>>> {
        if coding.dispersion <= 0.0 {
            return Err(Error::ZeroDispersion);
        }
        if query.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("query cycle"));
        }
        let x_full: Vec<f64> = query
            .values
            .iter()
            .map(|v| (v - coding.mean) / coding.dispersion)
            .collect();
        self.members
            .iter()
            .map(|member| {
                let x = member.restrict_input(&x_full)?;
                let y_hat = member.predict(&x)?;
                decode(&y_hat, coding)
            })
            .collect()
    }

    /// Ensemble forecast: the element-wise mean of the decoded member
    /// forecasts.
    pub fn predict(
        &self,
        query: &SeasonalSequence,
        coding: &CodingVariables,
    ) -> Result<Vec<f64>> {
        let forecasts = self.member_forecasts(query, coding)?;
        Ok(mean_forecast(&forecasts))
    }
}

/// Element-wise mean over member forecasts.
///
/// Accumulates deviations from the first member, so identical members
/// average to exactly their common forecast.
pub(crate) fn mean_forecast(member_forecasts: &[Vec<f64>]) -> Vec<f64> {
    let m = member_forecasts.len() as f64;
    let first = &member_forecasts[0];
    let mut out = vec![0.0; first.len()];
    for forecast in &member_forecasts[1..] {
        for (o, (v, f)) in out.iter_mut().zip(forecast.iter().zip(first)) {
            *o += v - f;
        }
    }
    for (o, f) in out.iter_mut().zip(first) {
        *o = f + *o / m;
    }
    out
}

/// `round(fraction·total)`, optionally clamped to at least one.
fn rounded_count(fraction: f64, total: usize, min_one: bool) -> usize {
    let count = (fraction * total as f64).round() as usize;
    let count = count.min(total);
    if min_one {
        count.max(1)
    } else {
        count
    }
}

/// Deterministic sample of `amount` distinct indices from `0..total`,
/// sorted ascending.
fn sample_sorted<R: Rng>(rng: &mut R, total: usize, amount: usize) -> Vec<usize> {
    let mut picked = rand::seq::index::sample(rng, total, amount).into_vec();
    picked.sort_unstable();
    picked
}

fn select_rows(matrix: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), matrix.ncols(), |i, j| matrix[(rows[i], j)])
}

fn select_cols(matrix: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(matrix.nrows(), cols.len(), |i, j| matrix[(i, cols[j])])
}

/// Train an `M`-member ensemble under one diversity strategy.
///
/// `base.hidden_nodes` sizes the template network (and the members of the
/// re-randomizing strategy); `base.alpha_max` is the template angle bound,
/// overridden per member only by the re-randomizing strategy's own angle.
/// Member `k` uses seed `base.seed + k`; see the module docs.
pub fn train_ensemble(
    phi: &TrainingSet,
    strategy: &DiversityStrategy,
    members: usize,
    base: &RandNNConfig,
) -> Result<Ensemble> {
    strategy.validate()?;
    base.validate()?;
    if members == 0 {
        return Err(Error::InvalidParameter {
            name: "members",
            reason: "an ensemble needs at least one member".into(),
        });
    }

    let n = phi.pattern_len();
    let n_pairs = phi.len();
    let x_mat = phi.inputs_matrix();
    let y_mat = phi.outputs_matrix();

    if let DiversityStrategy::RandomizedParams { alpha_max } = strategy {
        let trained: Result<Vec<RandNNModel>> = (1..=members as u64)
            .into_par_iter()
            .map(|k| {
                let config = RandNNConfig::new(
                    base.hidden_nodes,
                    *alpha_max,
                    base.seed.wrapping_add(k),
                );
                train(phi, &config)
            })
            .collect();
        return Ensemble::from_parts(trained?, *strategy, None, *base);
    }

    // Template-based strategies: shared hidden parameters from base.seed.
    let mut template_rng = ChaCha8Rng::seed_from_u64(base.seed);
    let pool = phi.x_pool();
    let (t_weights, t_biases, t_anchors) =
        generate_hidden_params(n, base, &pool, &mut template_rng)?;
    let template = HiddenTemplate {
        weights: t_weights,
        biases: t_biases,
        anchor_indices: t_anchors,
    };
    // H over the full training set, reusable whenever hidden parameters
    // and inputs are untouched (row/column selection is exact).
    let template_h = hidden_output(&template.weights, &template.biases, &x_mat);

    let build_member = |k: u64| -> Result<RandNNModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(base.seed.wrapping_add(k));
        match *strategy {
            DiversityStrategy::RandomizedParams { .. } => unreachable!("handled above"),
            DiversityStrategy::TrainingSubsets { eta } => {
                let size = rounded_count(eta, n_pairs, true);
                let rows = sample_sorted(&mut rng, n_pairs, size);
                if rows.is_empty() {
                    return Err(Error::EmptySubsample);
                }
                let beta = fit_output_weights(
                    &select_rows(&template_h, &rows),
                    &select_rows(&y_mat, &rows),
                )?;
                RandNNModel::from_parts(
                    template.weights.clone(),
                    template.biases.clone(),
                    beta,
                    *base,
                    None,
                    template.anchor_indices.clone(),
                )
            }
            DiversityStrategy::FeatureSubsets {
                kappa,
                reuse_template_biases,
            } => {
                let size = rounded_count(kappa, n, true);
                let feats = sample_sorted(&mut rng, n, size);
                if feats.is_empty() {
                    return Err(Error::EmptySubsample);
                }
                let weights = select_cols(&template.weights, &feats);
                let biases = if reuse_template_biases {
                    template.biases.clone()
                } else {
                    // Re-place each sigmoid on its anchor restricted to
                    // the member's features, mirroring bias placement.
                    DVector::from_fn(weights.nrows(), |j, _| {
                        let anchor = pool[template.anchor_indices[j]];
                        let mut dot = 0.0;
                        for (t, &feat) in feats.iter().enumerate() {
                            dot += weights[(j, t)] * anchor[feat];
                        }
                        -dot
                    })
                };
                let h = hidden_output(&weights, &biases, &select_cols(&x_mat, &feats));
                let beta = fit_output_weights(&h, &y_mat)?;
                let mut mask = vec![false; n];
                for &f in &feats {
                    mask[f] = true;
                }
                RandNNModel::from_parts(
                    weights,
                    biases,
                    beta,
                    *base,
                    Some(mask),
                    template.anchor_indices.clone(),
                )
            }
            DiversityStrategy::NodePruning { rho } => {
                let keep = rounded_count(rho, base.hidden_nodes, true);
                let nodes = sample_sorted(&mut rng, base.hidden_nodes, keep);
                if nodes.is_empty() {
                    return Err(Error::EmptySubsample);
                }
                let weights = select_rows(&template.weights, &nodes);
                let biases = DVector::from_fn(nodes.len(), |j, _| template.biases[nodes[j]]);
                let anchors: Vec<usize> =
                    nodes.iter().map(|&j| template.anchor_indices[j]).collect();
                let beta = fit_output_weights(&select_cols(&template_h, &nodes), &y_mat)?;
                RandNNModel::from_parts(weights, biases, beta, *base, None, anchors)
            }
            DiversityStrategy::WeightPruning { lambda } => {
                let total = base.hidden_nodes * n;
                let pruned = rounded_count(lambda, total, false);
                let positions = rand::seq::index::sample(&mut rng, total, pruned);
                let mut weights = template.weights.clone();
                for pos in positions {
                    weights[(pos / n, pos % n)] = 0.0;
                }
                let h = hidden_output(&weights, &template.biases, &x_mat);
                let beta = fit_output_weights(&h, &y_mat)?;
                RandNNModel::from_parts(
                    weights,
                    template.biases.clone(),
                    beta,
                    *base,
                    None,
                    template.anchor_indices.clone(),
                )
            }
            DiversityStrategy::DataNoising { sigma } => {
                let (x_noised, y_noised) = if sigma == 0.0 {
                    (x_mat.clone(), y_mat.clone())
                } else {
                    let normal = Normal::new(0.0, sigma).map_err(|_| {
                        Error::InvalidParameter {
                            name: "sigma",
                            reason: format!("{sigma} is not a valid noise level"),
                        }
                    })?;
                    let mut xn = x_mat.clone();
                    let mut yn = y_mat.clone();
                    // Per pair: noise the x elements, then the y elements.
                    for i in 0..n_pairs {
                        for t in 0..n {
                            xn[(i, t)] *= 1.0 + normal.sample(&mut rng);
                        }
                        for t in 0..n {
                            yn[(i, t)] *= 1.0 + normal.sample(&mut rng);
                        }
                    }
                    (xn, yn)
                };
                let h = hidden_output(&template.weights, &template.biases, &x_noised);
                let beta = fit_output_weights(&h, &y_noised)?;
                RandNNModel::from_parts(
                    template.weights.clone(),
                    template.biases.clone(),
                    beta,
                    *base,
                    None,
                    template.anchor_indices.clone(),
                )
            }
        }
    };

    let trained: Result<Vec<RandNNModel>> =
        (1..=members as u64).into_par_iter().map(build_member).collect();
    Ensemble::from_parts(trained?, *strategy, Some(template), *base)
}

/// Ensemble diversity over a test set.
///
/// `member_forecasts[k][i]` is member `k`'s decoded forecast for test
/// cycle `i`. The statistic is the population (divide-by-M) standard
/// deviation of the member forecasts at each (cycle, position), averaged
/// over all positions of all test cycles.
pub fn diversity(member_forecasts: &[Vec<Vec<f64>>]) -> Result<DiversityReport> {
    let m = member_forecasts.len();
    if m == 0 {
        return Err(Error::ShapeMismatch("no member forecasts".into()));
    }
    let cycles = member_forecasts[0].len();
    if cycles == 0 {
        return Err(Error::ShapeMismatch("empty test set".into()));
    }
    let n = member_forecasts[0][0].len();
    for member in member_forecasts {
        if member.len() != cycles || member.iter().any(|f| f.len() != n) {
            return Err(Error::ShapeMismatch(
                "member forecasts differ in shape".into(),
            ));
        }
    }
    let mut total = 0.0;
    for i in 0..cycles {
        for t in 0..n {
            // Mean via deviations from the first member: exactly zero
            // variance when all members forecast identically.
            let first = member_forecasts[0][i][t];
            let mean = first
                + member_forecasts[1..]
                    .iter()
                    .map(|member| member[i][t] - first)
                    .sum::<f64>()
                    / m as f64;
            let var = member_forecasts
                .iter()
                .map(|member| {
                    let d = member[i][t] - mean;
                    d * d
                })
                .sum::<f64>()
                / m as f64;
            total += var.sqrt();
        }
    }
    Ok(DiversityReport {
        value: total / (n * cycles) as f64,
        test_set_size: cycles,
    })
}
