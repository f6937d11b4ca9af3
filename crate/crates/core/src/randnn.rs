//! The base learner: a randomized single-hidden-layer feedforward network.
//!
//! Training is closed-form and has three steps. Hidden weights are drawn
//! i.i.d. uniform from `[-u, u]` with `u = 4·tan(alpha_max)`, where
//! `alpha_max` bounds the sigmoid slope angles; each hidden bias is then
//! placed so that the sigmoid's steepest point falls on a randomly chosen
//! training pattern (the node's *anchor*), which keeps every node active
//! inside the input hypercube; finally the output weights are the
//! minimum-norm least-squares solution obtained from the Moore-Penrose
//! pseudoinverse of the hidden-layer output matrix.
//!
//! All random draws come from a `ChaCha8` stream seeded with the config's
//! `seed`, in a fixed order (per node: the `n` weights, then the anchor
//! index), so a `(training set, seed)` pair produces the same model on
//! every platform.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::patterns::TrainingSet;

/// Hyperparameters of one randomized network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandNNConfig {
    /// Hidden node count `m`.
    pub hidden_nodes: usize,
    /// Upper bound for sigmoid slope angles, in degrees, inside (0, 90).
    pub alpha_max: f64,
    /// Seed of the random stream for weights and anchors.
    pub seed: u64,
}

impl RandNNConfig {
    pub fn new(hidden_nodes: usize, alpha_max: f64, seed: u64) -> Self {
        Self {
            hidden_nodes,
            alpha_max,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_nodes == 0 {
            return Err(Error::InvalidParameter {
                name: "hidden_nodes",
                reason: "must be at least 1".into(),
            });
        }
        self.weight_bound().map(|_| ())
    }

    /// Half-width `u = 4·tan(alpha_max)` of the weight interval.
    pub fn weight_bound(&self) -> Result<f64> {
        if !(self.alpha_max > 0.0 && self.alpha_max < 90.0) {
            return Err(Error::InvalidAngle(self.alpha_max));
        }
        Ok(4.0 * self.alpha_max.to_radians().tan())
    }
}

/// A trained randomized network.
///
/// `feature_mask`, when present, marks which of the full pattern's
/// positions this model consumes; [`RandNNModel::predict`] then expects an
/// input of the *restricted* length. The anchor indices record which
/// training pattern placed each hidden bias.
#[derive(Debug, Clone, PartialEq)]
pub struct RandNNModel {
    hidden_weights: DMatrix<f64>,
    hidden_biases: DVector<f64>,
    output_weights: DMatrix<f64>,
    config: RandNNConfig,
    feature_mask: Option<Vec<bool>>,
    anchor_indices: Vec<usize>,
}

impl RandNNModel {
    pub fn from_parts(
        hidden_weights: DMatrix<f64>,
        hidden_biases: DVector<f64>,
        output_weights: DMatrix<f64>,
        config: RandNNConfig,
        feature_mask: Option<Vec<bool>>,
        anchor_indices: Vec<usize>,
    ) -> Result<Self> {
        let m = hidden_weights.nrows();
        if hidden_biases.len() != m || output_weights.nrows() != m || anchor_indices.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "inconsistent hidden node count: weights {m}, biases {}, output {}, anchors {}",
                hidden_biases.len(),
                output_weights.nrows(),
                anchor_indices.len()
            )));
        }
        if let Some(mask) = &feature_mask {
            let active = mask.iter().filter(|&&b| b).count();
            if active != hidden_weights.ncols() {
                return Err(Error::ShapeMismatch(format!(
                    "feature mask activates {active} features, weights expect {}",
                    hidden_weights.ncols()
                )));
            }
        }
        let finite = hidden_weights.iter().all(|v| v.is_finite())
            && hidden_biases.iter().all(|v| v.is_finite())
            && output_weights.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("model parameters"));
        }
        let bound = config.weight_bound()?;
        if hidden_weights.iter().any(|v| v.abs() > bound) {
            return Err(Error::InvalidParameter {
                name: "hidden_weights",
                reason: format!("magnitude exceeds the weight bound {bound}"),
            });
        }
        Ok(Self {
            hidden_weights,
            hidden_biases,
            output_weights,
            config,
            feature_mask,
            anchor_indices,
        })
    }

    /// Number of inputs this model consumes (active features).
    pub fn input_dim(&self) -> usize {
        self.hidden_weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.output_weights.ncols()
    }

    pub fn hidden_nodes(&self) -> usize {
        self.hidden_weights.nrows()
    }

    pub fn hidden_weights(&self) -> &DMatrix<f64> {
        &self.hidden_weights
    }

    pub fn hidden_biases(&self) -> &DVector<f64> {
        &self.hidden_biases
    }

    pub fn output_weights(&self) -> &DMatrix<f64> {
        &self.output_weights
    }

    pub fn config(&self) -> &RandNNConfig {
        &self.config
    }

    pub fn feature_mask(&self) -> Option<&[bool]> {
        self.feature_mask.as_deref()
    }

    pub fn anchor_indices(&self) -> &[usize] {
        &self.anchor_indices
    }

    /// Select this model's active features out of a full-length pattern.
    pub fn restrict_input(&self, x_full: &[f64]) -> Result<Vec<f64>> {
        match &self.feature_mask {
            None => {
                if x_full.len() != self.input_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.input_dim(),
                        got: x_full.len(),
                    });
                }
                Ok(x_full.to_vec())
            }
            Some(mask) => {
                if x_full.len() != mask.len() {
                    return Err(Error::DimensionMismatch {
                        expected: mask.len(),
                        got: x_full.len(),
                    });
                }
                Ok(x_full
                    .iter()
                    .zip(mask)
                    .filter_map(|(v, keep)| keep.then_some(*v))
                    .collect())
            }
        }
    }

    /// Forecast one output pattern from one (restricted) input pattern.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let m = self.hidden_nodes();
        let mut h = vec![0.0; m];
        for (j, h_j) in h.iter_mut().enumerate() {
            let mut z = 0.0;
            for (t, x_t) in x.iter().enumerate() {
                z += self.hidden_weights[(j, t)] * x_t;
            }
            *h_j = sigmoid(z + self.hidden_biases[j]);
        }
        let n_out = self.output_dim();
        let mut y = vec![0.0; n_out];
        for (t, y_t) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, h_j) in h.iter().enumerate() {
                acc += h_j * self.output_weights[(j, t)];
            }
            *y_t = acc;
        }
        Ok(y)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Step 1 of training: draw hidden weights and place biases on anchors.
///
/// Weights are i.i.d. uniform on `[-u, u]`; for each node one anchor
/// pattern is drawn from `x_pool` (with replacement) and the bias is set
/// to the negated weight/anchor inner product, so the node's
/// pre-activation at its anchor is exactly zero.
///
/// Returns `(weights, biases, anchor indices)`.
pub fn generate_hidden_params<R: Rng>(
    input_dim: usize,
    config: &RandNNConfig,
    x_pool: &[&[f64]],
    rng: &mut R,
) -> Result<(DMatrix<f64>, DVector<f64>, Vec<usize>)> {
    config.validate()?;
    if x_pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    for x in x_pool {
        if x.len() != input_dim {
            return Err(Error::DimensionMismatch {
                expected: input_dim,
                got: x.len(),
            });
        }
    }
    let u = config.weight_bound()?;
    let m = config.hidden_nodes;
    let mut weights = DMatrix::zeros(m, input_dim);
    let mut biases = DVector::zeros(m);
    let mut anchors = Vec::with_capacity(m);
    for j in 0..m {
        for t in 0..input_dim {
            weights[(j, t)] = rng.random_range(-u..=u);
        }
        let anchor = rng.random_range(0..x_pool.len());
        let mut dot = 0.0;
        for (t, x_t) in x_pool[anchor].iter().enumerate() {
            dot += weights[(j, t)] * x_t;
        }
        biases[j] = -dot;
        anchors.push(anchor);
    }
    Ok((weights, biases, anchors))
}

/// Step 2 of training: the hidden-layer output matrix.
///
/// `inputs` is N×n (one pattern per row); the result is N×m with
/// `H[i,j] = sigmoid(a_j·x_i + b_j)`. The inner product accumulates in
/// feature order before the bias is added, mirroring the bias placement,
/// so an anchor row yields exactly 0.5.
pub fn hidden_output(
    weights: &DMatrix<f64>,
    biases: &DVector<f64>,
    inputs: &DMatrix<f64>,
) -> DMatrix<f64> {
    debug_assert_eq!(weights.ncols(), inputs.ncols());
    debug_assert_eq!(biases.len(), weights.nrows());
    let (n_rows, m) = (inputs.nrows(), weights.nrows());
    let mut h = DMatrix::zeros(n_rows, m);
    for i in 0..n_rows {
        for j in 0..m {
            let mut z = 0.0;
            for t in 0..inputs.ncols() {
                z += weights[(j, t)] * inputs[(i, t)];
            }
            h[(i, j)] = sigmoid(z + biases[j]);
        }
    }
    h
}

/// Step 3 of training: output weights as the minimum-norm least-squares
/// solution of `H·β = Y`.
pub fn fit_output_weights(h: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::min_norm_lstsq(h, y)
}

/// Run the three training steps on a training set.
///
/// Deterministic in `(phi, config.seed)`.
pub fn train(phi: &TrainingSet, config: &RandNNConfig) -> Result<RandNNModel> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pool = phi.x_pool();
    let (weights, biases, anchors) =
        generate_hidden_params(phi.pattern_len(), config, &pool, &mut rng)?;
    let h = hidden_output(&weights, &biases, &phi.inputs_matrix());
    let beta = fit_output_weights(&h, &phi.outputs_matrix())?;
    RandNNModel::from_parts(weights, biases, beta, *config, None, anchors)
}

/// Grid search over `(hidden_nodes, alpha_max)` with k-fold
/// cross-validation.
///
/// Folds are contiguous blocks in temporal order, so validation cycles
/// never interleave with training cycles. Returns the cell minimizing
/// mean validation MAE in pattern space; ties break toward fewer hidden
/// nodes, then a smaller angle. Fold `f` trains with seed `seed + f`,
/// identical across cells.
pub fn grid_search_cv(
    phi: &TrainingSet,
    m_grid: &[usize],
    alpha_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<(usize, f64)> {
    if m_grid.is_empty() || alpha_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if folds < 2 {
        return Err(Error::InvalidParameter {
            name: "folds",
            reason: "cross-validation needs at least 2 folds".into(),
        });
    }
    if phi.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{} training pairs cannot fill {folds} folds",
            phi.len()
        )));
    }

    let n_pairs = phi.len();
    let base = n_pairs / folds;
    let rem = n_pairs % folds;
    let mut bounds = Vec::with_capacity(folds + 1);
    let mut acc = 0;
    bounds.push(0);
    for f in 0..folds {
        acc += base + usize::from(f < rem);
        bounds.push(acc);
    }

    let mut best: Option<(f64, usize, f64)> = None;
    for &m in m_grid {
        for &alpha in alpha_grid {
            let mut total_mae = 0.0;
            for f in 0..folds {
                let (lo, hi) = (bounds[f], bounds[f + 1]);
                let train_pairs: Vec<_> = phi
                    .pairs()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i < lo || *i >= hi)
                    .map(|(_, p)| p.clone())
                    .collect();
                let train_set = TrainingSet::new(train_pairs)?;
                let config = RandNNConfig::new(m, alpha, seed.wrapping_add(f as u64));
                let model = train(&train_set, &config)?;
                let mut err_sum = 0.0;
                let mut count = 0usize;
                for pair in &phi.pairs()[lo..hi] {
                    let pred = model.predict(&pair.input.x)?;
                    for (p, y) in pred.iter().zip(&pair.output.y) {
                        err_sum += (p - y).abs();
                        count += 1;
                    }
                }
                total_mae += err_sum / count as f64;
            }
            let mean_mae = total_mae / folds as f64;
            if !mean_mae.is_finite() {
                return Err(Error::NonFinite("cross-validation error"));
            }
            let better = match best {
                None => true,
                Some((best_mae, best_m, best_alpha)) => {
                    mean_mae < best_mae
                        || (mean_mae == best_mae
                            && (m < best_m || (m == best_m && alpha < best_alpha)))
                }
            };
            if better {
                best = Some((mean_mae, m, alpha));
            }
        }
    }
    let (_, m, alpha) = best.expect("grid is non-empty");
    Ok((m, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{InputPattern, OutputPattern, PatternPair};

    fn pair_from(x: Vec<f64>, y: Vec<f64>, idx: usize) -> PatternPair {
        PatternPair {
            input: InputPattern {
                x,
                source_index: idx,
            },
            output: OutputPattern {
                y,
                source_index: idx,
                horizon: 1,
            },
        }
    }

    fn random_training_set(n: usize, count: usize, seed: u64) -> TrainingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = (0..count)
            .map(|i| {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                pair_from(x, y, i + 1)
            })
            .collect();
        TrainingSet::new(pairs).unwrap()
    }

    #[test]
    fn weight_bound_at_70_degrees() {
        let config = RandNNConfig::new(1, 70.0, 0);
        let u = config.weight_bound().unwrap();
        assert!((u - 10.98990).abs() < 1e-5, "u = {u}");
        assert!((u - 4.0 * 70.0_f64.to_radians().tan()).abs() < 1e-15);
    }

    #[test]
    fn invalid_angles_are_rejected() {
        for alpha in [0.0, -5.0, 90.0, 120.0] {
            let config = RandNNConfig::new(4, alpha, 0);
            assert!(matches!(config.weight_bound(), Err(Error::InvalidAngle(_))));
        }
    }

    #[test]
    fn bias_is_negated_anchor_product() {
        let weights = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let biases = DVector::from_vec(vec![-(1.0 * 0.5 + (-1.0) * 0.25)]);
        assert_eq!(biases[0], -0.25);
        let anchor = DMatrix::from_row_slice(1, 2, &[0.5, 0.25]);
        let h = hidden_output(&weights, &biases, &anchor);
        assert_eq!(h[(0, 0)], 0.5);
    }

    #[test]
    fn anchors_activate_at_one_half() {
        let phi = random_training_set(8, 12, 3);
        let pool = phi.x_pool();
        let config = RandNNConfig::new(20, 70.0, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (w, b, anchors) = generate_hidden_params(8, &config, &pool, &mut rng).unwrap();
        for (j, &a) in anchors.iter().enumerate() {
            let row = DMatrix::from_row_slice(1, 8, pool[a]);
            let h = hidden_output(&w, &b, &row);
            assert_eq!(h[(0, j)], 0.5, "node {j}");
        }
    }

    #[test]
    fn weights_respect_the_bound() {
        let phi = random_training_set(6, 5, 1);
        let pool = phi.x_pool();
        let config = RandNNConfig::new(50, 35.0, 4);
        let u = config.weight_bound().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (w, _, _) = generate_hidden_params(6, &config, &pool, &mut rng).unwrap();
        assert!(w.iter().all(|v| v.abs() <= u));
    }

    #[test]
    fn empty_pool_is_rejected() {
        let config = RandNNConfig::new(2, 45.0, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            generate_hidden_params(4, &config, &[], &mut rng),
            Err(Error::EmptyPool)
        ));
    }

    #[test]
    fn zero_params_give_one_half_everywhere() {
        let w = DMatrix::zeros(3, 2);
        let b = DVector::zeros(3);
        let x = DMatrix::from_row_slice(2, 2, &[0.3, -0.4, 10.0, 3.0]);
        let h = hidden_output(&w, &b, &x);
        assert!(h.iter().all(|v| *v == 0.5));
    }

    #[test]
    fn sigmoid_saturates_to_one() {
        let w = DMatrix::from_row_slice(1, 1, &[10.0]);
        let b = DVector::from_vec(vec![0.0]);
        let x = DMatrix::from_row_slice(1, 1, &[10.0]);
        let h = hidden_output(&w, &b, &x);
        assert!((h[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn training_is_deterministic() {
        let phi = random_training_set(10, 16, 7);
        let config = RandNNConfig::new(12, 60.0, 1234);
        let a = train(&phi, &config).unwrap();
        let b = train(&phi, &config).unwrap();
        assert_eq!(a.hidden_weights(), b.hidden_weights());
        assert_eq!(a.hidden_biases(), b.hidden_biases());
        assert_eq!(a.output_weights(), b.output_weights());
        assert_eq!(a.anchor_indices(), b.anchor_indices());
    }

    #[test]
    fn single_pair_single_node_fits_exactly() {
        let phi = random_training_set(4, 1, 11);
        let config = RandNNConfig::new(1, 70.0, 2);
        let model = train(&phi, &config).unwrap();
        let h = hidden_output(
            model.hidden_weights(),
            model.hidden_biases(),
            &phi.inputs_matrix(),
        );
        let residual = (&h * model.output_weights() - phi.outputs_matrix()).norm();
        assert!(residual < 1e-8, "residual {residual}");
    }

    #[test]
    fn overparameterized_training_interpolates() {
        let phi = random_training_set(6, 10, 21);
        let config = RandNNConfig::new(25, 70.0, 5);
        let model = train(&phi, &config).unwrap();
        for pair in phi.pairs() {
            let pred = model.predict(&pair.input.x).unwrap();
            for (p, y) in pred.iter().zip(&pair.output.y) {
                assert!((p - y).abs() < 1e-6, "{p} vs {y}");
            }
        }
    }

    #[test]
    fn normal_equation_residual_is_small() {
        // Overdetermined, underdetermined and square fits all satisfy the
        // stationarity condition of the least-squares problem.
        for (pairs, m, seed) in [(40, 12, 6), (10, 25, 7), (16, 16, 8), (60, 30, 9)] {
            let phi = random_training_set(8, pairs, 13 + seed);
            let config = RandNNConfig::new(m, 50.0, seed);
            let model = train(&phi, &config).unwrap();
            let h = hidden_output(
                model.hidden_weights(),
                model.hidden_biases(),
                &phi.inputs_matrix(),
            );
            let y = phi.outputs_matrix();
            let ht = h.transpose();
            let lhs = (&ht * (&h * model.output_weights() - &y)).abs().max();
            let rhs = (&ht * &y).abs().max();
            assert!(
                lhs < 1e-6 * rhs,
                "normal-equation residual {lhs} vs {rhs} for N={pairs}, m={m}"
            );
        }
    }

    #[test]
    fn zero_output_weights_predict_zero() {
        let phi = random_training_set(4, 3, 2);
        let config = RandNNConfig::new(2, 45.0, 0);
        let model = train(&phi, &config).unwrap();
        let zeroed = RandNNModel::from_parts(
            model.hidden_weights().clone(),
            model.hidden_biases().clone(),
            DMatrix::zeros(2, 4),
            *model.config(),
            None,
            model.anchor_indices().to_vec(),
        )
        .unwrap();
        let pred = zeroed.predict(&phi.pairs()[0].input.x).unwrap();
        assert!(pred.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn doubling_output_weights_doubles_predictions() {
        let phi = random_training_set(4, 6, 15);
        let config = RandNNConfig::new(5, 45.0, 3);
        let model = train(&phi, &config).unwrap();
        let doubled = RandNNModel::from_parts(
            model.hidden_weights().clone(),
            model.hidden_biases().clone(),
            model.output_weights() * 2.0,
            *model.config(),
            None,
            model.anchor_indices().to_vec(),
        )
        .unwrap();
        let x = &phi.pairs()[2].input.x;
        let a = model.predict(x).unwrap();
        let b = doubled.predict(x).unwrap();
        for (va, vb) in a.iter().zip(&b) {
            assert!((2.0 * va - vb).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_rejects_wrong_dimension() {
        let phi = random_training_set(4, 3, 8);
        let model = train(&phi, &RandNNConfig::new(2, 45.0, 0)).unwrap();
        assert!(matches!(
            model.predict(&[0.0; 5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn grid_search_single_cell_returns_it() {
        let phi = random_training_set(4, 8, 19);
        let best = grid_search_cv(&phi, &[40], &[70.0], 2, 0).unwrap();
        assert_eq!(best, (40, 70.0));
    }

    #[test]
    fn grid_search_prefers_the_interpolating_cell() {
        // Two folds hold identical copies of three distinct patterns, so a
        // cell able to interpolate its training fold scores ~zero on
        // validation while an underparameterized cell cannot.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let distinct: Vec<(Vec<f64>, Vec<f64>)> = (0..3)
            .map(|_| {
                (
                    (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
            })
            .collect();
        let mut pairs = Vec::new();
        for rep in 0..2 {
            for (i, (x, y)) in distinct.iter().enumerate() {
                pairs.push(pair_from(x.clone(), y.clone(), rep * 3 + i + 1));
            }
        }
        let phi = TrainingSet::new(pairs).unwrap();
        let best = grid_search_cv(&phi, &[1, 8], &[70.0], 2, 5).unwrap();
        assert_eq!(best, (8, 70.0));
    }

    #[test]
    fn grid_search_validates_inputs() {
        let phi = random_training_set(4, 6, 23);
        assert!(matches!(
            grid_search_cv(&phi, &[], &[70.0], 2, 0),
            Err(Error::EmptyGrid)
        ));
        assert!(matches!(
            grid_search_cv(&phi, &[4], &[70.0], 7, 0),
            Err(Error::InsufficientData(_))
        ));
    }
}
