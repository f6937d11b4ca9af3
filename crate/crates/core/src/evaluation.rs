//! Forecast-quality metrics and the Giacomini-White conditional
//! predictive ability test.
//!
//! Percentage errors follow the convention `PE = 100·(actual −
//! forecast)/actual`, so positive mean percentage error means
//! underprediction. Standard deviations are population (divide-by-count)
//! throughout, matching the diversity statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary forecast-quality metrics over a day × position grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean absolute percentage error, %.
    pub mape: f64,
    /// Median absolute percentage error, %.
    pub median_ape: f64,
    /// Root mean square error, in the series' units.
    pub rmse: f64,
    /// Mean percentage error, %; positive means underprediction.
    pub mpe: f64,
    /// Population standard deviation of the percentage errors, %.
    pub std_pe: f64,
    pub n_days: usize,
    pub n_points: usize,
}

/// The absolute-percentage-error sample with its summary quantiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApeDistribution {
    /// All APE values, sorted ascending.
    pub sorted_apes: Vec<f64>,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

fn check_aligned(actuals: &[Vec<f64>], forecasts: &[Vec<f64>]) -> Result<()> {
    if actuals.len() != forecasts.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} actual days vs {} forecast days",
            actuals.len(),
            forecasts.len()
        )));
    }
    if actuals.is_empty() {
        return Err(Error::ShapeMismatch("no days to evaluate".into()));
    }
    for (i, (a, f)) in actuals.iter().zip(forecasts).enumerate() {
        if a.is_empty() {
            return Err(Error::ShapeMismatch(format!("day {i} has no positions")));
        }
        if a.len() != f.len() {
            return Err(Error::ShapeMismatch(format!(
                "day {i}: {} actuals vs {} forecasts",
                a.len(),
                f.len()
            )));
        }
        if a.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("evaluation inputs"));
        }
    }
    Ok(())
}

fn percentage_errors(actuals: &[Vec<f64>], forecasts: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut pe = Vec::new();
    for (day, (a_row, f_row)) in actuals.iter().zip(forecasts).enumerate() {
        for (position, (a, f)) in a_row.iter().zip(f_row).enumerate() {
            if *a <= 0.0 {
                return Err(Error::ZeroActual { day, position });
            }
            pe.push(100.0 * (a - f) / a);
        }
    }
    Ok(pe)
}

/// Linear-interpolation quantile of a sorted sample (the `(n-1)·p` rule).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Compute the summary metrics over aligned day × position matrices.
///
/// Actuals must be strictly positive so the percentage metrics are
/// defined.
pub fn compute_metrics(actuals: &[Vec<f64>], forecasts: &[Vec<f64>]) -> Result<MetricsReport> {
    check_aligned(actuals, forecasts)?;
    let pe = percentage_errors(actuals, forecasts)?;
    let n = pe.len() as f64;
    let mape = pe.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mpe = pe.iter().sum::<f64>() / n;
    let var = pe.iter().map(|v| (v - mpe) * (v - mpe)).sum::<f64>() / n;
    let mut apes: Vec<f64> = pe.iter().map(|v| v.abs()).collect();
    apes.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let sq_err: f64 = actuals
        .iter()
        .zip(forecasts)
        .flat_map(|(a_row, f_row)| a_row.iter().zip(f_row).map(|(a, f)| (a - f) * (a - f)))
        .sum();
    Ok(MetricsReport {
        mape,
        median_ape: quantile(&apes, 0.5),
        rmse: (sq_err / n).sqrt(),
        mpe,
        std_pe: var.sqrt(),
        n_days: actuals.len(),
        n_points: pe.len(),
    })
}

/// The sorted APE sample and its 5/25/50/75/95 percent quantiles.
pub fn ape_distribution(actuals: &[Vec<f64>], forecasts: &[Vec<f64>]) -> Result<ApeDistribution> {
    check_aligned(actuals, forecasts)?;
    let mut apes: Vec<f64> = percentage_errors(actuals, forecasts)?
        .into_iter()
        .map(f64::abs)
        .collect();
    apes.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(ApeDistribution {
        q05: quantile(&apes, 0.05),
        q25: quantile(&apes, 0.25),
        q50: quantile(&apes, 0.50),
        q75: quantile(&apes, 0.75),
        q95: quantile(&apes, 0.95),
        sorted_apes: apes,
    })
}

/// Which forecaster the evidence favors in a pairwise test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GwDirection {
    /// The first loss matrix belongs to the better forecaster.
    FavorsFirst,
    /// The second loss matrix belongs to the better forecaster.
    FavorsSecond,
}

/// Result of the one-sided Giacomini-White test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GwTestResult {
    /// Wald statistic of the conditional moment restriction.
    pub statistic: f64,
    /// One-sided p-value for the alternative "the second forecaster is
    /// better"; small values favor the second, values near one favor the
    /// first.
    pub p_value: f64,
    /// `None` when the loss differential is identically zero.
    pub direction: Option<GwDirection>,
    /// Instrument count (constant plus lagged differential).
    pub dof: usize,
    /// All daily loss differentials were exactly zero.
    pub degenerate: bool,
    /// The instrument covariance was singular and ridge-regularized.
    pub regularized: bool,
}

/// Survival function of the chi-square distribution with two degrees of
/// freedom (the instrument set is fixed at `[1, lagged differential]`).
fn chi2_sf_dof2(x: f64) -> f64 {
    (-x / 2.0).exp().clamp(0.0, 1.0)
}

/// One-sided multivariate Giacomini-White test on two day × position
/// absolute-error matrices.
///
/// The multivariate reduction averages each day's losses into a daily
/// differential `d_t = mean(loss_first − loss_second)`. With instruments
/// `g_t = [1, d_t]`, the score `z_t = g_t · d_{t+1}` should have mean zero
/// under equal conditional predictive ability; the Wald statistic
/// `T · z̄ᵀ Ω̂⁻¹ z̄` is referred to a chi-square with 2 degrees of
/// freedom. The one-sided p-value halves the two-sided one when the mean
/// differential says the second forecaster is better, and is its
/// complement otherwise.
pub fn gw_test(loss_first: &[Vec<f64>], loss_second: &[Vec<f64>]) -> Result<GwTestResult> {
    check_aligned(loss_first, loss_second)?;
    if loss_first.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "Giacomini-White test needs at least 10 days, got {}",
            loss_first.len()
        )));
    }
    let d: Vec<f64> = loss_first
        .iter()
        .zip(loss_second)
        .map(|(a, b)| {
            a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64
        })
        .collect();

    if d.iter().all(|v| *v == 0.0) {
        return Ok(GwTestResult {
            statistic: 0.0,
            p_value: 1.0,
            direction: None,
            dof: 2,
            degenerate: true,
            regularized: false,
        });
    }

    // Scores z_t = [d_{t+1}, d_t * d_{t+1}] for t = 0..T-1.
    let t_eff = d.len() - 1;
    let mut z_bar = [0.0_f64; 2];
    let mut omega = [[0.0_f64; 2]; 2];
    for t in 0..t_eff {
        let z = [d[t + 1], d[t] * d[t + 1]];
        z_bar[0] += z[0];
        z_bar[1] += z[1];
        omega[0][0] += z[0] * z[0];
        omega[0][1] += z[0] * z[1];
        omega[1][1] += z[1] * z[1];
    }
    let tf = t_eff as f64;
    z_bar[0] /= tf;
    z_bar[1] /= tf;
    omega[0][0] /= tf;
    omega[0][1] /= tf;
    omega[1][1] /= tf;

    let scale = omega[0][0].max(omega[1][1]);
    let mut det = omega[0][0] * omega[1][1] - omega[0][1] * omega[0][1];
    let mut regularized = false;
    if !(det > 1e-12 * scale * scale) {
        omega[0][0] += 1e-12;
        omega[1][1] += 1e-12;
        det = omega[0][0] * omega[1][1] - omega[0][1] * omega[0][1];
        regularized = true;
    }
    let quad = (z_bar[0] * z_bar[0] * omega[1][1] - 2.0 * z_bar[0] * z_bar[1] * omega[0][1]
        + z_bar[1] * z_bar[1] * omega[0][0])
        / det;
    let statistic = tf * quad;
    if !statistic.is_finite() {
        return Err(Error::NonFinite("test statistic"));
    }
    let two_sided = chi2_sf_dof2(statistic);
    let mean_d = d.iter().sum::<f64>() / d.len() as f64;
    let (p_value, direction) = if mean_d > 0.0 {
        (two_sided / 2.0, Some(GwDirection::FavorsSecond))
    } else {
        (1.0 - two_sided / 2.0, Some(GwDirection::FavorsFirst))
    };
    Ok(GwTestResult {
        statistic,
        p_value,
        direction,
        dof: 2,
        degenerate: false,
        regularized,
    })
}
