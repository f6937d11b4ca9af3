//! Least-squares solves via singular value decomposition.
//!
//! The SVD is computed by one-sided Jacobi orthogonalization: columns are
//! rotated pairwise until mutually orthogonal, which gives high relative
//! accuracy for every singular value and is deterministic (fixed sweep
//! order, no pivot heuristics). Wide systems are handled through the
//! transpose.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Singular-value cutoff used when inverting: `max(rows, cols) * eps * sigma_max`.
pub fn svd_cutoff(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// One-sided Jacobi factorization of a tall matrix (rows >= cols).
///
/// After convergence the stored columns are `u_j * sigma_j` and `v` holds
/// the accumulated right singular vectors, so `a = [columns] * v^T`.
struct JacobiFactors {
    /// Rotated columns of the input, each of length `rows`.
    columns: Vec<Vec<f64>>,
    /// Right singular vectors, stored per column: `v[j][i] = V[i][j]`.
    v: Vec<Vec<f64>>,
    sigma: Vec<f64>,
}

fn jacobi_factor(mut columns: Vec<Vec<f64>>) -> JacobiFactors {
    let cols = columns.len();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    // Sweep until every column pair is orthogonal to working precision.
    const MAX_SWEEPS: usize = 60;
    const ORTHO_TOL: f64 = 1e-15;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (head, tail) = columns.split_at_mut(q);
                let (col_p, col_q) = (&mut head[p], &mut tail[0]);
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for (x, y) in col_p.iter().zip(col_q.iter()) {
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq == 0.0 || apq.abs() <= ORTHO_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in col_p.iter_mut().zip(col_q.iter_mut()) {
                    let (old_x, old_y) = (*x, *y);
                    *x = c * old_x - s * old_y;
                    *y = s * old_x + c * old_y;
                }
                let (vh, vt) = v.split_at_mut(q);
                for (x, y) in vh[p].iter_mut().zip(vt[0].iter_mut()) {
                    let (old_x, old_y) = (*x, *y);
                    *x = c * old_x - s * old_y;
                    *y = s * old_x + c * old_y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma = columns
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    JacobiFactors { columns, v, sigma }
}

fn matrix_columns(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.ncols())
        .map(|j| a.column(j).iter().copied().collect())
        .collect()
}

fn transposed_columns(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| a.row(i).iter().copied().collect())
        .collect()
}

/// Singular values (unsorted) of a matrix.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let columns = if a.nrows() >= a.ncols() {
        matrix_columns(a)
    } else {
        transposed_columns(a)
    };
    jacobi_factor(columns).sigma
}

/// Minimum-norm least-squares solution of `a * x = b`.
///
/// Computed as `x = pinv(a) * b` with singular values at or below
/// [`svd_cutoff`] treated as zero. Among all solutions minimizing
/// `‖a x − b‖_F`, the returned `x` has minimal Frobenius norm.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "lhs has {} rows, rhs has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares lhs"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares rhs"));
    }

    let rows = a.nrows();
    let cols = a.ncols();
    let rhs = b.ncols();
    let tall = rows >= cols;
    let columns = if tall {
        matrix_columns(a)
    } else {
        transposed_columns(a)
    };
    let factors = jacobi_factor(columns);
    let sigma_max = factors.sigma.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = svd_cutoff(rows, cols, sigma_max);

    let mut x = DMatrix::zeros(cols, rhs);
    if tall {
        // a = U Σ Vᵀ with U_j = columns[j]/σ_j:
        // x = Σ_j v_j (columns_jᵀ b) / σ_j².
        for (j, &sigma) in factors.sigma.iter().enumerate() {
            if sigma <= cutoff {
                continue;
            }
            let col = &factors.columns[j];
            let v_col = &factors.v[j];
            for k in 0..rhs {
                let mut proj = 0.0;
                for (i, c) in col.iter().enumerate() {
                    proj += c * b[(i, k)];
                }
                let scale = proj / (sigma * sigma);
                for (i, v_i) in v_col.iter().enumerate() {
                    x[(i, k)] += v_i * scale;
                }
            }
        }
    } else {
        // aᵀ = U₂ Σ V₂ᵀ, so pinv(a) = U₂ Σ⁺ V₂ᵀ with U₂_j = columns[j]/σ_j:
        // x = Σ_j columns_j (v₂_jᵀ b) / σ_j².
        for (j, &sigma) in factors.sigma.iter().enumerate() {
            if sigma <= cutoff {
                continue;
            }
            let col = &factors.columns[j];
            let v_col = &factors.v[j];
            for k in 0..rhs {
                let mut proj = 0.0;
                for (i, v_i) in v_col.iter().enumerate() {
                    proj += v_i * b[(i, k)];
                }
                let scale = proj / (sigma * sigma);
                for (i, c) in col.iter().enumerate() {
                    x[(i, k)] += c * scale;
                }
            }
        }
    }
    Ok(x)
}

/// Moore-Penrose pseudoinverse with the [`svd_cutoff`] rank threshold.
pub fn pinv(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    min_norm_lstsq(a, &DMatrix::identity(a.nrows(), a.nrows()))
}
