//! Linear fixed-point solves `x = b + c·K x` and `x = b + c·Kᵀ x` over sparse
//! rows. Dense LU up to [`DENSE_LIMIT`] unknowns, Gauss-Seidel sweeps above.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub(crate) const DENSE_LIMIT: usize = 2000;
const ITER_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 1_000_000;

pub(crate) type Row = Vec<(usize, f64)>;

fn system_matrix(rows: &[Row], scale: f64, transpose: bool) -> DMatrix<f64> {
    let n = rows.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    for (i, row) in rows.iter().enumerate() {
        for &(j, p) in row {
            if transpose {
                a[(j, i)] -= scale * p;
            } else {
                a[(i, j)] -= scale * p;
            }
        }
    }
    a
}

/// `‖x − b − c·K x‖∞` (or with `Kᵀ`).
#[cfg(test)]
pub(crate) fn residual(rows: &[Row], b: &[f64], scale: f64, x: &[f64], transpose: bool) -> f64 {
    let r = apply(rows, scale, x, transpose);
    x.iter()
        .zip(b)
        .zip(&r)
        .map(|((xi, bi), ri)| (xi - bi - ri).abs())
        .fold(0.0, f64::max)
}

fn apply(rows: &[Row], scale: f64, x: &[f64], transpose: bool) -> Vec<f64> {
    let n = rows.len();
    let mut out = vec![0.0; n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, p) in row {
            if transpose {
                out[j] += scale * p * x[i];
            } else {
                out[i] += scale * p * x[j];
            }
        }
    }
    out
}

/// Solves `x = b + scale·K x` (`transpose = false`) or `x = b + scale·Kᵀ x`.
///
/// The caller guarantees `I − scale·K` is nonsingular (discount below one or
/// a substochastic block whose mass leaks out).
pub(crate) fn solve_fixed_point(rows: &[Row], b: &[f64], scale: f64, transpose: bool) -> Result<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n > DENSE_LIMIT {
        return solve_iterative(rows, b, scale, transpose);
    }
    let a = system_matrix(rows, scale, transpose);
    let lu = a.lu();
    let rhs = DVector::from_column_slice(b);
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular linear system".into()))?;
    // one round of iterative refinement
    let xs: Vec<f64> = x.iter().copied().collect();
    let ax = apply(rows, scale, &xs, transpose);
    let r: Vec<f64> = (0..n).map(|i| b[i] - (xs[i] - ax[i])).collect();
    if r.iter().any(|v| v.abs() > 0.0) {
        if let Some(d) = lu.solve(&DVector::from_vec(r)) {
            x += d;
        }
    }
    let out: Vec<f64> = x.iter().copied().collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution".into()));
    }
    Ok(out)
}

fn solve_iterative(rows: &[Row], b: &[f64], scale: f64, transpose: bool) -> Result<Vec<f64>> {
    let n = rows.len();
    // Gauss-Seidel needs row access; materialize the transpose when asked.
    let owned;
    let rows = if transpose {
        let mut t: Vec<Row> = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row {
                t[j].push((i, p));
            }
        }
        owned = t;
        &owned[..]
    } else {
        rows
    };
    let mut x = b.to_vec();
    for _ in 0..MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut acc = b[i];
            let mut diag = 0.0;
            for &(j, p) in &rows[i] {
                if j == i {
                    diag += scale * p;
                } else {
                    acc += scale * p * x[j];
                }
            }
            let next = acc / (1.0 - diag);
            delta = delta.max((next - x[i]).abs());
            x[i] = next;
        }
        if delta < ITER_TOL {
            return Ok(x);
        }
    }
    Err(Error::Numerical("iterative solve did not converge".into()))
}
