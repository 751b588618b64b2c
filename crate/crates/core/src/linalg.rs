use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Solves `a x = b` with a full-pivoting LU, rejecting singular or
/// numerically blown-up systems.
pub(crate) fn solve(a: DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let x = a
        .full_piv_lu()
        .solve(b)
        .ok_or_else(|| Error::SingularSystem(what.to_string()))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularSystem(what.to_string()))
    }
}

pub(crate) fn solve_matrix(
    a: DMatrix<f64>,
    b: &DMatrix<f64>,
    what: &str,
) -> Result<DMatrix<f64>> {
    let x = a
        .full_piv_lu()
        .solve(b)
        .ok_or_else(|| Error::SingularSystem(what.to_string()))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularSystem(what.to_string()))
    }
}

pub(crate) fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn_generic(Dyn(rows.len()), Dyn(cols.len()), |i, j| m[(rows[i], cols[j])])
}

pub(crate) fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
