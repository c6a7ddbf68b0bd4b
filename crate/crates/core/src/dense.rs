//! Small dense linear algebra helpers shared by the numerical modules.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hqr;

/// Dimension cap for dense work unless the caller overrides it.
pub const DEFAULT_DENSE_LIMIT: usize = 1024;

pub fn check_dense_limit(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::DenseLimit { n, limit });
    }
    Ok(())
}

pub fn check_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{what} is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    Ok(())
}

pub fn check_same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("{what}: {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// Solves `a x = b` through a partially pivoted LU factorization.
///
/// A pivot below `n * eps * max|a_ij|` counts as singular.
pub fn lu_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    check_square(a, what)?;
    if a.nrows() != b.nrows() {
        return Err(Error::Shape(format!(
            "{what}: system of size {} with right-hand side of {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let floor = a.nrows() as f64 * f64::EPSILON * a.amax();
    if a.nrows() > 0 && (u.diagonal().amin() <= floor || !u.iter().all(|v| v.is_finite())) {
        return Err(Error::Singular(what));
    }
    lu.solve(b).ok_or(Error::Singular(what))
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

/// `||a - b||_F / ||b||_F`, or the absolute error when `b = 0`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn is_exactly_symmetric(m: &DMatrix<f64>) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)]))
}

/// Smallest eigenvalue of the symmetric part `(m + m^T) / 2`.
pub fn min_symmetric_eig(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    check_square(m, "eigenvalue input")?;
    hqr::eigenvalues(m)
}

/// `sigma_max / sigma_min`, infinite for an exactly singular matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Numerical full column rank: `sigma_min > rel_tol * sigma_max`.
pub fn column_rank_ok(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if m.ncols() == 0 || m.ncols() > m.nrows() {
        return false;
    }
    let sv = m.clone().singular_values();
    sv.min() > rel_tol * sv.max()
}

/// Greedy nearest-neighbour matching of two multisets of complex numbers;
/// returns the largest matched distance.
pub fn match_spectra(computed: &[Complex<f64>], expected: &[Complex<f64>]) -> f64 {
    assert_eq!(computed.len(), expected.len(), "spectra must have equal length");
    let mut used = vec![false; computed.len()];
    let mut worst = 0.0f64;
    for e in expected {
        let (best, dist) = computed
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, c)| (i, (c - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("lengths agree");
        used[best] = true;
        worst = worst.max(dist);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solve_and_singularity() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let x = lu_solve(&a, &b, "test").unwrap();
        assert!((&a * x - b).norm() < 1e-14);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(lu_solve(&s, &DMatrix::zeros(2, 1), "s"), Err(Error::Singular("s"))));
    }

    #[test]
    fn spectra_matching() {
        let a = [Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)];
        let b = [Complex::new(0.0, 1.0 + 1e-9), Complex::new(1.0, 0.0)];
        assert!(match_spectra(&a, &b) < 2e-9);
    }

    #[test]
    fn symmetry_and_conditioning() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(is_exactly_symmetric(&s));
        assert!((min_symmetric_eig(&s) + 1.0).abs() < 1e-14);
        assert!((condition_number(&s) - 3.0).abs() < 1e-12);
        assert!(column_rank_ok(&DMatrix::identity(3, 2), 1e-10));
        assert!(!column_rank_ok(&DMatrix::from_element(3, 2, 1.0), 1e-10));
    }
}
