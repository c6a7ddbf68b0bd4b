//! Kaczmarz relaxation in matrix form and its symmetrizations.
//!
//! Kaczmarz is forward Gauss-Seidel on `A A^T y = b` with `x = A^T y`.
//! Splitting `A A^T = D + L + U` and taking `N = D + L` gives the smoother
//! `M = N A^{-T}`, so one sweep is `x <- x + M^{-1} (b - A x)`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dense::{check_same_shape, check_square, is_exactly_symmetric, lu_solve, min_symmetric_eig};
use crate::error::{Error, Result};
use crate::hqr;
use crate::sparse::SparseMatrix;

/// The raw Kaczmarz splitting.
#[derive(Debug, Clone)]
pub struct Kaczmarz {
    pub m: DMatrix<f64>,
    /// `N = D + L` of `A A^T`.
    pub n_mat: DMatrix<f64>,
}

/// Kaczmarz smoother together with both symmetrized forms.
#[derive(Debug, Clone)]
pub struct Smoother {
    pub m: DMatrix<f64>,
    /// `M^T (M^T + M - A)^{-1} M`.
    pub m_sym: DMatrix<f64>,
    /// `M (M^T + M - A)^{-1} M^T`.
    pub m_bar: DMatrix<f64>,
    pub n_mat: DMatrix<f64>,
}

impl Smoother {
    pub fn kaczmarz(a: &DMatrix<f64>) -> Result<Self> {
        let Kaczmarz { m, n_mat } = kaczmarz_matrix(a)?;
        let m_sym = symmetrize(&m, a)?;
        let m_bar = precond_form(&m, a)?;
        Ok(Self { m, m_sym, m_bar, n_mat })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub min_eig: f64,
    pub ok: bool,
}

pub fn kaczmarz_matrix(a: &DMatrix<f64>) -> Result<Kaczmarz> {
    check_square(a, "Kaczmarz operator")?;
    let a_tilde = a * a.transpose();
    let n_mat = a_tilde.lower_triangle();
    // M A^T = N  <=>  A M^T = N^T, solved column by column through one LU of A
    let n = a.nrows();
    let lu = a.clone().lu();
    let floor = n as f64 * f64::EPSILON * a.amax();
    if n > 0 && lu.u().diagonal().amin() <= floor {
        return Err(Error::Singular("Kaczmarz operator A"));
    }
    let rhs = n_mat.transpose();
    let cols: Vec<_> = (0..n)
        .into_par_iter()
        .map(|j| lu.solve(&rhs.column(j).into_owned()).ok_or(Error::Singular("Kaczmarz operator A")))
        .collect::<Result<_>>()?;
    let m_t = if n == 0 { DMatrix::zeros(0, 0) } else { DMatrix::from_columns(&cols) };
    Ok(Kaczmarz { m: m_t.transpose(), n_mat })
}

fn symmetric_part(m: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(m, "smoother")?;
    check_same_shape(m, a, "smoother and operator")?;
    Ok(m.transpose() + m - a)
}

/// `M^T (M^T + M - A)^{-1} M`.
///
/// When `A` is exactly symmetric the result is averaged with its transpose to
/// strip rounding skew; for nonsymmetric `A` it is not symmetric and is
/// returned as computed.
pub fn symmetrize(m: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = symmetric_part(m, a)?;
    let x = lu_solve(&s, m, "M^T + M - A")?;
    let out = m.transpose() * x;
    Ok(if is_exactly_symmetric(a) { (&out + out.transpose()) * 0.5 } else { out })
}

/// `M (M^T + M - A)^{-1} M^T`, the form used for preconditioning.
pub fn precond_form(m: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = symmetric_part(m, a)?;
    let x = lu_solve(&s, &m.transpose(), "M^T + M - A")?;
    let out = m * x;
    Ok(if is_exactly_symmetric(a) { (&out + out.transpose()) * 0.5 } else { out })
}

/// Smallest eigenvalue of the symmetric part of `M + M^T - A`.
pub fn check_convergent(m: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<ConvergenceReport> {
    let s = symmetric_part(m, a)?;
    let min_eig = min_symmetric_eig(&s);
    Ok(ConvergenceReport { min_eig, ok: min_eig > 0.0 })
}

/// `I - S^{-1} A` for a smoother matrix `S`.
pub fn propagator(s: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_same_shape(s, a, "smoother and operator")?;
    let n = a.nrows();
    Ok(DMatrix::identity(n, n) - lu_solve(s, a, "smoother")?)
}

/// Spectral radius of `I - S^{-1} A`.
pub fn smoothing_radius(s: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<f64> {
    let e = propagator(s, a)?;
    Ok(hqr::eigenvalues(&e)?.iter().map(|c| c.norm()).fold(0.0, f64::max))
}

/// One forward Kaczmarz sweep over the rows of `A`, in place.
///
/// Row `i` projects `x` onto the hyperplane `a_i . x = b_i`. Rows that are
/// entirely zero are skipped.
pub fn kaczmarz_sweep(a: &SparseMatrix, b: &[f64], x: &mut [f64]) {
    assert_eq!(b.len(), a.n_rows(), "kaczmarz_sweep: right-hand side length");
    assert_eq!(x.len(), a.n_cols(), "kaczmarz_sweep: iterate length");
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        let norm2: f64 = vals.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            continue;
        }
        let dot: f64 = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        let step = (b[i] - dot) / norm2;
        for (&j, &v) in cols.iter().zip(vals) {
            x[j] += step * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocksys::build_block;
    use crate::dense::rel_frobenius;
    use crate::matgen::{advdiff_2d, default_advection, poisson_2d, random_nonsym};
    use crate::rng::SeededRng;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    #[test]
    fn identity_smoother() {
        let i = DMatrix::<f64>::identity(4, 4);
        let k = kaczmarz_matrix(&i).unwrap();
        assert_eq!(k.m, i);
        assert_eq!(k.n_mat, i);
        assert_eq!(symmetrize(&i, &i).unwrap(), i);
        assert_eq!(precond_form(&i, &i).unwrap(), i);
        let rep = check_convergent(&i, &i).unwrap();
        assert_eq!(rep.min_eig, 1.0);
        assert!(rep.ok);
    }

    #[test]
    fn diagonal_smoother_is_a() {
        let a = diag(&[2.0, 3.0]);
        let k = kaczmarz_matrix(&a).unwrap();
        assert_eq!(k.n_mat, diag(&[4.0, 9.0]));
        assert!(rel_frobenius(&k.m, &a) < 1e-15);
        assert!(rel_frobenius(&symmetrize(&a, &a).unwrap(), &a) < 1e-15);
        assert!(rel_frobenius(&precond_form(&a, &a).unwrap(), &a) < 1e-15);
    }

    #[test]
    fn two_by_two_block_is_its_own_smoother() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        let k = kaczmarz_matrix(&a).unwrap();
        assert_eq!(k.n_mat, diag(&[4.0, 4.0]));
        assert!(rel_frobenius(&k.m, &a) < 1e-15);
        let s = Smoother::kaczmarz(&a).unwrap();
        assert!(rel_frobenius(&s.m_sym, &a) < 1e-15);
    }

    #[test]
    fn zero_smoother_is_not_convergent_for_spd() {
        let a = poisson_2d(2).to_dense();
        let rep = check_convergent(&DMatrix::zeros(4, 4), &a).unwrap();
        assert!(rep.min_eig < 0.0 && !rep.ok);
    }

    #[test]
    fn singular_operator_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(kaczmarz_matrix(&a), Err(Error::Singular(_))));
    }

    #[test]
    fn smoother_reproduces_n_by_resolve() {
        let a = random_nonsym(12, 0.4, 8).to_dense();
        let k = kaczmarz_matrix(&a).unwrap();
        // independent path: N = M A^T
        assert!(rel_frobenius(&(&k.m * a.transpose()), &k.n_mat) < 1e-10);
    }

    #[test]
    fn symmetrized_forms_are_symmetric_for_block_operators() {
        let a = advdiff_2d(3, 0.1, default_advection());
        let b = build_block(&a).unwrap().block.to_dense();
        let s = Smoother::kaczmarz(&b).unwrap();
        assert!(rel_frobenius(&s.m_sym, &s.m_sym.transpose()) < 1e-12);
        assert!(rel_frobenius(&s.m_bar, &s.m_bar.transpose()) < 1e-12);
    }

    #[test]
    fn symmetric_smoother_gives_equal_forms() {
        let a = poisson_2d(3).to_dense();
        let m = DMatrix::from_diagonal(&a.diagonal());
        assert_eq!(symmetrize(&m, &a).unwrap(), precond_form(&m, &a).unwrap());
    }

    #[test]
    fn factorized_identity_on_nonsymmetric_a() {
        for seed in 0..3 {
            let a = random_nonsym(10, 0.4, seed).to_dense();
            let k = kaczmarz_matrix(&a).unwrap();
            let ms = symmetrize(&k.m, &a).unwrap();
            let lhs = propagator(&ms, &a).unwrap();
            let rhs = propagator(&k.m, &a).unwrap() * propagator(&k.m.transpose(), &a).unwrap();
            assert!(rel_frobenius(&lhs, &rhs) < 1e-10);
        }
    }

    #[test]
    fn matrix_form_matches_row_action() {
        let a = random_nonsym(15, 0.3, 3);
        let ad = a.to_dense();
        let k = kaczmarz_matrix(&ad).unwrap();
        let mut rng = SeededRng::new(5);
        let b: Vec<f64> = (0..15).map(|_| rng.next_symmetric()).collect();
        let x0: Vec<f64> = (0..15).map(|_| rng.next_symmetric()).collect();

        let mut x = x0.clone();
        kaczmarz_sweep(&a, &b, &mut x);

        let r = nalgebra::DVector::from_vec(b) - &ad * nalgebra::DVector::from_vec(x0.clone());
        let corr = k.m.clone().lu().solve(&r).unwrap();
        for i in 0..15 {
            assert!((x[i] - (x0[i] + corr[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_converges_on_block_system() {
        let a = random_nonsym(6, 0.5, 2);
        let b = build_block(&a).unwrap().block.to_dense();
        let s = Smoother::kaczmarz(&b).unwrap();
        assert!(smoothing_radius(&s.m_sym, &b).unwrap() < 1.0);
    }
}
