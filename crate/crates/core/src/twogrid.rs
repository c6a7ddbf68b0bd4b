//! Interpolation operators, Galerkin coarse operators and two-grid error
//! propagators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dense::{check_same_shape, check_square, column_rank_ok, condition_number, lu_solve};
use crate::eigsolve::Spectrum;
use crate::error::{Error, Result};

/// Condition estimate above which a coarse operator is rejected.
pub const COARSE_COND_LIMIT: f64 = 1e14;
/// Relative singular value floor for a full-rank interpolation.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolationKind {
    Optimal,
    Ideal,
    Custom,
}

#[derive(Debug, Clone)]
pub struct Interpolation {
    pub p: DMatrix<f64>,
    pub kind: InterpolationKind,
    pub n_c: usize,
}

impl Interpolation {
    /// Wraps a user supplied interpolation after a rank check.
    pub fn custom(p: DMatrix<f64>) -> Result<Self> {
        let n_c = p.ncols();
        if n_c == 0 || n_c > p.nrows() {
            return Err(Error::InvalidArgument(format!(
                "interpolation must have 1..={} columns, got {n_c}",
                p.nrows()
            )));
        }
        if !column_rank_ok(&p, RANK_TOL) {
            return Err(Error::InvalidArgument("interpolation is column rank deficient".into()));
        }
        Ok(Self { p, kind: InterpolationKind::Custom, n_c })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfSplit {
    pub f_indices: Vec<usize>,
    pub c_indices: Vec<usize>,
}

impl CfSplit {
    pub fn new(n: usize, c_indices: Vec<usize>) -> Result<Self> {
        let mut is_c = vec![false; n];
        for &c in &c_indices {
            if c >= n || is_c[c] {
                return Err(Error::InvalidArgument(format!("bad coarse index {c} for n = {n}")));
            }
            is_c[c] = true;
        }
        let f_indices: Vec<usize> = (0..n).filter(|&i| !is_c[i]).collect();
        if f_indices.is_empty() || c_indices.is_empty() {
            return Err(Error::InvalidArgument("C/F split needs nonempty C and F sets".into()));
        }
        Ok(Self { f_indices, c_indices })
    }

    pub fn n(&self) -> usize {
        self.f_indices.len() + self.c_indices.len()
    }
}

/// The first `n_c` columns of the eigenvector matrix.
pub fn optimal_interpolation(spec: &Spectrum, n_c: usize) -> Result<Interpolation> {
    let n = spec.len();
    if n_c == 0 || n_c > n {
        return Err(Error::InvalidArgument(format!("n_c must lie in 1..={n}, got {n_c}")));
    }
    Ok(Interpolation {
        p: spec.vectors.columns(0, n_c).into_owned(),
        kind: InterpolationKind::Optimal,
        n_c,
    })
}

/// Coarse points at `stride - 1, 2 stride - 1, ...`.
pub fn cf_split_every_other(n: usize, stride: usize) -> Result<CfSplit> {
    if n < 2 || stride < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2 and stride >= 2, got {n}, {stride}")));
    }
    CfSplit::new(n, ((stride - 1)..n).step_by(stride).collect())
}

/// `P = [-A_ff^{-1} A_fc ; I]`, laid out in the original row order.
pub fn ideal_interpolation(a: &DMatrix<f64>, split: &CfSplit) -> Result<Interpolation> {
    check_square(a, "operator")?;
    if split.n() != a.nrows() {
        return Err(Error::Shape(format!("split covers {} of {} unknowns", split.n(), a.nrows())));
    }
    let (f, c) = (&split.f_indices, &split.c_indices);
    let a_ff = DMatrix::from_fn(f.len(), f.len(), |i, j| a[(f[i], f[j])]);
    let a_fc = DMatrix::from_fn(f.len(), c.len(), |i, j| a[(f[i], c[j])]);
    let w = -lu_solve(&a_ff, &a_fc, "A_ff")?;
    let mut p = DMatrix::zeros(a.nrows(), c.len());
    for (r, &row) in f.iter().enumerate() {
        p.row_mut(row).copy_from(&w.row(r));
    }
    for (k, &row) in c.iter().enumerate() {
        p[(row, k)] = 1.0;
    }
    Ok(Interpolation { p, kind: InterpolationKind::Ideal, n_c: c.len() })
}

/// `P^T A P`, rejected when its condition estimate exceeds the limit.
pub fn coarse_operator(a_op: &DMatrix<f64>, p: &Interpolation) -> Result<DMatrix<f64>> {
    check_square(a_op, "operator")?;
    if p.p.nrows() != a_op.nrows() {
        return Err(Error::Shape(format!(
            "interpolation has {} rows, operator is {}x{}",
            p.p.nrows(),
            a_op.nrows(),
            a_op.ncols()
        )));
    }
    let ac = p.p.transpose() * a_op * &p.p;
    let cond = condition_number(&ac);
    if !(cond <= COARSE_COND_LIMIT) {
        return Err(Error::IllConditionedCoarse { cond });
    }
    Ok(ac)
}

/// `I - P (P^T A P)^{-1} P^T A`.
pub fn coarse_correction(a_op: &DMatrix<f64>, p: &Interpolation) -> Result<DMatrix<f64>> {
    let n = a_op.nrows();
    if p.n_c == n {
        // P is square and nonsingular, so the coarse solve is exact
        coarse_operator(a_op, p)?;
        return Ok(DMatrix::zeros(n, n));
    }
    let ac = coarse_operator(a_op, p)?;
    let rhs = p.p.transpose() * a_op;
    let x = lu_solve(&ac, &rhs, "coarse operator")?;
    Ok(DMatrix::identity(n, n) - &p.p * x)
}

/// `(I - P (P^T A P)^{-1} P^T A)(I - S^{-1} A)` for a smoother matrix `S`.
pub fn two_grid_error(
    a_op: &DMatrix<f64>,
    smoother: &DMatrix<f64>,
    p: &Interpolation,
) -> Result<DMatrix<f64>> {
    check_same_shape(a_op, smoother, "operator and smoother")?;
    let cgc = coarse_correction(a_op, p)?;
    if p.n_c == a_op.nrows() {
        return Ok(cgc);
    }
    let n = a_op.nrows();
    let smooth = DMatrix::identity(n, n) - lu_solve(smoother, a_op, "smoother")?;
    Ok(cgc * smooth)
}

/// `(I - M^{-T} A)(I - P (R A P)^{-1} R A)(I - M^{-1} A)`.
pub fn two_grid_error_prepost(
    a_op: &DMatrix<f64>,
    m: &DMatrix<f64>,
    p: &Interpolation,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_same_shape(a_op, m, "operator and smoother")?;
    let n = a_op.nrows();
    if r.nrows() != p.n_c || r.ncols() != n {
        return Err(Error::Shape(format!(
            "restriction is {}x{}, expected {}x{n}",
            r.nrows(),
            r.ncols(),
            p.n_c
        )));
    }
    let id = DMatrix::identity(n, n);
    let rap = r * a_op * &p.p;
    let cgc = &id - &p.p * lu_solve(&rap, &(r * a_op), "R A P")?;
    let post = &id - lu_solve(&m.transpose(), a_op, "smoother transpose")?;
    let pre = &id - lu_solve(m, a_op, "smoother")?;
    Ok(post * cgc * pre)
}

/// `P (P^T S P)^{-1} P^T S`.
pub fn m_projection(p: &Interpolation, m_sym: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(m_sym, "smoother")?;
    if p.p.nrows() != m_sym.nrows() {
        return Err(Error::Shape("interpolation and smoother sizes differ".into()));
    }
    let pts = p.p.transpose() * m_sym;
    let g = &pts * &p.p;
    Ok(&p.p * lu_solve(&g, &pts, "P^T S P")?)
}

fn cholesky_check(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    check_square(m, what)?;
    if m.clone().cholesky().is_none() {
        return Err(Error::NotSpd(what));
    }
    Ok(())
}

/// `||(I - Pi) v||_S^2 / ||v||_A^2` with `Pi` the `S`-orthogonal projection
/// onto the range of `P`.
pub fn kappa(p: &Interpolation, v: &DVector<f64>, a: &DMatrix<f64>, m_sym: &DMatrix<f64>) -> Result<f64> {
    cholesky_check(a, "A")?;
    cholesky_check(m_sym, "symmetrized smoother")?;
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument("kappa of the zero vector".into()));
    }
    let pi = m_projection(p, m_sym)?;
    let r = v - pi * v;
    Ok(r.dot(&(m_sym * &r)) / v.dot(&(a * v)))
}

/// `||E||_A`, the largest singular value of `A^{1/2} E A^{-1/2}`.
pub fn anorm_of_operator(e: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<f64> {
    cholesky_check(a, "A")?;
    check_same_shape(e, a, "operator and A")?;
    let eig = SymmetricEigen::new(a.clone());
    let q = &eig.eigenvectors;
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let half = q * sqrt * q.transpose();
    let inv_half = q * inv_sqrt * q.transpose();
    Ok((half * e * inv_half).singular_values().max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{eigenvalues, rel_frobenius};
    use crate::eigsolve::generalized_eig;
    use crate::matgen::poisson_2d;
    use crate::smoother::Smoother;

    fn unit(n: usize, j: usize) -> Interpolation {
        let mut p = DMatrix::zeros(n, 1);
        p[(j, 0)] = 1.0;
        Interpolation::custom(p).unwrap()
    }

    #[test]
    fn splits() {
        let s = cf_split_every_other(4, 2).unwrap();
        assert_eq!((s.c_indices.clone(), s.f_indices.clone()), (vec![1, 3], vec![0, 2]));
        let s = cf_split_every_other(5, 2).unwrap();
        assert_eq!((s.c_indices.clone(), s.f_indices.clone()), (vec![1, 3], vec![0, 2, 4]));
        let s = cf_split_every_other(6, 3).unwrap();
        assert_eq!((s.c_indices.clone(), s.f_indices.clone()), (vec![2, 5], vec![0, 1, 3, 4]));
        assert!(cf_split_every_other(1, 2).is_err());
        assert!(cf_split_every_other(4, 1).is_err());
        assert!(cf_split_every_other(2, 5).is_err());
    }

    #[test]
    fn ideal_interpolation_by_hand() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let split = CfSplit::new(2, vec![1]).unwrap();
        let p = ideal_interpolation(&a, &split).unwrap();
        assert_eq!(p.p, DMatrix::from_row_slice(2, 1, &[0.5, 1.0]));
        assert_eq!(p.kind, InterpolationKind::Ideal);

        let d = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 2.0, 3.0]));
        let p = ideal_interpolation(&d, &CfSplit::new(3, vec![0, 2]).unwrap()).unwrap();
        assert_eq!(p.p, DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn ideal_galerkin_is_spd_for_poisson() {
        let a = poisson_2d(2).to_dense();
        let p = ideal_interpolation(&a, &cf_split_every_other(4, 2).unwrap()).unwrap();
        let ac = coarse_operator(&a, &p).unwrap();
        assert!(rel_frobenius(&ac, &ac.transpose()) < 1e-14);
        assert!(SymmetricEigen::new(ac).eigenvalues.min() > 0.0);
    }

    #[test]
    fn unit_vector_coarse_operator() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 2.0, 5.0]);
        assert_eq!(coarse_operator(&a, &unit(2, 1)).unwrap()[(0, 0)], 5.0);
        let zero_diag = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            coarse_operator(&zero_diag, &unit(2, 0)),
            Err(Error::IllConditionedCoarse { .. })
        ));
    }

    #[test]
    fn projection_properties() {
        let m = poisson_2d(2).to_dense();
        let p = Interpolation::custom(DMatrix::from_row_slice(4, 2, &[1., 0., 1., 1., 0., 2., 3., 1.]))
            .unwrap();
        let pi = m_projection(&p, &m).unwrap();
        assert!((&pi * &pi - &pi).amax() < 1e-10);
        assert!((&pi * &p.p - &p.p).amax() < 1e-10);
        let pi = m_projection(&unit(3, 0), &DMatrix::identity(3, 3)).unwrap();
        let mut expected = DMatrix::zeros(3, 3);
        expected[(0, 0)] = 1.0;
        assert_eq!(pi, expected);
    }

    #[test]
    fn kappa_cases() {
        let i = DMatrix::<f64>::identity(3, 3);
        let e2 = DVector::from_row_slice(&[0.0, 1.0, 0.0]);
        assert_eq!(kappa(&unit(3, 0), &e2, &i, &i).unwrap(), 1.0);
        let e1 = DVector::from_row_slice(&[2.0, 0.0, 0.0]);
        assert_eq!(kappa(&unit(3, 0), &e1, &i, &i).unwrap(), 0.0);
        assert!(kappa(&unit(3, 0), &DVector::zeros(3), &i, &i).is_err());
        let indefinite = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, -1.0, 1.0]));
        assert!(matches!(kappa(&unit(3, 0), &e2, &indefinite, &i), Err(Error::NotSpd(_))));
    }

    #[test]
    fn kappa_extremal_value_on_poisson() {
        let a = poisson_2d(4).to_dense();
        let ms = Smoother::kaczmarz(&a).unwrap().m_sym;
        let spec = generalized_eig(&a, &ms, 1e-8).unwrap();
        for n_c in [1, 5, 10] {
            let p = optimal_interpolation(&spec, n_c).unwrap();
            let v = spec.vectors.column(n_c).into_owned();
            let k = kappa(&p, &v, &a, &ms).unwrap();
            assert!((k - 1.0 / spec.values[n_c]).abs() < 1e-8 * k, "n_c {n_c}");
        }
    }

    #[test]
    fn anorm_trivial() {
        let a = poisson_2d(2).to_dense();
        assert_eq!(anorm_of_operator(&DMatrix::zeros(4, 4), &a).unwrap(), 0.0);
        let one = anorm_of_operator(&DMatrix::identity(4, 4), &a).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_coarse_space_is_exact() {
        let a = poisson_2d(3).to_dense();
        let s = Smoother::kaczmarz(&a).unwrap();
        let spec = generalized_eig(&a, &s.m_sym, 1e-8).unwrap();
        let p = optimal_interpolation(&spec, 9).unwrap();
        assert_eq!(two_grid_error(&a, &s.m_sym, &p).unwrap(), DMatrix::zeros(9, 9));
        let e = two_grid_error_prepost(&a, &s.m, &p, &p.p.transpose()).unwrap();
        assert!(e.amax() < 1e-10);
        assert!(optimal_interpolation(&spec, 0).is_err());
        assert!(optimal_interpolation(&spec, 10).is_err());
    }

    #[test]
    fn exact_smoother_kills_error() {
        let a = poisson_2d(2).to_dense();
        let p = unit(4, 0);
        let e = two_grid_error_prepost(&a, &a, &p, &p.p.transpose()).unwrap();
        assert!(e.amax() < 1e-12);
    }

    #[test]
    fn optimal_error_spectrum_on_poisson() {
        let a = poisson_2d(3).to_dense();
        let s = Smoother::kaczmarz(&a).unwrap();
        let spec = generalized_eig(&a, &s.m_sym, 1e-8).unwrap();
        let p = optimal_interpolation(&spec, 4).unwrap();
        let e = two_grid_error(&a, &s.m_sym, &p).unwrap();
        assert!((&e * &p.p).norm() < 1e-10);
        let rho = eigenvalues(&e).unwrap().iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!((rho - (1.0 - spec.values[4])).abs() < 1e-10);
    }
}
