//! The symmetric indefinite block operator `[[0, A], [A^T, 0]]`.
//!
//! Its eigenvalues are `+sigma_i` and `-sigma_i` for the singular values of
//! `A`, which is what lets the symmetric two-grid theory speak about a
//! nonsymmetric `A`.

use nalgebra::SymmetricEigen;

use crate::dense::check_dense_limit;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    pub a: SparseMatrix,
    pub block: SparseMatrix,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingReport {
    pub max_pairing_error: f64,
    pub ok: bool,
}

pub fn build_block(a: &SparseMatrix) -> Result<BlockSystem> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "block operator needs a square A, got {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let k = a.n_rows();
    let upper = a.triplets().map(|(i, j, v)| (i, j + k, v));
    let lower = a.triplets().map(|(i, j, v)| (j + k, i, v));
    let block = SparseMatrix::from_triplets(2 * k, 2 * k, upper.chain(lower))?;
    Ok(BlockSystem { a: a.clone(), block, k })
}

impl BlockSystem {
    /// Dimension of the block operator.
    pub fn dim(&self) -> usize {
        2 * self.k
    }
}

/// Compares the dense eigenvalues of the block operator with `{+sigma, -sigma}`.
pub fn verify_block_spectrum(bs: &BlockSystem, tol: f64, dense_limit: usize) -> Result<PairingReport> {
    check_dense_limit(bs.k, dense_limit)?;
    let mut eig: Vec<f64> =
        SymmetricEigen::new(bs.block.to_dense()).eigenvalues.iter().copied().collect();
    let sigma = bs.a.to_dense().singular_values();
    let mut paired: Vec<f64> = sigma.iter().flat_map(|&s| [s, -s]).collect();
    eig.sort_by(f64::total_cmp);
    paired.sort_by(f64::total_cmp);
    let max_pairing_error =
        eig.iter().zip(&paired).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(PairingReport { max_pairing_error, ok: max_pairing_error <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DEFAULT_DENSE_LIMIT;
    use crate::matgen::{advdiff_2d, default_advection, random_nonsym, DEFAULT_ALPHA};
    use crate::rng::SeededRng;

    #[test]
    fn one_by_one() {
        let a = SparseMatrix::identity(1);
        let bs = build_block(&a).unwrap();
        assert_eq!(bs.block.to_dense(), nalgebra::DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]));
        let rep = verify_block_spectrum(&bs, 1e-14, DEFAULT_DENSE_LIMIT).unwrap();
        assert_eq!(rep.max_pairing_error, 0.0);
        assert!(rep.ok);
    }

    #[test]
    fn rotation_block_pattern() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, -1.0)]).unwrap();
        let bs = build_block(&a).unwrap();
        assert_eq!(bs.block.nnz(), 4);
        assert_eq!(bs.dim(), 4);
        assert!(bs.block.is_symmetric());
    }

    #[test]
    fn diagonal_decouples() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        let bs = build_block(&a).unwrap();
        let mut eig: Vec<f64> = SymmetricEigen::new(bs.block.to_dense())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(f64::total_cmp);
        let expected = [-3.0, -2.0, 2.0, 3.0];
        for (x, y) in eig.iter().zip(expected) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn blocks_hold_a_and_its_transpose() {
        let a = random_nonsym(9, 0.4, 2);
        let bs = build_block(&a).unwrap();
        let d = bs.block.to_dense();
        let ad = a.to_dense();
        assert!(d.view((0, 0), (9, 9)).iter().all(|&v| v == 0.0));
        assert!(d.view((9, 9), (9, 9)).iter().all(|&v| v == 0.0));
        assert_eq!(d.view((0, 9), (9, 9)), ad);
        assert_eq!(d.view((9, 0), (9, 9)), ad.transpose());
        assert!(bs.block.is_symmetric());
    }

    #[test]
    fn stacked_vector_action() {
        let a = random_nonsym(7, 0.5, 4);
        let bs = build_block(&a).unwrap();
        let mut rng = SeededRng::new(1);
        let z: Vec<f64> = (0..7).map(|_| rng.next_symmetric()).collect();
        let x: Vec<f64> = (0..7).map(|_| rng.next_symmetric()).collect();
        let stacked: Vec<f64> = z.iter().chain(&x).copied().collect();
        let out = bs.block.mul_vec(&stacked);
        let ax = a.mul_vec(&x);
        let atz = a.transpose().mul_vec(&z);
        for i in 0..7 {
            assert!((out[i] - ax[i]).abs() < 1e-15);
            assert!((out[7 + i] - atz[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn random_pairing_and_full_size() {
        let a = random_nonsym(8, 0.3, 17);
        let rep = verify_block_spectrum(&build_block(&a).unwrap(), 1e-10, DEFAULT_DENSE_LIMIT)
            .unwrap();
        assert!(rep.ok, "pairing error {}", rep.max_pairing_error);

        let a = advdiff_2d(16, DEFAULT_ALPHA, default_advection());
        assert_eq!(build_block(&a).unwrap().block.n_rows(), 512);
    }

    #[test]
    fn dense_limit_and_shape_errors() {
        let bs = build_block(&random_nonsym(8, 0.3, 1)).unwrap();
        assert!(matches!(verify_block_spectrum(&bs, 1e-10, 4), Err(Error::DenseLimit { .. })));
        let rect = SparseMatrix::zeros(2, 3);
        assert!(matches!(build_block(&rect), Err(Error::Shape(_))));
    }
}
