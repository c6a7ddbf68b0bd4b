//! Convergence measurements: exact spectral radii, the predicted rate
//! `1 - lambda_{nc+1}`, power-method reduction rates and `n_c` sweeps.

use log::warn;
use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{check_square, eigenvalues};
use crate::eigsolve::Spectrum;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::twogrid::{optimal_interpolation, two_grid_error};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub n_c: usize,
    pub lambda_next: f64,
    pub theory_rate: f64,
    pub robust_rate: f64,
    pub rho_exact: f64,
    pub err_rate: f64,
    pub res_rate: f64,
    pub iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRates {
    pub err_rate: f64,
    pub res_rate: f64,
    pub err_history: Vec<f64>,
    pub res_history: Vec<f64>,
    /// The iterate vanished, so the operator is nilpotent on the start vector.
    pub vanished: bool,
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(e: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(e)?.iter().map(|c| c.norm()).fold(0.0, f64::max))
}

/// Power iteration on `E` from a seeded random unit vector.
///
/// Each step records `||e_{k+1}|| / ||e_k||` and `||A e_{k+1}|| / ||A e_k||`
/// before renormalizing `e_{k+1}` to unit length.
pub fn power_rates(e: &DMatrix<f64>, a_op: &DMatrix<f64>, iters: usize, seed: u64) -> Result<PowerRates> {
    check_square(e, "error propagator")?;
    if a_op.shape() != e.shape() {
        return Err(Error::Shape("propagator and operator sizes differ".into()));
    }
    if iters == 0 {
        return Err(Error::InvalidArgument("power iteration needs iters >= 1".into()));
    }
    let mut rng = SeededRng::new(seed);
    let mut x = DVector::from_vec(rng.unit_vector(e.nrows()));
    let mut ax_norm = (a_op * &x).norm();
    let mut err_history = Vec::with_capacity(iters);
    let mut res_history = Vec::with_capacity(iters);
    for _ in 0..iters {
        let y = e * &x;
        let y_norm = y.norm();
        let ay_norm = (a_op * &y).norm();
        if y_norm == 0.0 || !y_norm.is_finite() {
            err_history.push(0.0);
            res_history.push(0.0);
            return Ok(PowerRates { err_rate: 0.0, res_rate: 0.0, err_history, res_history, vanished: true });
        }
        // x has unit length, so the error ratio is just ||y||
        err_history.push(y_norm);
        res_history.push(if ax_norm == 0.0 { 0.0 } else { ay_norm / ax_norm });
        x = y / y_norm;
        ax_norm = ay_norm / y_norm;
    }
    Ok(PowerRates {
        err_rate: *err_history.last().expect("iters >= 1"),
        res_rate: *res_history.last().expect("iters >= 1"),
        err_history,
        res_history,
        vanished: false,
    })
}

/// `(1 - lambda_{nc+1}, max_{i >= nc} |1 - lambda_i|)` with zero-based `n_c`.
pub fn theory_rate(spec: &Spectrum, n_c: usize) -> Result<(f64, f64)> {
    let values: Vec<Complex<f64>> = (0..spec.len()).map(|i| spec.complex_value(i)).collect();
    theory_rate_values(&values, n_c)
}

pub fn theory_rate_values(values: &[Complex<f64>], n_c: usize) -> Result<(f64, f64)> {
    if n_c >= values.len() {
        return Err(Error::InvalidArgument(format!(
            "n_c must lie in 0..{}, got {n_c}",
            values.len()
        )));
    }
    let theory = 1.0 - values[n_c].re;
    let robust = values[n_c..].iter().map(|l| (1.0 - l).norm()).fold(0.0, f64::max);
    Ok((theory, robust))
}

/// One record per `n_c`, in ascending order.
///
/// `n_c = n` yields the exact coarse solve with every rate zero.
pub fn sweep(
    a_op: &DMatrix<f64>,
    m_sym: &DMatrix<f64>,
    spec: &Spectrum,
    nc_list: &[usize],
    iters: usize,
    seed: u64,
) -> Result<Vec<RateRecord>> {
    let n = spec.len();
    if nc_list.is_empty() {
        return Err(Error::InvalidArgument("n_c list is empty".into()));
    }
    if let Some(&bad) = nc_list.iter().find(|&&c| c == 0 || c > n) {
        return Err(Error::InvalidArgument(format!("n_c = {bad} outside 1..={n}")));
    }
    if nc_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n_c list must be strictly ascending".into()));
    }
    for &n_c in nc_list {
        if let Some(b) = spec.split_block(n_c) {
            warn!(
                "n_c = {n_c} cuts a {:?} eigenvalue block at {}..{}; the coarse space is not invariant",
                b.kind,
                b.start,
                b.start + b.len
            );
        }
    }
    nc_list.par_iter().map(|&n_c| sweep_row(a_op, m_sym, spec, n_c, iters, seed)).collect()
}

fn sweep_row(
    a_op: &DMatrix<f64>,
    m_sym: &DMatrix<f64>,
    spec: &Spectrum,
    n_c: usize,
    iters: usize,
    seed: u64,
) -> Result<RateRecord> {
    let n = spec.len();
    if n_c == n {
        return Ok(RateRecord {
            n_c,
            lambda_next: f64::NAN,
            theory_rate: 0.0,
            robust_rate: 0.0,
            rho_exact: 0.0,
            err_rate: 0.0,
            res_rate: 0.0,
            iters,
        });
    }
    let p = optimal_interpolation(spec, n_c)?;
    let e = two_grid_error(a_op, m_sym, &p)?;
    let (theory_rate, robust_rate) = theory_rate(spec, n_c)?;
    let rho_exact = spectral_radius(&e)?;
    let power = power_rates(&e, a_op, iters, seed)?;
    Ok(RateRecord {
        n_c,
        lambda_next: spec.values[n_c],
        theory_rate,
        robust_rate,
        rho_exact,
        err_rate: power.err_rate,
        res_rate: power.res_rate,
        iters,
    })
}
