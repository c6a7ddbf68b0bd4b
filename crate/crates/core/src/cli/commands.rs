use std::fs;
use std::path::Path;

use log::info;
use nalgebra::{DMatrix, DVector};

use super::RunConfig;
use crate::analysis::{spectral_radius, sweep, RateRecord};
use crate::blocksys::{build_block, verify_block_spectrum, BlockSystem};
use crate::dense::{check_dense_limit, rel_frobenius, DEFAULT_DENSE_LIMIT};
use crate::eigsolve::{generalized_eig, orthonormality_residual, residual, Spectrum};
use crate::error::{Error, Result};
use crate::mmio;
use crate::report;
use crate::rng::SeededRng;
use crate::smoother::{check_convergent, kaczmarz_sweep, propagator, smoothing_radius, Smoother};
use crate::sparse::SparseMatrix;
use crate::twogrid::{anorm_of_operator, optimal_interpolation, two_grid_error};

/// Everything derived from a configuration up to the smoother.
pub struct Pipeline {
    pub a: SparseMatrix,
    pub block: Option<BlockSystem>,
    /// The operator the analysis runs on: `A` or the block operator.
    pub op_sparse: SparseMatrix,
    pub op: DMatrix<f64>,
    pub smoother: Smoother,
}

impl Pipeline {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        check_dense_limit(cfg.operator_dim(), cfg.dense_limit)?;
        let a = cfg.problem.generate()?;
        let block = if cfg.spd_mode { None } else { Some(build_block(&a)?) };
        let op_sparse = block.as_ref().map_or_else(|| a.clone(), |b| b.block.clone());
        let op = op_sparse.to_dense();
        info!("building Kaczmarz smoother for a {}x{} operator", op.nrows(), op.ncols());
        let smoother = Smoother::kaczmarz(&op)?;
        Ok(Self { a, block, op_sparse, op, smoother })
    }

    pub fn spectrum(&self, cfg: &RunConfig) -> Result<Spectrum> {
        info!("solving the generalized eigenproblem");
        generalized_eig(&self.op, &self.smoother.m_sym, cfg.imag_tol)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<i32> {
    println!("twogrid gen: {}", cfg.header());
    let a = cfg.problem.generate()?;
    ensure_dir(&cfg.out_dir)?;
    let a_path = cfg.out_dir.join("a.mtx");
    mmio::save_sparse(&a_path, &a, &cfg.problem.to_string())?;
    println!("wrote {} ({}x{}, nnz {})", a_path.display(), a.n_rows(), a.n_cols(), a.nnz());
    if !cfg.spd_mode {
        let bs = build_block(&a)?;
        let path = cfg.out_dir.join("block.mtx");
        mmio::save_sparse(&path, &bs.block, &format!("{}\nblock operator [[0, A], [A^T, 0]]", cfg.problem))?;
        println!("wrote {} ({}x{}, nnz {})", path.display(), bs.dim(), bs.dim(), bs.block.nnz());
    }
    Ok(0)
}

struct Check {
    name: String,
    outcome: std::result::Result<(f64, f64), String>,
    /// Measured value must be below the tolerance, or above it when false.
    below: bool,
}

impl Check {
    fn passed(&self) -> bool {
        match self.outcome {
            Ok((v, tol)) => {
                if self.below {
                    v <= tol
                } else {
                    v > tol
                }
            }
            Err(_) => false,
        }
    }

    fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        match &self.outcome {
            Ok((v, tol)) => {
                let rel = if self.below { "<=" } else { ">" };
                format!("{status} {:<34} {v:.3e} (need {rel} {tol:.1e})", self.name)
            }
            Err(e) => format!("{status} {:<34} error: {e}", self.name),
        }
    }
}

fn check(name: impl Into<String>, below: bool, f: impl FnOnce() -> Result<(f64, f64)>) -> Check {
    Check { name: name.into(), outcome: f().map_err(|e| e.to_string()), below }
}

/// Runs the invariant suite; exit code 0 iff every check passes.
pub fn cmd_verify(cfg: &RunConfig, corrupt_msym: bool) -> Result<i32> {
    println!("twogrid verify: {}", cfg.header());
    let nc_list = cfg.resolved_nc_list()?;
    let mut p = Pipeline::build(cfg)?;
    if corrupt_msym {
        p.smoother.m_sym[(0, 0)] += 1.0;
    }
    let op = &p.op;
    let s = &p.smoother;
    let n = op.nrows();
    let mut checks = Vec::new();

    if let Some(bs) = &p.block {
        checks.push(check("block spectrum pairing", true, || {
            let smax = bs.a.to_dense().singular_values().max();
            let rep = verify_block_spectrum(bs, 1e-10 * smax, cfg.dense_limit.max(DEFAULT_DENSE_LIMIT))?;
            Ok((rep.max_pairing_error, 1e-10 * smax))
        }));
    }
    checks.push(check("symmetrized smoother symmetry", true, || {
        Ok((rel_frobenius(&s.m_sym, &s.m_sym.transpose()), 1e-12))
    }));
    checks.push(check("symmetrize factorization identity", true, || {
        let lhs = propagator(&s.m_sym, op)?;
        let rhs = propagator(&s.m, op)? * propagator(&s.m.transpose(), op)?;
        Ok((rel_frobenius(&lhs, &rhs), 1e-10))
    }));
    checks.push(check("Kaczmarz matrix vs row action", true, || {
        let mut rng = SeededRng::new(cfg.seed);
        let b: Vec<f64> = (0..n).map(|_| rng.next_symmetric()).collect();
        let x0: Vec<f64> = (0..n).map(|_| rng.next_symmetric()).collect();
        let mut x = x0.clone();
        kaczmarz_sweep(&p.op_sparse, &b, &mut x);
        let r = DVector::from_vec(b) - op * DVector::from_row_slice(&x0);
        let corr = s.m.clone().lu().solve(&r).ok_or(Error::Singular("Kaczmarz smoother"))?;
        let err = (0..n).map(|i| (x[i] - x0[i] - corr[i]).abs()).fold(0.0, f64::max);
        Ok((err, 1e-12))
    }));
    if cfg.spd_mode {
        checks.push(check("min eig(M + M^T - A)", false, || {
            Ok((check_convergent(&s.m, op)?.min_eig, 0.0))
        }));
    } else {
        // the block operator is indefinite, so M + M^T - A is too; report it and
        // test convergence of the symmetrized smoothing iteration instead
        if let Ok(rep) = check_convergent(&s.m, op) {
            println!("info min eig(M + M^T - A) = {:.6e}", rep.min_eig);
        }
        checks.push(check("smoothing radius rho(I - S^-1 A)", true, || {
            Ok((smoothing_radius(&s.m_sym, op)?, 1.0 - 1e-12))
        }));
    }

    let spec = generalized_eig(op, &s.m_sym, cfg.imag_tol);
    match &spec {
        Ok(spec) => {
            println!(
                "info spectrum: lambda in [{:.6e}, {:.6e}], {} negative norm signs, max |Im| {:.3e}",
                spec.values[0],
                spec.values[n - 1],
                spec.negative_signs(),
                spec.max_imag
            );
            checks.push(check("smoother orthonormality", true, || {
                Ok((orthonormality_residual(spec, &s.m_sym), 1e-8))
            }));
            checks.push(check("eigen residual", true, || Ok((residual(spec, op, &s.m_sym), 1e-8))));
            for &n_c in nc_list.iter().filter(|&&c| c < n) {
                checks.push(check(format!("annihilation n_c={n_c}"), true, || {
                    let pp = optimal_interpolation(spec, n_c)?;
                    let e = two_grid_error(op, &s.m_sym, &pp)?;
                    Ok(((e * &pp.p).norm() / spec.vectors.norm(), 1e-8))
                }));
                if cfg.spd_mode {
                    checks.push(check(format!("energy-norm identity n_c={n_c}"), true, || {
                        let pp = optimal_interpolation(spec, n_c)?;
                        let e = two_grid_error(op, &s.m, &pp)?;
                        let an = anorm_of_operator(&e, op)?;
                        Ok(((an * an - (1.0 - spec.values[n_c])).abs(), 1e-8))
                    }));
                }
            }
        }
        Err(e) => checks.push(Check {
            name: "generalized eigenproblem".into(),
            outcome: Err(e.to_string()),
            below: true,
        }),
    }

    let mut failed = 0;
    for c in &checks {
        println!("{}", c.line());
        if !c.passed() {
            failed += 1;
        }
    }
    println!("{} checks, {failed} failed", checks.len());
    Ok(if failed == 0 { 0 } else { 1 })
}

/// Full pipeline; writes `rates.csv`, `rates.svg` and `spy.svg`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<RateRecord>> {
    println!("twogrid sweep: {}", cfg.header());
    let nc_list = cfg.resolved_nc_list()?;
    let p = Pipeline::build(cfg)?;
    let spec = p.spectrum(cfg)?;
    info!("sweeping {} coarse sizes", nc_list.len());
    let records = sweep(&p.op, &p.smoother.m_sym, &spec, &nc_list, cfg.power_iters, cfg.seed)?;

    ensure_dir(&cfg.out_dir)?;
    report::save_rates_csv(&cfg.out_dir.join("rates.csv"), &records)?;
    report::rates_svg(&records, &cfg.out_dir.join("rates.svg"))?;
    report::spy_svg(&p.op_sparse, p.block.as_ref().map(|b| b.k), &cfg.out_dir.join("spy.svg"))?;

    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}", "n_c", "lambda_next", "theory", "robust", "rho", "err_rate", "res_rate");
    for r in &records {
        println!(
            "{:>6} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            r.n_c, r.lambda_next, r.theory_rate, r.robust_rate, r.rho_exact, r.err_rate, r.res_rate
        );
    }
    println!("wrote rates.csv, rates.svg, spy.svg to {}", cfg.out_dir.display());
    Ok(records)
}

pub fn cmd_spy(cfg: &RunConfig) -> Result<i32> {
    println!("twogrid spy: {}", cfg.header());
    let a = cfg.problem.generate()?;
    ensure_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join("spy.svg");
    if cfg.spd_mode {
        report::spy_svg(&a, None, &path)?;
    } else {
        let bs = build_block(&a)?;
        report::spy_svg(&bs.block, Some(bs.k), &path)?;
    }
    println!("wrote {}", path.display());
    Ok(0)
}

pub fn cmd_spectrum(cfg: &RunConfig, vectors: bool) -> Result<i32> {
    println!("twogrid spectrum: {}", cfg.header());
    let p = Pipeline::build(cfg)?;
    let spec = p.spectrum(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let mut buf = Vec::new();
    report::write_spectrum_csv(&mut buf, &spec)?;
    fs::write(cfg.out_dir.join("spectrum.csv"), buf)?;
    if vectors {
        mmio::save_dense_array(&cfg.out_dir.join("vectors.mtx"), &spec.vectors, &cfg.header())?;
    }
    let rho = spectral_radius(&propagator(&p.smoother.m_sym, &p.op)?)?;
    println!(
        "n = {}, lambda in [{:.6e}, {:.6e}], {} negative norm signs, max |Im| {:.3e}, smoothing radius {:.6}",
        spec.len(),
        spec.values[0],
        spec.values[spec.len() - 1],
        spec.negative_signs(),
        spec.max_imag,
        rho
    );
    Ok(0)
}
