//! Test operator generators: 2D Poisson, 2D upwind advection-diffusion and
//! random diagonally dominant nonsymmetric matrices.
//!
//! Grid nodes are numbered row-major with `x` varying fastest, i.e. node
//! `(ix, iy)` has index `iy * grid_n + ix`.

use std::fmt;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::sparse::SparseMatrix;

pub const DEFAULT_ALPHA: f64 = 0.1;

/// Advection field `[sqrt(2/3), sqrt(1/3)]`.
pub fn default_advection() -> [f64; 2] {
    [(2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemSpec {
    Poisson2d { grid_n: usize },
    AdvDiff2d { grid_n: usize, alpha: f64, b_vec: [f64; 2] },
    Random { n: usize, density: f64, seed: u64 },
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProblemSpec::Poisson2d { grid_n } => check_grid(grid_n),
            ProblemSpec::AdvDiff2d { grid_n, alpha, b_vec } => {
                check_grid(grid_n)?;
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
                }
                if !b_vec.iter().all(|b| b.is_finite()) {
                    return Err(Error::InvalidArgument("advection vector must be finite".into()));
                }
                Ok(())
            }
            ProblemSpec::Random { n, density, .. } => {
                if n == 0 {
                    return Err(Error::InvalidArgument("n must be >= 1".into()));
                }
                if !(density > 0.0 && density <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "density must lie in (0, 1], got {density}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Dimension of the generated operator.
    pub fn dim(&self) -> usize {
        match *self {
            ProblemSpec::Poisson2d { grid_n } | ProblemSpec::AdvDiff2d { grid_n, .. } => {
                grid_n * grid_n
            }
            ProblemSpec::Random { n, .. } => n,
        }
    }

    pub fn generate(&self) -> Result<SparseMatrix> {
        self.validate()?;
        Ok(match *self {
            ProblemSpec::Poisson2d { grid_n } => poisson_2d(grid_n),
            ProblemSpec::AdvDiff2d { grid_n, alpha, b_vec } => advdiff_2d(grid_n, alpha, b_vec),
            ProblemSpec::Random { n, density, seed } => random_nonsym(n, density, seed),
        })
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Poisson2d { grid_n } => write!(f, "kind=poisson2d grid_n={grid_n}"),
            ProblemSpec::AdvDiff2d { grid_n, alpha, b_vec } => write!(
                f,
                "kind=advdiff2d grid_n={grid_n} alpha={alpha:e} bx={:e} by={:e}",
                b_vec[0], b_vec[1]
            ),
            ProblemSpec::Random { n, density, seed } => {
                write!(f, "kind=random n={n} density={density:e} seed={seed}")
            }
        }
    }
}

fn check_grid(grid_n: usize) -> Result<()> {
    if grid_n == 0 {
        return Err(Error::InvalidArgument("grid_n must be >= 1".into()));
    }
    Ok(())
}

/// Five-point Laplacian `(4u - neighbours) / h^2` with homogeneous Dirichlet
/// boundary on a `grid_n x grid_n` interior grid.
pub(crate) fn laplacian_5pt(grid_n: usize, h: f64) -> SparseMatrix {
    stencil_2d(grid_n, 1.0 / (h * h), [0.0, 0.0], h)
}

/// Assembles `-diff * lap(u) + b . grad(u)` with first-order upwinding.
fn stencil_2d(grid_n: usize, diff: f64, b: [f64; 2], h: f64) -> SparseMatrix {
    let n = grid_n * grid_n;
    let mut triplets = Vec::with_capacity(5 * n);
    let adv_diag: f64 = b.iter().map(|c| c.abs()).sum::<f64>() / h;
    for iy in 0..grid_n {
        for ix in 0..grid_n {
            let row = iy * grid_n + ix;
            // 4 * diff is exact, so alpha-scaling commutes with assembly
            let mut diag = 4.0 * diff;
            if adv_diag != 0.0 {
                diag += adv_diag;
            }
            triplets.push((row, row, diag));

            // (neighbour offset, advection component, sign that makes it upwind)
            let neighbours = [
                (ix > 0, row.wrapping_sub(1), b[0] > 0.0, b[0]),
                (ix + 1 < grid_n, row + 1, b[0] < 0.0, b[0]),
                (iy > 0, row.wrapping_sub(grid_n), b[1] > 0.0, b[1]),
                (iy + 1 < grid_n, row + grid_n, b[1] < 0.0, b[1]),
            ];
            for (inside, col, upwind, comp) in neighbours {
                if !inside {
                    continue;
                }
                let mut v = -diff;
                if upwind {
                    v += -comp.abs() / h;
                }
                triplets.push((row, col, v));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, triplets).expect("stencil indices are in range")
}

/// Five-point Laplacian on the unit square, `h = 1 / (grid_n + 1)`.
pub fn poisson_2d(grid_n: usize) -> SparseMatrix {
    assert!(grid_n >= 1, "grid_n must be >= 1");
    laplacian_5pt(grid_n, 1.0 / (grid_n as f64 + 1.0))
}

/// `-alpha lap(u) + b . grad(u)` on `[-1, 1]^2`, `h = 2 / (grid_n + 1)`.
///
/// Each advection component is differenced against the flow: a backward
/// difference when the component is positive, forward when negative.
pub fn advdiff_2d(grid_n: usize, alpha: f64, b_vec: [f64; 2]) -> SparseMatrix {
    assert!(grid_n >= 1, "grid_n must be >= 1");
    assert!(alpha > 0.0, "alpha must be positive");
    let h = 2.0 / (grid_n as f64 + 1.0);
    stencil_2d(grid_n, alpha * (1.0 / (h * h)), b_vec, h)
}

/// Random sparse nonsymmetric matrix made strictly diagonally dominant.
///
/// Off-diagonal positions are visited row-major; each is kept with
/// probability `density` (one draw) and given a value uniform on `[-1, 1)`
/// (a second draw). The diagonal is `1 + sum_j |a_ij|`.
pub fn random_nonsym(n: usize, density: f64, seed: u64) -> SparseMatrix {
    assert!(n >= 1, "n must be >= 1");
    assert!(density > 0.0 && density <= 1.0, "density must lie in (0, 1]");
    let mut rng = SeededRng::new(seed);
    let mut triplets = Vec::new();
    for i in 0..n {
        let mut abs_sum = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            if rng.next_f64() < density {
                let v = rng.next_symmetric();
                if v != 0.0 {
                    abs_sum += v.abs();
                    triplets.push((i, j, v));
                }
            }
        }
        triplets.push((i, i, 1.0 + abs_sum));
    }
    SparseMatrix::from_triplets(n, n, triplets).expect("indices are in range")
}
