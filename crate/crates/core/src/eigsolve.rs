//! Generalized eigenproblem `A x = lambda S x` for a symmetric (possibly
//! indefinite) operator `A` and symmetrized smoother `S`.
//!
//! The pencil is reduced to the standard problem `S^{-1} A` and solved with
//! the dense real QR algorithm. Eigenvectors are then made `S`-orthonormal,
//! which for an indefinite `S` means `V^T S V = diag(norm_signs)` with signs
//! in `{+1, -1}`.
//!
//! Eigenvalues that sit within `link_tol * max|lambda|` of each other and
//! whose vectors interact (nonzero `S`-coupling, nearly parallel, or an
//! `S`-neutral member) are handled as one block:
//!
//! * `Multiple`: a full-rank set of real eigenvectors, re-orthonormalized
//!   with an indefinite Gram-Schmidt.
//! * `Complex`: conjugate pairs within the imaginary tolerance, realified into
//!   their real and imaginary parts.
//! * `Defective`: the computed eigenvectors are numerically dependent (a
//!   nontrivial Jordan structure). The block's invariant subspace is
//!   recomputed by shift-and-invert subspace iteration and every member gets
//!   the cluster's mean eigenvalue.
//!
//! Only the span of a non-simple block is meaningful, so a coarse space that
//! cuts through a `Complex` or `Defective` block is not invariant.

use log::{debug, warn};
use nalgebra::{Complex, DMatrix, DVector};

use crate::dense::{check_same_shape, check_square, lu_solve};
use crate::error::{Error, Result};
use crate::hqr;
use crate::rng::SeededRng;

pub const DEFAULT_IMAG_TOL: f64 = 1e-3;
pub const DEFAULT_NEUTRAL_FLOOR: f64 = 1e-10;
pub const DEFAULT_LINK_TOL: f64 = 1e-3;

/// Relative singular value gap below which a block's eigenvectors are
/// treated as dependent.
const RANK_TOL: f64 = 1e-6;
/// Coupling threshold, relative to `max|S_ij|`, for linking close eigenvalues.
const COUPLING_TOL: f64 = 1e-8;
/// Cosine above which two unit eigenvectors count as nearly parallel.
const COSINE_TOL: f64 = 1e-3;
const SUBSPACE_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    /// Largest tolerated `|Im lambda|`, relative to `max|lambda|`.
    pub imag_tol: f64,
    /// Smallest tolerated `|v^T S v|` for a unit vector, relative to `max|S_ij|`.
    pub neutral_floor: f64,
    pub link_tol: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            imag_tol: DEFAULT_IMAG_TOL,
            neutral_floor: DEFAULT_NEUTRAL_FLOOR,
            link_tol: DEFAULT_LINK_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Simple,
    Multiple,
    Complex,
    Defective,
}

impl BlockKind {
    /// Whether the individual columns of the block are eigenvectors.
    pub fn columns_are_eigenvectors(self) -> bool {
        matches!(self, BlockKind::Simple | BlockKind::Multiple)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigenBlock {
    pub start: usize,
    pub len: usize,
    pub kind: BlockKind,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending real parts.
    pub values: Vec<f64>,
    /// Imaginary parts matching `values`; zero except in `Complex` blocks.
    pub imag: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub norm_signs: Vec<f64>,
    pub max_imag: f64,
    pub blocks: Vec<EigenBlock>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn complex_value(&self, i: usize) -> Complex<f64> {
        Complex::new(self.values[i], self.imag[i])
    }

    /// The block that a coarse space of the first `n_c` columns would cut,
    /// if any. Only blocks whose columns are not eigenvectors count.
    pub fn split_block(&self, n_c: usize) -> Option<EigenBlock> {
        self.blocks
            .iter()
            .copied()
            .find(|b| !b.kind.columns_are_eigenvectors() && b.start < n_c && n_c < b.start + b.len)
    }

    pub fn negative_signs(&self) -> usize {
        self.norm_signs.iter().filter(|&&s| s < 0.0).count()
    }
}

/// Solves `a_op x = lambda m_sym x` with default options and the given
/// imaginary tolerance.
pub fn generalized_eig(a_op: &DMatrix<f64>, m_sym: &DMatrix<f64>, imag_tol: f64) -> Result<Spectrum> {
    generalized_eig_with(a_op, m_sym, &EigOptions { imag_tol, ..EigOptions::default() })
}

/// `max |V^T S V - diag(norm_signs)|`.
pub fn orthonormality_residual(spec: &Spectrum, m_sym: &DMatrix<f64>) -> f64 {
    let v = &spec.vectors;
    let mut g = v.transpose() * m_sym * v;
    for (i, s) in spec.norm_signs.iter().enumerate() {
        g[(i, i)] -= s;
    }
    g.amax()
}

/// `||A V - S V T||_F / ||A||_F` where `T` is `diag(values)` on blocks of
/// eigenvectors and the restricted operator `J W^T A W` on the others.
pub fn residual(spec: &Spectrum, a_op: &DMatrix<f64>, m_sym: &DMatrix<f64>) -> f64 {
    let v = &spec.vectors;
    let n = v.ncols();
    let mut t = DMatrix::zeros(n, n);
    for b in &spec.blocks {
        if b.kind.columns_are_eigenvectors() {
            for i in b.start..b.start + b.len {
                t[(i, i)] = spec.values[i];
            }
        } else {
            let w = v.columns(b.start, b.len);
            let mut restricted = w.transpose() * a_op * w;
            for r in 0..b.len {
                let s = spec.norm_signs[b.start + r];
                restricted.row_mut(r).scale_mut(s);
            }
            t.view_mut((b.start, b.start), (b.len, b.len)).copy_from(&restricted);
        }
    }
    let scale = a_op.norm();
    let res = (a_op * v - m_sym * v * t).norm();
    if scale == 0.0 {
        res
    } else {
        res / scale
    }
}

/// A real eigenvalue or a conjugate pair as delivered by the QR iteration.
#[derive(Debug, Clone)]
struct Item {
    value: Complex<f64>,
    cols: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

pub fn generalized_eig_with(
    a_op: &DMatrix<f64>,
    m_sym: &DMatrix<f64>,
    opts: &EigOptions,
) -> Result<Spectrum> {
    check_square(a_op, "operator")?;
    check_same_shape(a_op, m_sym, "operator and smoother")?;
    let n = a_op.nrows();
    if n == 0 {
        return Ok(Spectrum {
            values: vec![],
            imag: vec![],
            vectors: DMatrix::zeros(0, 0),
            norm_signs: vec![],
            max_imag: 0.0,
            blocks: vec![],
        });
    }

    let k = lu_solve(m_sym, a_op, "symmetrized smoother")?;
    let eig = hqr::eigen(&k)?;

    let mut items = Vec::new();
    let mut i = 0;
    while i < n {
        if eig.im[i] == 0.0 {
            items.push(Item { value: Complex::new(eig.re[i], 0.0), cols: vec![i] });
            i += 1;
        } else {
            items.push(Item { value: Complex::new(eig.re[i], eig.im[i].abs()), cols: vec![i, i + 1] });
            i += 2;
        }
    }
    // stable: ties keep the solver's order
    items.sort_by(|a, b| a.value.re.total_cmp(&b.value.re));

    let scale = items.iter().map(|it| it.value.norm()).fold(0.0, f64::max);
    let max_imag = items.iter().map(|it| it.value.im).fold(0.0, f64::max);
    if let Some(bad) = items.iter().find(|it| it.value.im > opts.imag_tol * scale) {
        return Err(Error::ComplexSpectrum {
            re: bad.value.re,
            im: bad.value.im,
            tol: opts.imag_tol,
        });
    }
    if max_imag > 1e-8 * scale {
        warn!(
            "pencil has complex eigenvalues (max |Im| = {max_imag:.3e}, {:.3e} relative); realified",
            max_imag / scale
        );
    }

    let mut vn = eig.vectors.clone();
    for mut c in vn.column_iter_mut() {
        let norm = c.norm();
        if norm > 0.0 {
            c /= norm;
        }
    }
    let s_vn = m_sym * &vn;
    let gram = vn.transpose() * &s_vn;
    let cosines = vn.transpose() * &vn;
    let s_max = m_sym.amax();

    let neutral: Vec<bool> = items
        .iter()
        .map(|it| it.cols.iter().any(|&c| gram[(c, c)].abs() < COUPLING_TOL * s_max))
        .collect();

    let link_dist = opts.link_tol * scale;
    let mut parent: Vec<usize> = (0..items.len()).collect();
    for a in 0..items.len() {
        for b in (a + 1)..items.len() {
            if items[b].value.re - items[a].value.re > link_dist {
                break;
            }
            if (items[a].value - items[b].value).norm() > link_dist {
                continue;
            }
            let interact = neutral[a]
                || neutral[b]
                || items[a].cols.iter().any(|&p| {
                    items[b].cols.iter().any(|&q| {
                        gram[(p, q)].abs() > COUPLING_TOL * s_max || cosines[(p, q)].abs() > COSINE_TOL
                    })
                });
            if interact {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[rb.max(ra)] = rb.min(ra);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; items.len()];
    for idx in 0..items.len() {
        let root = find(&mut parent, idx);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(idx);
    }
    let groups = merge_overlapping(groups, &items);

    let mut values = Vec::with_capacity(n);
    let mut imag = Vec::with_capacity(n);
    let mut norm_signs = Vec::with_capacity(n);
    let mut blocks = Vec::new();
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);

    for group in &groups {
        let members: Vec<&Item> = group.iter().map(|&g| &items[g]).collect();
        let cols: Vec<usize> = members.iter().flat_map(|it| it.cols.iter().copied()).collect();
        let mut w = DMatrix::from_fn(n, cols.len(), |r, c| vn[(r, cols[c])]);
        let any_complex = members.iter().any(|it| it.value.im != 0.0);

        let mut kind = match (members.len(), any_complex) {
            (1, false) => BlockKind::Simple,
            (_, true) => BlockKind::Complex,
            _ => BlockKind::Multiple,
        };
        if cols.len() > 1 {
            let sv = w.clone().singular_values();
            if sv.min() < RANK_TOL * sv.max() {
                kind = BlockKind::Defective;
                w = invariant_subspace(&k, &members, &items, cols.len(), scale)?;
            }
        }

        let mean = cols.len() as f64;
        let mean = members.iter().map(|it| it.value.re * it.cols.len() as f64).sum::<f64>() / mean;
        let (mut basis, mut signs) = indefinite_gram_schmidt(w, m_sym, opts.neutral_floor * s_max)
            .map_err(|norm| Error::NeutralVector { value: mean, norm })?;

        let start = values.len();
        match kind {
            BlockKind::Simple => {
                values.push(members[0].value.re);
                imag.push(0.0);
            }
            BlockKind::Defective => {
                values.extend(std::iter::repeat_n(mean, cols.len()));
                imag.extend(std::iter::repeat_n(0.0, cols.len()));
            }
            BlockKind::Multiple | BlockKind::Complex => {
                for it in &members {
                    values.push(it.value.re);
                    imag.push(it.value.im);
                    if it.cols.len() == 2 {
                        values.push(it.value.re);
                        imag.push(-it.value.im);
                    }
                }
                if kind == BlockKind::Multiple {
                    order_by_rayleigh(&mut basis, &mut signs, a_op, m_sym);
                }
            }
        }
        for mut v in basis {
            fix_sign(&mut v);
            columns.push(v);
        }
        norm_signs.extend(signs);
        blocks.push(EigenBlock { start, len: cols.len(), kind });
    }

    let vectors = DMatrix::from_columns(&columns);
    let nontrivial = blocks.iter().filter(|b| b.kind != BlockKind::Simple).count();
    debug!("generalized eigenproblem: n = {n}, {nontrivial} non-simple blocks, scale {scale:.3e}");
    Ok(Spectrum { values, imag, vectors, norm_signs, max_imag, blocks })
}

/// Orders groups by their smallest real part and fuses groups whose real
/// ranges overlap, so the final value list is ascending and every block is
/// contiguous.
fn merge_overlapping(mut groups: Vec<Vec<usize>>, items: &[Item]) -> Vec<Vec<usize>> {
    let range = |g: &Vec<usize>| {
        g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(items[i].value.re), hi.max(items[i].value.re))
        })
    };
    groups.sort_by(|a, b| range(a).0.total_cmp(&range(b).0));
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
    for g in groups {
        match out.last_mut() {
            Some(last) if range(&g).0 < range(last).1 => {
                last.extend(g);
                last.sort_unstable();
            }
            _ => out.push(g),
        }
    }
    out
}

/// Basis of the invariant subspace belonging to a cluster of eigenvalues,
/// by subspace iteration with `(K - sigma I)^{-1}`.
fn invariant_subspace(
    k: &DMatrix<f64>,
    members: &[&Item],
    all: &[Item],
    dim: usize,
    scale: f64,
) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    let centre = members.iter().map(|it| it.value.re).sum::<f64>() / members.len() as f64;
    let centre = Complex::new(centre, 0.0);
    let radius = members
        .iter()
        .map(|it| (it.value - centre).norm())
        .fold(1e-10 * scale.max(f64::MIN_POSITIVE), f64::max);
    let inside: Vec<Complex<f64>> = members.iter().map(|it| it.value).collect();
    let outside: Vec<Complex<f64>> = all
        .iter()
        .filter(|it| !members.iter().any(|m| std::ptr::eq(*m, *it)))
        .flat_map(|it| [it.value, it.value.conj()])
        .collect();

    // pick the shift with the best contraction ratio
    let ratio = |sigma: f64| {
        let s = Complex::new(sigma, 0.0);
        let near = inside.iter().map(|z| (z - s).norm()).fold(0.0, f64::max);
        let far = outside.iter().map(|z| (z - s).norm()).fold(f64::INFINITY, f64::min);
        near / far
    };
    let sigma = [2.0, -2.0, 3.0, -3.0, 1.5, -1.5, 5.0, -5.0]
        .iter()
        .map(|f| centre.re + f * radius)
        .min_by(|a, b| ratio(*a).total_cmp(&ratio(*b)))
        .expect("nonempty shift list");
    let rate = ratio(sigma);
    if rate >= 0.95 {
        return Err(Error::NoConvergence("invariant subspace iteration (cluster not separated)"));
    }

    let shifted = k - DMatrix::identity(n, n) * sigma;
    let lu = shifted.lu();
    let mut rng = SeededRng::new(0);
    let start = DMatrix::from_fn(n, dim, |_, _| rng.next_symmetric());
    let mut x = start.qr().q();
    let k_norm = k.norm();
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..SUBSPACE_MAX_ITERS {
        let y = lu.solve(&x).ok_or(Error::Singular("shifted operator"))?;
        x = y.qr().q();
        let kx = k * &x;
        let res = (&kx - &x * (x.transpose() * &kx)).norm() / k_norm;
        if res < 1e-14 {
            return Ok(x);
        }
        if res < 0.5 * best {
            best = res;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 10 && best < 1e-9 {
                return Ok(x);
            }
        }
    }
    Err(Error::NoConvergence("invariant subspace iteration"))
}

/// Gram-Schmidt in the indefinite form `S` with diagonal pivoting.
///
/// When every remaining vector is neutral, the pair with the largest mutual
/// coupling is combined, which has norm about `2 |w_a^T S w_b|`. Returns the
/// offending norm if no usable pivot exists.
fn indefinite_gram_schmidt(
    w: DMatrix<f64>,
    s: &DMatrix<f64>,
    floor: f64,
) -> std::result::Result<(Vec<DVector<f64>>, Vec<f64>), f64> {
    let mut rem: Vec<DVector<f64>> = w.column_iter().map(|c| c.into_owned()).collect();
    let mut out = Vec::with_capacity(rem.len());
    let mut signs = Vec::with_capacity(rem.len());
    while !rem.is_empty() {
        let sw: Vec<DVector<f64>> = rem.iter().map(|v| s * v).collect();
        let diag: Vec<f64> =
            rem.iter().zip(&sw).map(|(v, sv)| v.dot(sv) / v.norm_squared()).collect();
        let mut pick = (0..rem.len())
            .max_by(|&a, &b| diag[a].abs().total_cmp(&diag[b].abs()).then(b.cmp(&a)))
            .expect("nonempty");
        if diag[pick].abs() < floor {
            let mut best = (0, 0, 0.0f64);
            for a in 0..rem.len() {
                for b in 0..rem.len() {
                    if a == b {
                        continue;
                    }
                    let g = rem[a].dot(&sw[b]) / (rem[a].norm() * rem[b].norm());
                    if g.abs() > best.2.abs() {
                        best = (a, b, g);
                    }
                }
            }
            let (a, b, g) = best;
            if g.abs() < floor {
                return Err(diag[pick].abs());
            }
            let scaled = &rem[b] * (g.signum() * rem[a].norm() / rem[b].norm());
            rem[a] += scaled;
            pick = a;
        }
        let mut v = rem.remove(pick);
        let nn = v.dot(&(s * &v));
        v /= nn.abs().sqrt();
        let sign = nn.signum();
        let sv = s * &v;
        for r in rem.iter_mut() {
            let c = sv.dot(r);
            r.axpy(-sign * c, &v, 1.0);
        }
        out.push(v);
        signs.push(sign);
    }
    Ok((out, signs))
}

/// Sorts block columns by their Rayleigh quotient `v^T A v / v^T S v`.
fn order_by_rayleigh(
    basis: &mut Vec<DVector<f64>>,
    signs: &mut Vec<f64>,
    a: &DMatrix<f64>,
    s: &DMatrix<f64>,
) {
    let rq: Vec<f64> = basis.iter().map(|v| v.dot(&(a * v)) / v.dot(&(s * v))).collect();
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&i, &j| rq[i].total_cmp(&rq[j]));
    *basis = order.iter().map(|&i| basis[i].clone()).collect();
    *signs = order.iter().map(|&i| signs[i]).collect();
}

/// Makes the entry of largest magnitude positive.
fn fix_sign(v: &mut DVector<f64>) {
    let idx = v.iamax();
    if v[idx] < 0.0 {
        v.neg_mut();
    }
}
