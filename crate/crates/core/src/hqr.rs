//! Real nonsymmetric eigendecomposition: Householder reduction to upper
//! Hessenberg form followed by the shifted double-step QR iteration, with
//! eigenvectors recovered by back-substitution on the real Schur form.
//!
//! This is the classic EISPACK `orthes`/`hqr2` pair. A complex-conjugate pair
//! `re ± i im` (listed with `im > 0` first) occupies two adjacent columns of
//! the eigenvector matrix holding the real and imaginary parts of the vector
//! belonging to `re + i im`, so `A V = V D` with `D` block diagonal.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;
/// QR sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone)]
pub struct RealEigen {
    /// Real parts, in the order the iteration deflated them (not sorted).
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl RealEigen {
    pub fn values(&self) -> Vec<Complex<f64>> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| Complex::new(r, i)).collect()
    }

    /// Block diagonal `D` with `A V = V D`.
    pub fn block_diagonal(&self) -> DMatrix<f64> {
        let n = self.re.len();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = self.re[i];
            if self.im[i] > 0.0 {
                d[(i, i + 1)] = self.im[i];
            } else if self.im[i] < 0.0 {
                d[(i, i - 1)] = self.im[i];
            }
        }
        d
    }
}

/// Row-major square work array.
struct Work {
    n: usize,
    a: Vec<f64>,
}

impl Work {
    fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = m[(i, j)];
            }
        }
        Self { n, a }
    }

    fn identity(n: usize) -> Self {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        Self { n, a }
    }

    #[inline(always)]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline(always)]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.a)
    }
}

/// Eigenvalues and eigenvectors of a real square matrix.
pub fn eigen(m: &DMatrix<f64>) -> Result<RealEigen> {
    decompose(m, true)
}

/// Eigenvalues only; skips the accumulation of transformations.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    Ok(decompose(m, false)?.values())
}

fn decompose(m: &DMatrix<f64>, want_vectors: bool) -> Result<RealEigen> {
    if !m.is_square() {
        return Err(Error::Shape(format!("eigen: {}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("eigen: matrix has non-finite entries".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(RealEigen { re: vec![], im: vec![], vectors: DMatrix::zeros(0, 0) });
    }
    let mut h = Work::from_dmatrix(m);
    let mut v = if want_vectors { Work::identity(n) } else { Work { n: 0, a: vec![] } };
    orthes(&mut h, &mut v, want_vectors);
    let (re, im) = hqr2(&mut h, &mut v, want_vectors)?;
    let vectors = if want_vectors { v.to_dmatrix() } else { DMatrix::zeros(0, 0) };
    Ok(RealEigen { re, im, vectors })
}

fn orthes(h: &mut Work, v: &mut Work, want_vectors: bool) {
    let n = h.n;
    let (low, high) = (0usize, n - 1);
    let mut ort = vec![0.0; n];

    for m in (low + 1)..high {
        let scale: f64 = (m..=high).map(|i| h.at(i, m - 1).abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h.at(i, m - 1) / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h.at(i, j);
            }
            f /= hh;
            for i in m..=high {
                h.set(i, j, h.at(i, j) - f * ort[i]);
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h.at(i, j);
            }
            f /= hh;
            for j in m..=high {
                h.set(i, j, h.at(i, j) - f * ort[j]);
            }
        }
        ort[m] *= scale;
        h.set(m, m - 1, scale * g);
    }

    if !want_vectors {
        return;
    }
    for m in ((low + 1)..high).rev() {
        if h.at(m, m - 1) == 0.0 {
            continue;
        }
        for i in (m + 1)..=high {
            ort[i] = h.at(i, m - 1);
        }
        for j in m..=high {
            let mut g = 0.0;
            for i in m..=high {
                g += ort[i] * v.at(i, j);
            }
            // two divisions avoid underflow
            g = (g / ort[m]) / h.at(m, m - 1);
            for i in m..=high {
                v.set(i, j, v.at(i, j) + g * ort[i]);
            }
        }
    }
}

#[inline]
fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

#[allow(clippy::many_single_char_names)]
fn hqr2(h: &mut Work, v: &mut Work, want_vectors: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = h.n;
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let low = 0usize;
    let high = nn - 1;
    let mut exshift = 0.0;
    let (mut p, mut q): (f64, f64);
    let (mut r, mut s, mut z) = (0.0f64, 0.0f64, 0.0f64);
    let (mut t, mut w, mut x, mut y);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h.at(i, j).abs();
        }
    }

    // n is signed because the deflation loop runs it below zero
    let mut n = nn as isize - 1;
    let mut iter = 0usize;
    while n >= low as isize {
        let nu = n as usize;
        let mut l = nu;
        while l > low {
            s = h.at(l - 1, l - 1).abs() + h.at(l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if h.at(l, l - 1) == 0.0 || h.at(l, l - 1).abs() < EPS * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            // one root
            h.set(nu, nu, h.at(nu, nu) + exshift);
            d[nu] = h.at(nu, nu);
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            // two roots
            w = h.at(nu, nu - 1) * h.at(nu - 1, nu);
            p = (h.at(nu - 1, nu - 1) - h.at(nu, nu)) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h.set(nu, nu, h.at(nu, nu) + exshift);
            h.set(nu - 1, nu - 1, h.at(nu - 1, nu - 1) + exshift);
            x = h.at(nu, nu);

            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
                x = h.at(nu, nu - 1);
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;

                if want_vectors {
                    for j in (nu - 1)..nn {
                        z = h.at(nu - 1, j);
                        h.set(nu - 1, j, q * z + p * h.at(nu, j));
                        h.set(nu, j, q * h.at(nu, j) - p * z);
                    }
                    for i in 0..=nu {
                        z = h.at(i, nu - 1);
                        h.set(i, nu - 1, q * z + p * h.at(i, nu));
                        h.set(i, nu, q * h.at(i, nu) - p * z);
                    }
                    for i in low..=high {
                        z = v.at(i, nu - 1);
                        v.set(i, nu - 1, q * z + p * v.at(i, nu));
                        v.set(i, nu, q * v.at(i, nu) - p * z);
                    }
                }
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h.at(nu, nu);
            y = 0.0;
            w = 0.0;
            if l < nu {
                y = h.at(nu - 1, nu - 1);
                w = h.at(nu, nu - 1) * h.at(nu - 1, nu);
            }

            // exceptional shifts
            if iter == 10 {
                exshift += x;
                for i in low..=nu {
                    h.set(i, i, h.at(i, i) - x);
                }
                s = h.at(nu, nu - 1).abs() + h.at(nu - 1, nu - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=nu {
                        h.set(i, i, h.at(i, i) - s);
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }

            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::NoConvergence("Hessenberg QR iteration"));
            }

            // look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            loop {
                z = h.at(m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / h.at(m + 1, m) + h.at(m, m + 1);
                q = h.at(m + 1, m + 1) - z - r - s;
                r = h.at(m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h.at(m, m - 1).abs() * (q.abs() + r.abs())
                    < EPS * (p.abs() * (h.at(m - 1, m - 1).abs() + z.abs() + h.at(m + 1, m + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=nu {
                h.set(i, i - 2, 0.0);
                if i > m + 2 {
                    h.set(i, i - 3, 0.0);
                }
            }

            let (jmax, imin) = if want_vectors { (nn, 0) } else { (nu + 1, l) };
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h.at(k, k - 1);
                    q = h.at(k + 1, k - 1);
                    r = if notlast { h.at(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h.set(k, k - 1, -s * x);
                } else if l != m {
                    h.set(k, k - 1, -h.at(k, k - 1));
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                for j in k..jmax {
                    p = h.at(k, j) + q * h.at(k + 1, j);
                    if notlast {
                        p += r * h.at(k + 2, j);
                        h.set(k + 2, j, h.at(k + 2, j) - p * z);
                    }
                    h.set(k, j, h.at(k, j) - p * x);
                    h.set(k + 1, j, h.at(k + 1, j) - p * y);
                }
                for i in imin..=nu.min(k + 3) {
                    p = x * h.at(i, k) + y * h.at(i, k + 1);
                    if notlast {
                        p += z * h.at(i, k + 2);
                        h.set(i, k + 2, h.at(i, k + 2) - p * r);
                    }
                    h.set(i, k, h.at(i, k) - p);
                    h.set(i, k + 1, h.at(i, k + 1) - p * q);
                }
                if want_vectors {
                    for i in low..=high {
                        p = x * v.at(i, k) + y * v.at(i, k + 1);
                        if notlast {
                            p += z * v.at(i, k + 2);
                            v.set(i, k + 2, v.at(i, k + 2) - p * r);
                        }
                        v.set(i, k, v.at(i, k) - p);
                        v.set(i, k + 1, v.at(i, k + 1) - p * q);
                    }
                }
            }
        }
    }

    if !want_vectors || norm == 0.0 {
        return Ok((d, e));
    }

    // back-substitute to find vectors of the upper triangular form
    for n in (0..nn).rev() {
        p = d[n];
        q = e[n];

        if q == 0.0 {
            let mut l = n;
            h.set(n, n, 1.0);
            for i in (0..n).rev() {
                w = h.at(i, i) - p;
                r = 0.0;
                for j in l..=n {
                    r += h.at(i, j) * h.at(j, n);
                }
                if e[i] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        let val = if w != 0.0 { -r / w } else { -r / (EPS * norm) };
                        h.set(i, n, val);
                    } else {
                        x = h.at(i, i + 1);
                        y = h.at(i + 1, i);
                        q = (d[i] - p) * (d[i] - p) + e[i] * e[i];
                        t = (x * s - z * r) / q;
                        h.set(i, n, t);
                        let val =
                            if x.abs() > z.abs() { (-r - w * t) / x } else { (-s - y * t) / z };
                        h.set(i + 1, n, val);
                    }
                    // overflow control
                    t = h.at(i, n).abs();
                    if (EPS * t) * t > 1.0 {
                        for j in i..=n {
                            h.set(j, n, h.at(j, n) / t);
                        }
                    }
                }
            }
        } else if q < 0.0 {
            let mut l = n - 1;
            if h.at(n, n - 1).abs() > h.at(n - 1, n).abs() {
                h.set(n - 1, n - 1, q / h.at(n, n - 1));
                h.set(n - 1, n, -(h.at(n, n) - p) / h.at(n, n - 1));
            } else {
                let (cr, ci) = cdiv(0.0, -h.at(n - 1, n), h.at(n - 1, n - 1) - p, q);
                h.set(n - 1, n - 1, cr);
                h.set(n - 1, n, ci);
            }
            h.set(n, n - 1, 0.0);
            h.set(n, n, 1.0);
            for i in (0..n.saturating_sub(1)).rev() {
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l..=n {
                    ra += h.at(i, j) * h.at(j, n - 1);
                    sa += h.at(i, j) * h.at(j, n);
                }
                w = h.at(i, i) - p;

                if e[i] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h.set(i, n - 1, cr);
                        h.set(i, n, ci);
                    } else {
                        x = h.at(i, i + 1);
                        y = h.at(i + 1, i);
                        let mut vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
                        let vi = (d[i] - p) * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = EPS * norm * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) =
                            cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h.set(i, n - 1, cr);
                        h.set(i, n, ci);
                        if x.abs() > z.abs() + q.abs() {
                            h.set(
                                i + 1,
                                n - 1,
                                (-ra - w * h.at(i, n - 1) + q * h.at(i, n)) / x,
                            );
                            h.set(i + 1, n, (-sa - w * h.at(i, n) - q * h.at(i, n - 1)) / x);
                        } else {
                            let (cr, ci) =
                                cdiv(-r - y * h.at(i, n - 1), -s - y * h.at(i, n), z, q);
                            h.set(i + 1, n - 1, cr);
                            h.set(i + 1, n, ci);
                        }
                    }
                    t = h.at(i, n - 1).abs().max(h.at(i, n).abs());
                    if (EPS * t) * t > 1.0 {
                        for j in i..=n {
                            h.set(j, n - 1, h.at(j, n - 1) / t);
                            h.set(j, n, h.at(j, n) / t);
                        }
                    }
                }
            }
        }
    }

    // back-transform to the original basis
    for j in (low..nn).rev() {
        for i in low..=high {
            z = 0.0;
            for k in low..=j.min(high) {
                z += v.at(i, k) * h.at(k, j);
            }
            v.set(i, j, z);
        }
    }

    Ok((d, e))
}
