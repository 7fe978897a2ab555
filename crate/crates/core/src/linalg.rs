//! Dense complex helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn from_real(r: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_row_slice(r, cols, &data.iter().map(|&x| cr(x)).collect::<Vec<_>>())
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Singular values in descending order with the matching left/right vectors.
/// `v` is always square (cols × cols).
pub struct Svd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

pub fn svd(m: &CMat) -> Svd {
    let (r, n) = m.shape();
    if r == 0 || n == 0 {
        return Svd { u: zeros(r, 0), sigma: vec![], v: eye(n) };
    }
    let fm = faer::Mat::<C64>::from_fn(r, n, |i, j| m[(i, j)]);
    let s = fm.svd().expect("singular value decomposition failed to converge");
    let k = r.min(n);
    let sd = s.S().column_vector();
    let (fu, fv) = (s.U(), s.V());
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| sd[b].re.total_cmp(&sd[a].re));
    let mut order: Vec<usize> = idx.clone();
    order.extend(k..n);
    let u = CMat::from_fn(r, k, |i, j| fu[(i, idx[j])]);
    let v = CMat::from_fn(n, n, |i, j| fv[(i, order[j])]);
    let sigma = idx.iter().map(|&i| sd[i].re).collect();
    Svd { u, sigma, v }
}

/// Numerical rank with threshold `tol` relative to the largest singular value.
pub fn rank(m: &CMat, tol: f64) -> usize {
    let s = svd(m);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    s.sigma.iter().filter(|&&x| x > tol * smax && x > 0.0).count()
}

/// Orthonormal basis of the column space.
pub fn orth(m: &CMat, tol: f64) -> CMat {
    let s = svd(m);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let k = s.sigma.iter().filter(|&&x| x > tol * smax && x > 0.0).count();
    let r = m.nrows();
    let mut out = zeros(r, k);
    for j in 0..k {
        out.set_column(j, &s.u.column(j));
    }
    out
}

/// Orthonormal basis of the column space, absolute cutoff.
pub fn orth_abs(m: &CMat, thr: f64) -> CMat {
    let s = svd(m);
    let k = s.sigma.iter().filter(|&&x| x > thr).count();
    let mut out = zeros(m.nrows(), k);
    for j in 0..k {
        out.set_column(j, &s.u.column(j));
    }
    out
}

/// Orthonormal null-space basis, absolute cutoff.
pub fn null_space_abs(m: &CMat, thr: f64) -> CMat {
    let n = m.ncols();
    if m.nrows() == 0 {
        return eye(n);
    }
    let s = svd(m);
    let idx: Vec<usize> = (0..n).filter(|&j| j >= s.sigma.len() || s.sigma[j] <= thr).collect();
    let mut out = zeros(n, idx.len());
    for (k, &j) in idx.iter().enumerate() {
        out.set_column(k, &s.v.column(j));
    }
    out
}

/// Orthonormal basis of the null space.
pub fn null_space(m: &CMat, tol: f64) -> CMat {
    let n = m.ncols();
    if m.nrows() == 0 {
        return eye(n);
    }
    let s = svd(m);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let idx: Vec<usize> = (0..n)
        .filter(|&j| j >= s.sigma.len() || s.sigma[j] <= tol * smax || s.sigma[j] == 0.0)
        .collect();
    let mut out = zeros(n, idx.len());
    for (k, &j) in idx.iter().enumerate() {
        out.set_column(k, &s.v.column(j));
    }
    out
}

pub fn norm2(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    svd(m).sigma[0]
}

pub fn vnorm(v: &CVec) -> f64 {
    v.norm()
}

pub fn smallest_singular(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let s = svd(m);
    let k = m.nrows().min(m.ncols());
    s.sigma[k - 1]
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("inverse of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Ok(zeros(0, 0));
    }
    let s = svd(m);
    let smax = s.sigma[0];
    let smin = *s.sigma.last().unwrap();
    if !(smin > 1e-14 * smax) || smax == 0.0 {
        return Err(Error::Singular(format!("condition estimate {:.3e}", smax / smin)));
    }
    m.clone().try_inverse().ok_or_else(|| Error::Singular("LU pivot vanished".into()))
}

/// Moore-Penrose pseudo-inverse with relative cutoff.
pub fn pinv(m: &CMat, tol: f64) -> CMat {
    let s = svd(m);
    let (r, n) = m.shape();
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let mut out = zeros(n, r);
    for j in 0..s.sigma.len() {
        if s.sigma[j] > tol * smax && s.sigma[j] > 0.0 {
            out += s.v.column(j) * s.u.column(j).adjoint() / cr(s.sigma[j]);
        }
    }
    out
}

/// Least-squares solve of `a x = b` and the residual norm.
pub fn lstsq(a: &CMat, b: &CMat, tol: f64) -> (CMat, f64) {
    let x = pinv(a, tol) * b;
    let res = norm2(&(a * &x - b));
    (x, res)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * cr(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let h = hermitian_part(m);
    let fm = faer::Mat::<C64>::from_fn(n, n, |i, j| h[(i, j)]);
    let e = fm.self_adjoint_eigen(faer::Side::Lower).expect("Hermitian eigensolver failed to converge");
    let sd = e.S().column_vector();
    let fu = e.U();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| sd[a].re.total_cmp(&sd[b].re));
    let vals = idx.iter().map(|&i| sd[i].re).collect();
    let vecs = CMat::from_fn(n, n, |i, j| fu[(i, idx[j])]);
    (vals, vecs)
}

/// f applied to a Hermitian positive-definite matrix through its eigenpairs.
fn hpd_function(m: &CMat, tol: f64, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (vals, vecs) = eigh(m);
    let scale = vals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if vals.iter().any(|&l| !(l > tol * scale.max(1.0))) {
        return Err(Error::Input("matrix is not positive definite".into()));
    }
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&l| cr(f(l)))));
    Ok(&vecs * d * vecs.adjoint())
}

pub fn hpd_sqrt(m: &CMat, tol: f64) -> Result<CMat> {
    hpd_function(m, tol, f64::sqrt)
}

pub fn hpd_inv_sqrt(m: &CMat, tol: f64) -> Result<CMat> {
    hpd_function(m, tol, |l| 1.0 / l.sqrt())
}

pub fn hstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn vstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

/// 2x2 block matrix [[a, b], [c, d]].
pub fn blocks(a: &CMat, b: &CMat, cc: &CMat, d: &CMat) -> CMat {
    vstack(&hstack(a, b), &hstack(cc, d))
}

pub fn col(v: &CVec) -> CMat {
    CMat::from_column_slice(v.len(), 1, v.as_slice())
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}
