//! Tolerance-aware dense linear algebra on top of `nalgebra`.
//!
//! Every rank, kernel and membership decision in the crate goes through the
//! SVD helpers here, with thresholds taken from [`ToleranceConfig`].

use alloc::vec::Vec;
use nalgebra::linalg::SVD;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMatrix = DMatrix<Complex64>;

/// Numerical thresholds used by every decision procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Singular values below `rank_rtol * sigma_max * max(rows, cols)` count as zero.
    pub rank_rtol: f64,
    /// Relative least-squares residual accepted for span membership.
    pub membership_rtol: f64,
    /// Margin around the stability boundary.
    pub stability_margin: f64,
    /// Absolute tolerance for eigenvalue and branch matching.
    pub match_atol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_rtol: 1e-10,
            membership_rtol: 1e-8,
            stability_margin: 1e-9,
            match_atol: 1e-7,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x < 1.0;
        if ok(self.rank_rtol)
            && ok(self.membership_rtol)
            && ok(self.stability_margin)
            && ok(self.match_atol)
        {
            Ok(())
        } else {
            Err(Error::InvalidArgument("tolerances must lie in (0, 1)".into()))
        }
    }
}

/// Three-valued stability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Boundary,
}

/// Thin SVD with singular values sorted in decreasing order.
pub struct ThinSvd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

pub fn svd(m: &Matrix) -> ThinSvd {
    let (r, c) = m.shape();
    if r.min(c) == 0 {
        return ThinSvd {
            u: Matrix::zeros(r, 0),
            s: Vec::new(),
            vt: Matrix::zeros(0, c),
        };
    }
    if r < c {
        let t = svd(&m.transpose());
        return ThinSvd {
            u: t.vt.transpose(),
            s: t.s,
            vt: t.u.transpose(),
        };
    }
    // QR first, then one-sided Jacobi on the square factor
    let qr = m.clone().qr();
    let (q, rr) = (qr.q(), qr.r());
    let (ur, s, v) = jacobi_svd(rr);
    ThinSvd {
        u: q * ur,
        s,
        vt: v.transpose(),
    }
}

/// One-sided Jacobi SVD of a square matrix: `a = u diag(s) v^T`, sorted.
fn jacobi_svd(mut a: Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let n = a.ncols();
    let mut v = Matrix::identity(n, n);
    for _ in 0..100 {
        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in i + 1..n {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dot(&a.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate(&mut a, i, j, cs, sn);
                rotate(&mut v, i, j, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|k| a.column(k).norm()).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(core::cmp::Ordering::Equal));
    let smax = norms[idx[0]];
    let mut u = Matrix::zeros(n, n);
    let mut vs = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut filled = 0;
    for (k, &src) in idx.iter().enumerate() {
        s.push(norms[src]);
        vs.set_column(k, &v.column(src));
        if norms[src] > smax * f64::EPSILON * n as f64 && norms[src] > 0.0 {
            u.set_column(k, &(a.column(src) / norms[src]));
            filled = k + 1;
        }
    }
    // complete U with an orthonormal basis of the remaining directions
    let mut e = 0;
    for k in filled..n {
        loop {
            let mut w = Vector::zeros(n);
            w[e % n] = 1.0;
            e += 1;
            for l in 0..k {
                let d = u.column(l).dot(&w);
                w -= u.column(l) * d;
            }
            let nw = w.norm();
            if nw > 0.5 {
                u.set_column(k, &(w / nw));
                break;
            }
            if e > 2 * n {
                break;
            }
        }
    }
    (u, s, vs)
}

fn rotate(m: &mut Matrix, i: usize, j: usize, cs: f64, sn: f64) {
    for k in 0..m.nrows() {
        let x = m[(k, i)];
        let y = m[(k, j)];
        m[(k, i)] = cs * x - sn * y;
        m[(k, j)] = sn * x + cs * y;
    }
}

fn rank_of(s: &[f64], rows: usize, cols: usize, rtol: f64) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax <= 0.0 || !smax.is_finite() {
        return 0;
    }
    let thr = rtol * smax * rows.max(cols) as f64;
    s.iter().filter(|&&x| x > thr).count()
}

pub fn numerical_rank(m: &Matrix, tol: &ToleranceConfig) -> usize {
    let d = svd(m);
    rank_of(&d.s, m.nrows(), m.ncols(), tol.rank_rtol)
}

/// Rank with the threshold measured against `max(sigma_max, floor)`, for
/// matrices whose entries have a natural unit scale.
pub fn numerical_rank_floor(m: &Matrix, floor: f64, tol: &ToleranceConfig) -> usize {
    rank_floor(&svd(m).s, m.nrows(), m.ncols(), floor, tol)
}

/// Orthonormal basis of the numerical kernel, one column per null direction.
pub fn kernel_basis(m: &Matrix, tol: &ToleranceConfig) -> Matrix {
    kernel_basis_floor(m, 0.0, tol)
}

/// [`kernel_basis`] with the rank threshold anchored at
/// `max(sigma_max, floor)`, for blocks cut out of a larger matrix.
pub fn kernel_basis_floor(m: &Matrix, floor: f64, tol: &ToleranceConfig) -> Matrix {
    let (r, c) = m.shape();
    if c == 0 {
        return Matrix::zeros(0, 0);
    }
    if r == 0 {
        return Matrix::identity(c, c);
    }
    if r >= c {
        let d = svd(m);
        let rank = rank_floor(&d.s, r, c, floor, tol);
        return d.vt.rows(rank, c - rank).transpose();
    }
    // wide: m^T = Q [R; 0], so m Q = [R^T 0]
    let qr = m.transpose().qr();
    let mut qt = Matrix::identity(c, c);
    qr.q_tr_mul(&mut qt);
    let q = qt.transpose();
    let d = svd(&qr.r().transpose());
    let rank = rank_floor(&d.s, r, c, floor, tol);
    let w = d.vt.rows(rank, r - rank).transpose();
    let head = q.columns(0, r) * w;
    hstack(&[&head, &q.columns(r, c - r).into_owned()])
}

fn rank_floor(s: &[f64], rows: usize, cols: usize, floor: f64, tol: &ToleranceConfig) -> usize {
    let smax = s.first().copied().unwrap_or(0.0).max(floor);
    let thr = tol.rank_rtol * smax * rows.max(cols) as f64;
    s.iter().filter(|&&x| x > thr).count()
}

/// Orthonormal basis of the numerical column space.
pub fn range_basis(m: &Matrix, tol: &ToleranceConfig) -> Matrix {
    range_basis_floor(m, 0.0, tol)
}

/// [`range_basis`] with the threshold anchored at `max(sigma_max, floor)`.
pub fn range_basis_floor(m: &Matrix, floor: f64, tol: &ToleranceConfig) -> Matrix {
    let d = svd(m);
    let rank = rank_floor(&d.s, m.nrows(), m.ncols(), floor, tol);
    d.u.columns(0, rank).into_owned()
}

/// Replaces the columns of `m` by `m * V_r`, where `V_r` spans the numerical
/// row space. Column space and all row inner products are kept.
pub fn compress_columns(m: &Matrix, tol: &ToleranceConfig) -> Matrix {
    let d = svd(m);
    let rank = rank_of(&d.s, m.nrows(), m.ncols(), tol.rank_rtol);
    let mut out = d.u.columns(0, rank).into_owned();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d.s[j];
    }
    out
}

/// `m` divided by its largest absolute entry (unchanged when zero). Used so
/// that verdicts do not depend on the overall scale of the data.
pub fn normalized(m: &Matrix) -> Matrix {
    let s = m.amax();
    if s > 0.0 && s.is_finite() {
        m / s
    } else {
        m.clone()
    }
}

/// Norm of the component of `v` orthogonal to the columns of `basis`
/// (which must be orthonormal).
pub fn residual_norm(v: &Vector, basis: &Matrix) -> f64 {
    if basis.ncols() == 0 {
        return v.norm();
    }
    let coef = basis.tr_mul(v);
    (v - basis * coef).norm()
}

pub fn membership_threshold(v: &Vector, tol: &ToleranceConfig) -> f64 {
    tol.membership_rtol * v.norm().max(1.0)
}

pub fn in_span(v: &Vector, g: &Matrix, tol: &ToleranceConfig) -> Result<bool> {
    if v.len() != g.nrows() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "vector of length {} against {} rows",
            v.len(),
            g.nrows()
        )));
    }
    let basis = range_basis(g, tol);
    Ok(residual_norm(v, &basis) <= membership_threshold(v, tol))
}

/// Minimum-norm pseudoinverse with the crate's rank threshold.
pub fn pinv(m: &Matrix, tol: &ToleranceConfig) -> Matrix {
    let (r, c) = m.shape();
    let d = svd(m);
    let rank = rank_of(&d.s, r, c, tol.rank_rtol);
    let mut out = Matrix::zeros(c, r);
    for k in 0..rank {
        let vk = d.vt.row(k).transpose();
        let uk = d.u.column(k);
        out += (vk * uk.transpose()) / d.s[k];
    }
    out
}

pub fn right_inverse(m: &Matrix, tol: &ToleranceConfig) -> Result<Matrix> {
    let rank = numerical_rank(m, tol);
    if rank < m.nrows() {
        return Err(Error::RankDeficient {
            rank,
            rows: m.nrows(),
        });
    }
    Ok(pinv(m, tol))
}

/// Least-squares solution of `a x = b` of minimum norm.
pub fn lstsq(a: &Matrix, b: &Matrix, tol: &ToleranceConfig) -> Matrix {
    pinv(a, tol) * b
}

pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    Ok(m.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub fn is_schur_stable(m: &Matrix, tol: &ToleranceConfig) -> Result<Stability> {
    let rho = spectral_radius(m)?;
    Ok(if m.nrows() == 0 || rho < 1.0 - tol.stability_margin {
        Stability::Stable
    } else if rho > 1.0 + tol.stability_margin {
        Stability::Unstable
    } else {
        Stability::Boundary
    })
}

pub fn is_hurwitz_stable(m: &Matrix, tol: &ToleranceConfig) -> Result<Stability> {
    let ev = eigenvalues(m)?;
    let top = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(if ev.is_empty() || top < -tol.stability_margin {
        Stability::Stable
    } else if top > tol.stability_margin {
        Stability::Unstable
    } else {
        Stability::Boundary
    })
}

fn norm1(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-8 Padé approximant.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let nrm = norm1(m);
    if !nrm.is_finite() {
        return Err(Error::InvalidArgument("non-finite matrix".into()));
    }
    let mut s = 0i32;
    if nrm > 0.5 {
        s = (nrm / 0.5).log2().ceil() as i32;
    }
    let x = m / 2f64.powi(s);
    const Q: usize = 8;
    let mut c = [0.0; Q + 1];
    c[0] = 1.0;
    for k in 1..=Q {
        c[k] = c[k - 1] * (Q + 1 - k) as f64 / (k * (2 * Q + 1 - k)) as f64;
    }
    let id = Matrix::identity(n, n);
    let mut num = id.clone() * c[0];
    let mut den = id.clone() * c[0];
    let mut pow = id;
    for (k, ck) in c.iter().enumerate().skip(1) {
        pow = &pow * &x;
        num += &pow * *ck;
        if k % 2 == 0 {
            den += &pow * *ck;
        } else {
            den -= &pow * *ck;
        }
    }
    let mut e = den
        .lu()
        .solve(&num)
        .ok_or_else(|| Error::InvalidArgument("Padé denominator is singular".into()))?;
    for _ in 0..s {
        e = &e * &e;
    }
    Ok(e)
}

pub fn vstack(parts: &[&Matrix]) -> Matrix {
    let cols = parts.iter().map(|p| p.ncols()).find(|&c| c > 0).unwrap_or(0);
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut r0 = 0;
    for p in parts {
        if p.nrows() > 0 {
            assert_eq!(p.ncols(), cols, "vstack: column count mismatch");
            out.view_mut((r0, 0), p.shape()).copy_from(*p);
        }
        r0 += p.nrows();
    }
    out
}

pub fn hstack(parts: &[&Matrix]) -> Matrix {
    let rows = parts.iter().map(|p| p.nrows()).find(|&r| r > 0).unwrap_or(0);
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut c0 = 0;
    for p in parts {
        if p.ncols() > 0 {
            assert_eq!(p.nrows(), rows, "hstack: row count mismatch");
            out.view_mut((0, c0), p.shape()).copy_from(*p);
        }
        c0 += p.ncols();
    }
    out
}

pub fn select_rows(m: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

pub fn to_complex(m: &Matrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Right singular vectors of a complex matrix belonging to its `dim`
/// smallest singular values, together with those singular values.
pub fn complex_null_space(m: &CMatrix, dim: usize) -> (CMatrix, Vec<f64>) {
    let (r, c) = m.shape();
    let mut a = CMatrix::zeros(r.max(c), c);
    a.view_mut((0, 0), (r, c)).copy_from(m);
    let d = SVD::try_new(a, false, true, f64::EPSILON, 0).expect("unbounded SVD");
    let vt = d.v_t.expect("requested V^H");
    let mut idx: Vec<usize> = (0..c).collect();
    let s = d.singular_values;
    idx.sort_by(|&x, &y| s[x].partial_cmp(&s[y]).unwrap_or(core::cmp::Ordering::Equal));
    let pick = &idx[..dim];
    let basis = CMatrix::from_fn(c, dim, |i, j| vt[(pick[j], i)].conj());
    (basis, pick.iter().map(|&i| s[i]).collect())
}
