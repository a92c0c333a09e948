//! Byrnes-Isidori normal form and zero-dynamics oracles.

use alloc::format;
use alloc::vec::Vec;

use super::{ContinuousStateSpace, DiscreteStateSpace, StateSpace, TimeDomain};
use crate::error::{Error, Result};
use crate::linalg::{
    is_hurwitz_stable, is_schur_stable, kernel_basis, lstsq, numerical_rank, range_basis, svd, vstack,
    Matrix, Stability, ToleranceConfig,
};

/// Coordinates `(xi, eta)` in which `eta(t+1) = Q eta(t) + P y(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BifForm {
    pub r: Vec<usize>,
    pub q: Matrix,
    pub p: Matrix,
    /// Row `i` is `alpha_i`, acting on the stacked BIF state.
    pub alpha: Matrix,
    pub g: Matrix,
    /// `x_bif = T x`.
    pub t: Matrix,
}

/// Zero dynamics computed directly from `ker Xi` and the output-zeroing
/// feedback, without going through normal-form coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroDynamics {
    /// `N^T (A + B K) N`.
    pub q: Matrix,
    /// Output-zeroing feedback `u = K x`.
    pub feedback: Matrix,
    /// Orthonormal basis `N` of the zero-dynamics subspace.
    pub basis: Matrix,
}

fn chain_rows<T: TimeDomain>(sys: &StateSpace<T>, r: &[usize]) -> (Matrix, Matrix) {
    let n = sys.n();
    let total: usize = r.iter().sum();
    let mut xi = Matrix::zeros(total, n);
    let mut gamma = Matrix::zeros(r.len(), n);
    let mut row = 0;
    for (i, &ri) in r.iter().enumerate() {
        let mut cur = sys.c.row(i).into_owned();
        for _ in 0..ri {
            xi.row_mut(row).copy_from(&cur);
            row += 1;
            cur = &cur * &sys.a;
        }
        gamma.row_mut(i).copy_from(&cur);
    }
    (xi, gamma)
}

fn vector_relative_degree<T: TimeDomain>(
    sys: &StateSpace<T>,
    tol: &ToleranceConfig,
) -> Result<(Vec<usize>, Matrix)> {
    if sys.m() != sys.p() {
        return Err(Error::DimensionMismatch(format!(
            "normal form needs a square system, got m={} p={}",
            sys.m(),
            sys.p()
        )));
    }
    if !sys.is_minimal(tol) {
        return Err(Error::NotMinimal);
    }
    let (r, g) = sys
        .oracle_vector_relative_degree(tol)
        .ok_or(Error::NoVectorRelativeDegree)?;
    if r.iter().any(|&ri| ri == 0) {
        return Err(Error::InvalidArgument(
            "normal form needs all relative degrees >= 1".into(),
        ));
    }
    Ok((r, g))
}

fn orthonormal_rows(m: &Matrix, tol: &ToleranceConfig) -> Matrix {
    range_basis(&m.transpose(), tol).transpose()
}

/// Rows `z` with `z m = 0`, judged against an absolute scale so that an
/// all-but-zero `m` is treated as zero.
fn left_kernel(m: &Matrix, scale: f64, tol: &ToleranceConfig) -> Matrix {
    let k = m.nrows();
    if k == 0 {
        return Matrix::zeros(0, 0);
    }
    let mut padded = Matrix::zeros(k, m.ncols().max(k));
    padded.columns_mut(0, m.ncols()).copy_from(m);
    let d = svd(&padded.transpose());
    let thr = tol.rank_rtol * scale * (m.nrows().max(m.ncols()) as f64);
    let rank = d.s.iter().filter(|&&s| s > thr).count();
    d.vt.rows(rank, k - rank).into_owned()
}

impl<T: TimeDomain> StateSpace<T> {
    /// Byrnes-Isidori normal form of a square minimal system whose vector
    /// relative degree exists with all entries at least one.
    pub fn byrnes_isidori(&self, tol: &ToleranceConfig) -> Result<BifForm> {
        let (r, g) = vector_relative_degree(self, tol)?;
        let n = self.n();
        let (xi, gamma) = chain_rows(self, &r);
        let d = n - xi.nrows();

        // largest row space W with W B = 0 and W A inside W + rowspace(C)
        let scale = self.a.norm().max(1.0);
        let mut w = orthonormal_rows(&kernel_basis(&self.b.transpose(), tol).transpose(), tol);
        loop {
            let span = range_basis(&vstack(&[&w, &self.c]).transpose(), tol);
            let proj = Matrix::identity(n, n) - &span * span.transpose();
            let cond = &w * &self.a * proj;
            let z = left_kernel(&cond, scale, tol);
            if z.nrows() == w.nrows() {
                break;
            }
            w = orthonormal_rows(&(z * &w), tol);
            if w.nrows() == 0 {
                break;
            }
        }
        if w.nrows() != d {
            return Err(Error::DimensionMismatchZd {
                expected: d,
                found: w.nrows(),
            });
        }
        let t = vstack(&[&xi, &w]);
        let ti = t.clone().try_inverse().ok_or(Error::NotMinimal)?;
        if numerical_rank(&t, tol) < n {
            return Err(Error::NotMinimal);
        }
        let wc = vstack(&[&w, &self.c]);
        let qp = lstsq(&wc.transpose(), &(&w * &self.a).transpose(), tol).transpose();
        let q = qp.columns(0, d).into_owned();
        let p = qp.columns(d, self.p()).into_owned();
        let alpha = gamma * ti;
        Ok(BifForm {
            r,
            q,
            p,
            alpha,
            g,
            t,
        })
    }

    /// Zero dynamics via `ker Xi` and `K = -G^{-1} Gamma`.
    pub fn zero_dynamics(&self, tol: &ToleranceConfig) -> Result<ZeroDynamics> {
        let (r, g) = vector_relative_degree(self, tol)?;
        let (xi, gamma) = chain_rows(self, &r);
        let gi = g.try_inverse().ok_or(Error::SingularG)?;
        let k = -(gi * gamma);
        let basis = kernel_basis(&xi, tol);
        let q = basis.transpose() * (&self.a + &self.b * &k) * &basis;
        Ok(ZeroDynamics {
            q,
            feedback: k,
            basis,
        })
    }

    /// Builds a system in normal-form coordinates `(xi_1, ..., xi_p, eta)`.
    pub fn from_bif(r: &[usize], q: &Matrix, p: &Matrix, alpha: &Matrix, g: &Matrix) -> Result<Self> {
        let pdim = r.len();
        let d = q.nrows();
        let sr: usize = r.iter().sum();
        let n = sr + d;
        let m = g.ncols();
        let shapes_ok = q.ncols() == d
            && p.shape() == (d, pdim)
            && alpha.shape() == (pdim, n)
            && g.nrows() == pdim
            && m == pdim
            && r.iter().all(|&ri| ri >= 1);
        if !shapes_ok {
            return Err(Error::DimensionMismatch(format!(
                "r={r:?}, Q {:?}, P {:?}, alpha {:?}, G {:?}",
                q.shape(),
                p.shape(),
                alpha.shape(),
                g.shape()
            )));
        }
        if numerical_rank(g, &ToleranceConfig::default()) < pdim {
            return Err(Error::SingularG);
        }
        let mut a = Matrix::zeros(n, n);
        let mut b = Matrix::zeros(n, m);
        let mut c = Matrix::zeros(pdim, n);
        let mut start = 0;
        let mut heads = Vec::with_capacity(pdim);
        for (i, &ri) in r.iter().enumerate() {
            heads.push(start);
            for k in 0..ri - 1 {
                a[(start + k, start + k + 1)] = 1.0;
            }
            a.row_mut(start + ri - 1).copy_from(&alpha.row(i));
            b.row_mut(start + ri - 1).copy_from(&g.row(i));
            c[(i, start)] = 1.0;
            start += ri;
        }
        for row in 0..d {
            for (i, &h) in heads.iter().enumerate() {
                a[(sr + row, h)] = p[(row, i)];
            }
            for col in 0..d {
                a[(sr + row, sr + col)] = q[(row, col)];
            }
        }
        Self::new(a, b, c, Matrix::zeros(pdim, m))
    }
}

/// Discrete system in normal-form coordinates, see [`StateSpace::from_bif`].
pub fn build_from_bif(
    r: &[usize],
    q: &Matrix,
    p: &Matrix,
    alpha: &Matrix,
    g: &Matrix,
) -> Result<DiscreteStateSpace> {
    DiscreteStateSpace::from_bif(r, q, p, alpha, g)
}

fn static_zd(d: &Matrix, tol: &ToleranceConfig) -> Stability {
    if numerical_rank(d, tol) == d.ncols() {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

impl DiscreteStateSpace {
    pub fn oracle_zero_dynamics_stable(&self, tol: &ToleranceConfig) -> Result<Stability> {
        if self.n() == 0 {
            return Ok(static_zd(&self.d, tol));
        }
        is_schur_stable(&self.byrnes_isidori(tol)?.q, tol)
    }
}

impl ContinuousStateSpace {
    pub fn oracle_ct_zero_dynamics(&self, tol: &ToleranceConfig) -> Result<Stability> {
        if self.n() == 0 {
            return Ok(static_zd(&self.d, tol));
        }
        is_hurwitz_stable(&self.byrnes_isidori(tol)?.q, tol)
    }
}
