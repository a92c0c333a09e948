//! Zero dynamics from data: the zero-output input subspace, the matrix
//! `Q~` whose spectrum is that of the zero dynamics, and the three-valued
//! stability test.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hankel::{is_persistently_exciting, mosaic_hankel, DataSet, Signal};
use crate::linalg::{
    compress_columns, eigenvalues, is_schur_stable, kernel_basis_floor, lstsq, normalized, numerical_rank, numerical_rank_floor,
    range_basis_floor, svd, Matrix, Stability, ToleranceConfig,
};
use crate::mpum::{mpum_extended, mpum_generators};
use crate::reldeg::{vecreldeg_informativity, VecRelDegKind};

/// Outcome of the data-based zero-dynamics stability test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZdSign {
    Stable,
    Unstable,
    Inconclusive,
}

impl ZdSign {
    /// `+1`, `-1` or `0`.
    pub fn as_i8(self) -> i8 {
        match self {
            ZdSign::Stable => 1,
            ZdSign::Unstable => -1,
            ZdSign::Inconclusive => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZdConditions {
    /// The data determine a system of the declared McMillan degree.
    pub mcmillan_ok: bool,
    /// The data certify a vector relative degree with the declared sum.
    pub reldeg_sum_ok: bool,
    /// Stability of the zero dynamics of the MPUM.
    pub mpum_zd_stable: Stability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZdVerdict {
    pub s: ZdSign,
    pub q_tilde: Option<Matrix>,
    pub spectrum: Option<Vec<Complex64>>,
    pub conditions: ZdConditions,
}

fn require_square(ds: &DataSet) -> Result<()> {
    if ds.m() != ds.p() {
        return Err(Error::DimensionMismatch(format!(
            "zero dynamics need as many inputs as outputs, got m={} p={}",
            ds.m(),
            ds.p()
        )));
    }
    Ok(())
}

fn require_len(ds: &DataSet, len: usize) -> Result<()> {
    if ds.min_len() < len {
        return Err(Error::DataTooShort(format!(
            "need {len} samples per sequence, shortest has {}",
            ds.min_len()
        )));
    }
    Ok(())
}

/// Static systems: the data determine that `y = D u` with `D` invertible
/// exactly when the outputs span `m` dimensions.
pub fn static_zd_informativity(ds: &DataSet, tol: &ToleranceConfig) -> bool {
    mosaic_hankel(ds, 1, Signal::Output).map_or(false, |h| numerical_rank(&h, tol) == ds.m())
}

fn top_singular_value(m: &Matrix) -> f64 {
    svd(m).s.first().copied().unwrap_or(0.0)
}

/// Generators of the inputs `u` on `window` samples for which `(u, 0)` lies
/// in the MPUM.
pub fn zd_input_generators(ds: &DataSet, lag: usize, window: usize, tol: &ToleranceConfig) -> Result<Matrix> {
    let m = ds.m();
    let gen = if window <= lag + 1 {
        mpum_generators(ds, lag)?.leading_window(window)?
    } else {
        mpum_extended(ds, lag, window - lag - 1, tol)?
    };
    let g = compress_columns(&normalized(&gen.generators), tol);
    let scale = top_singular_value(&g);
    let gu = g.rows(0, window * m).into_owned();
    let gy = g.rows(window * m, window * ds.p()).into_owned();
    let k = kernel_basis_floor(&gy, scale, tol);
    if k.ncols() == 0 {
        return Ok(Matrix::zeros(window * m, 0));
    }
    Ok(gu * k)
}

/// `Q~` and the orthonormal basis `V` (one column per basis vector, `m lag`
/// rows) of the first `lag` input samples of zero-output trajectories.
pub fn qtilde(ds: &DataSet, lag: usize, tol: &ToleranceConfig) -> Result<(Matrix, Matrix)> {
    let m = ds.m();
    let w = 2 * lag + 1;
    let mg = zd_input_generators(ds, lag, w, tol)?;
    if lag == 0 {
        return Ok((Matrix::zeros(0, 0), Matrix::zeros(0, 0)));
    }
    let head = mg.rows(0, lag * m).into_owned();
    let next = mg.rows(lag * m, m).into_owned();
    let scale = top_singular_value(&mg);
    let v = range_basis_floor(&head, scale, tol);
    let d = v.ncols();
    if d == 0 {
        return Ok((Matrix::zeros(0, 0), v));
    }
    let ker = kernel_basis_floor(&head, scale, tol);
    if ker.ncols() > 0 && (&next * &ker).norm() > tol.membership_rtol * (scale + next.norm()) {
        return Err(Error::ContinuationNotUnique);
    }
    let coef = lstsq(&head, &v, tol);
    let cont = &next * coef;
    let mut z = Matrix::zeros(d, lag * m);
    for k in 0..d {
        for c in m..lag * m {
            z[(k, c - m)] = v[(c, k)];
        }
        for c in 0..m {
            z[(k, (lag - 1) * m + c)] = cont[(c, k)];
        }
    }
    let q = &z * &v;
    if (&q * v.transpose() - &z).norm() > tol.membership_rtol.sqrt() * (1.0 + z.norm()) {
        return Err(Error::ContinuationNotUnique);
    }
    Ok((q, v))
}

/// Stability of the zero dynamics under persistent excitation of order
/// `window + n`, `window >= lag + max r + 1`.
pub fn zd_stability_pe(
    ds: &DataSet,
    lag: usize,
    n: usize,
    r: &[usize],
    window: usize,
    tol: &ToleranceConfig,
) -> Result<Stability> {
    require_square(ds)?;
    let rmax = r.iter().copied().max().unwrap_or(0);
    if window < lag + rmax + 1 {
        return Err(Error::InvalidArgument(format!(
            "window {window} is shorter than lag + max r + 1 = {}",
            lag + rmax + 1
        )));
    }
    let order = window + n;
    require_len(ds, order)?;
    if !is_persistently_exciting(ds, order, tol)? {
        return Err(Error::NotPersistentlyExciting { order });
    }
    let sr: usize = r.iter().sum();
    let expected = n.checked_sub(sr).ok_or_else(|| Error::InvalidArgument("sum of r exceeds n".into()))?;
    let (q, _) = qtilde(ds, lag, tol)?;
    if q.nrows() != expected {
        return Err(Error::DimensionMismatchZd {
            expected,
            found: q.nrows(),
        });
    }
    is_schur_stable(&q, tol)
}

/// The data determine a McMillan degree of `n`:
/// `rank H_{lag+1}(y) ker H_{lag+1}(u) = n`.
pub fn mcmillan_condition(ds: &DataSet, lag: usize, n: usize, tol: &ToleranceConfig) -> Result<bool> {
    require_len(ds, 2 * lag + 1)?;
    let g = mpum_generators(ds, lag)?;
    let h = compress_columns(&normalized(&g.generators), tol);
    let scale = top_singular_value(&h);
    let w = lag + 1;
    let hu = h.rows(0, w * ds.m()).into_owned();
    let hy = h.rows(w * ds.m(), w * ds.p()).into_owned();
    let k = kernel_basis_floor(&hu, scale, tol);
    if k.ncols() == 0 {
        return Ok(n == 0);
    }
    Ok(numerical_rank_floor(&(hy * k), scale, tol) == n)
}

/// Sufficient test: the data certify a vector relative degree whose entries
/// sum to `r_s`.
pub fn reldeg_sum_informative(ds: &DataSet, lag: usize, r_s: usize, tol: &ToleranceConfig) -> Result<bool> {
    require_square(ds)?;
    let v = vecreldeg_informativity(ds, lag, tol)?;
    if v.kind != VecRelDegKind::Full {
        return Ok(false);
    }
    Ok(v.r.iter().map(|r| r.unwrap_or(usize::MAX / 4)).sum::<usize>() == r_s)
}

/// Three-valued zero-dynamics stability test. Unstable `Q~` alone decides
/// instability; stability additionally needs the McMillan-degree and
/// relative-degree-sum conditions.
pub fn algorithm2(ds: &DataSet, lag: usize, n: usize, r_s: usize, tol: &ToleranceConfig) -> Result<ZdVerdict> {
    require_square(ds)?;
    require_len(ds, 2 * lag + 1)?;
    let (q, _) = qtilde(ds, lag, tol)?;
    let stab = is_schur_stable(&q, tol)?;
    let spectrum = eigenvalues(&q)?;
    let mcmillan_ok = mcmillan_condition(ds, lag, n, tol)?;
    let reldeg_sum_ok = reldeg_sum_informative(ds, lag, r_s, tol)?;
    let s = match stab {
        Stability::Unstable => ZdSign::Unstable,
        Stability::Stable if mcmillan_ok && reldeg_sum_ok => ZdSign::Stable,
        _ => ZdSign::Inconclusive,
    };
    Ok(ZdVerdict {
        s,
        q_tilde: Some(q),
        spectrum: Some(spectrum),
        conditions: ZdConditions {
            mcmillan_ok,
            reldeg_sum_ok,
            mpum_zd_stable: stab,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hankel::Trajectory;
    use crate::lti::build_from_bif;
    use crate::signal::pe_dataset;

    fn m(r: usize, c: usize, v: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, v)
    }

    #[test]
    fn static_examples() {
        let tol = ToleranceConfig::default();
        let u = m(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let same = DataSet::single(Trajectory::new(u.clone(), u.clone()).unwrap());
        assert!(static_zd_informativity(&same, &tol));
        let zero = DataSet::single(Trajectory::new(u.clone(), Matrix::zeros(4, 2)).unwrap());
        assert!(!static_zd_informativity(&zero, &tol));
        let y = m(4, 2, &[1.0, 2.0, 2.0, 4.0, -1.0, -2.0, 0.0, 0.0]);
        let rank1 = DataSet::single(Trajectory::new(u, y).unwrap());
        assert!(!static_zd_informativity(&rank1, &tol));
    }

    #[test]
    fn siso_zero_dynamics_from_data() {
        let tol = ToleranceConfig::default();
        for (q, a, want) in [(0.5, [0.3, 0.05], ZdSign::Stable), (2.0, [-1.2, -2.55], ZdSign::Unstable)] {
            let sys = build_from_bif(&[1], &m(1, 1, &[q]), &m(1, 1, &[1.0]), &m(1, 2, &a), &m(1, 1, &[1.0])).unwrap();
            let ds = pe_dataset(&sys, 60, 8, 3, &tol).unwrap();
            let (qt, v) = qtilde(&ds, 2, &tol).unwrap();
            assert_eq!(v.ncols(), 1);
            assert!((qt[(0, 0)] - q).abs() < 1e-8, "{qt}");
            let verdict = algorithm2(&ds, 2, 2, 1, &tol).unwrap();
            assert_eq!(verdict.s, want);
            assert!(verdict.conditions.mcmillan_ok);
        }
    }

    #[test]
    fn zero_data() {
        let tol = ToleranceConfig::default();
        let z = DataSet::single(Trajectory::new(Matrix::zeros(9, 1), Matrix::zeros(9, 1)).unwrap());
        assert!(!mcmillan_condition(&z, 1, 1, &tol).unwrap());
        assert!(!reldeg_sum_informative(&z, 1, 1, &tol).unwrap());
        let mg = zd_input_generators(&z, 1, 3, &tol).unwrap();
        assert_eq!(numerical_rank(&mg, &tol), 0);
    }
}
