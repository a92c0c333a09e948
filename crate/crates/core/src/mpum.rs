//! Most powerful unfalsified model of a data set: window generators,
//! extended windows and unique output continuation.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hankel::{DataSet, GeneratorSubspace};
use crate::linalg::{compress_columns, kernel_basis, lstsq, normalized, select_rows, Matrix, ToleranceConfig, Vector};

fn require_len(ds: &DataSet, len: usize) -> Result<()> {
    if ds.min_len() < len {
        return Err(Error::DataTooShort(format!(
            "need {len} samples per sequence, shortest has {}",
            ds.min_len()
        )));
    }
    Ok(())
}

/// Stacked mosaic Hankel of depth `lag + 1`.
pub fn mpum_generators(ds: &DataSet, lag: usize) -> Result<GeneratorSubspace> {
    require_len(ds, lag + 1)?;
    GeneratorSubspace::from_data(ds, lag + 1)
}

/// Generators of the MPUM on a window of `lag + k + 1` samples.
///
/// Every window of `lag + 1` samples is taken from the MPUM window
/// generators `G` as `G g_q`, and consecutive windows are glued on their
/// `lag` overlapping samples. The columns are `X_k ker Z_k`; `Z_0` has no
/// rows. The result is column-compressed.
pub fn mpum_extended(ds: &DataSet, lag: usize, k: usize, tol: &ToleranceConfig) -> Result<GeneratorSubspace> {
    extend_generators(&mpum_generators(ds, lag)?, lag, k, tol)
}

/// [`mpum_extended`] starting from arbitrary window generators; only the
/// first `lag + 1` samples of `base` are used.
pub fn extend_generators(
    base: &GeneratorSubspace,
    lag: usize,
    k: usize,
    tol: &ToleranceConfig,
) -> Result<GeneratorSubspace> {
    let base = base.leading_window(lag + 1)?;
    let (m, p) = (base.m, base.p);
    let g = compress_columns(&normalized(&base.generators), tol);
    let c = g.ncols();
    let w = lag + 1;
    let big = w + k;
    let u_blk = |t: usize| g.rows(t * m, m);
    let y_blk = |t: usize| g.rows(w * m + t * p, p);

    // gluing constraints: sample t+1 of window q equals sample t of window q+1
    let per = lag * (m + p);
    let mut z = Matrix::zeros(k * per, (k + 1) * c);
    for q in 0..k {
        let mut row = q * per;
        for t in 0..lag {
            z.view_mut((row, q * c), (m, c)).copy_from(&u_blk(t + 1));
            z.view_mut((row, (q + 1) * c), (m, c)).copy_from(&(-u_blk(t)));
            row += m;
        }
        for t in 0..lag {
            z.view_mut((row, q * c), (p, c)).copy_from(&y_blk(t + 1));
            z.view_mut((row, (q + 1) * c), (p, c)).copy_from(&(-y_blk(t)));
            row += p;
        }
    }

    let mut x = Matrix::zeros(big * (m + p), (k + 1) * c);
    for t in 0..big {
        let (q, s) = if t < w { (0, t) } else { (t - lag, lag) };
        x.view_mut((t * m, q * c), (m, c)).copy_from(&u_blk(s));
        x.view_mut((big * m + t * p, q * c), (p, c)).copy_from(&y_blk(s));
    }

    let ker = if k == 0 { Matrix::identity(c, c) } else { kernel_basis(&z, tol) };
    let gens = if ker.ncols() == 0 {
        Matrix::zeros(x.nrows(), 0)
    } else {
        compress_columns(&(x * ker), tol)
    };
    GeneratorSubspace::new(gens, big, m, p)
}

fn shape_check(name: &str, mat: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if mat.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {:?}, expected ({rows}, {cols})",
            mat.shape()
        )));
    }
    Ok(())
}

/// Output `y_f` (one row per sample) that follows the past `(u_p, y_p)`
/// under the future input `u_f`, using the data's stacked Hankel of depth
/// `t_p + t_f`.
pub fn unique_continuation(
    ds: &DataSet,
    t_p: usize,
    t_f: usize,
    u_p: &Matrix,
    y_p: &Matrix,
    u_f: &Matrix,
    tol: &ToleranceConfig,
) -> Result<Matrix> {
    let (m, p) = (ds.m(), ds.p());
    shape_check("u_p", u_p, t_p, m)?;
    shape_check("y_p", y_p, t_p, p)?;
    shape_check("u_f", u_f, t_f, m)?;
    let len = t_p + t_f;
    if len == 0 {
        return Ok(Matrix::zeros(0, p));
    }
    require_len(ds, len)?;
    let g = GeneratorSubspace::from_data(ds, len)?;
    let h = compress_columns(&normalized(&g.generators), tol);

    let mut known_rows: Vec<usize> = (0..len * m).collect();
    known_rows.extend((0..t_p * p).map(|r| len * m + r));
    let future_rows: Vec<usize> = (t_p * p..len * p).map(|r| len * m + r).collect();
    let mut rhs = Vector::zeros(known_rows.len());
    for t in 0..len {
        for ch in 0..m {
            rhs[t * m + ch] = if t < t_p { u_p[(t, ch)] } else { u_f[(t - t_p, ch)] };
        }
    }
    for t in 0..t_p {
        for ch in 0..p {
            rhs[len * m + t * p + ch] = y_p[(t, ch)];
        }
    }

    let a = select_rows(&h, &known_rows);
    let f = select_rows(&h, &future_rows);
    let rhs_m = Matrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    let sol = lstsq(&a, &rhs_m, tol);
    let resid = (&a * &sol - &rhs_m).norm();
    if resid > tol.membership_rtol * rhs.norm().max(1.0) {
        return Err(Error::Infeasible);
    }
    let ker = kernel_basis(&a, tol);
    if ker.ncols() > 0 && (&f * &ker).norm() > tol.membership_rtol * (1.0 + f.norm()) {
        return Err(Error::NotUnique);
    }
    let yf = f * sol;
    Ok(Matrix::from_fn(t_f, p, |t, ch| yf[(t * p + ch, 0)]))
}
