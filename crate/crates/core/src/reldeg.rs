//! Relative degree from data: identification under persistent excitation,
//! the sharp row-index test, the informativity algorithm for SISO data and
//! the vector relative degree with its decoupling matrix.
//!
//! Output and input indices are zero-based.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hankel::{is_persistently_exciting, DataSet, GeneratorSubspace, Signal};
use crate::linalg::{
    compress_columns, in_span, normalized, numerical_rank_floor, range_basis, residual_norm, select_rows, Matrix,
    ToleranceConfig, Vector,
};
use crate::lti::RelDeg;
use crate::mpum::{extend_generators, mpum_generators, unique_continuation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelDegVerdict {
    /// Every system explaining the data has relative degree `r`; `witness`
    /// is its first nonzero Markov parameter.
    Informative { r: usize, witness: f64 },
    InformativeInfinite,
    NotInformative,
}

impl RelDegVerdict {
    pub fn r(&self) -> Option<usize> {
        match self {
            RelDegVerdict::Informative { r, .. } => Some(*r),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<f64> {
        match self {
            RelDegVerdict::Informative { witness, .. } => Some(*witness),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecRelDegKind {
    /// `r` and a full-rank decoupling matrix hold for every explaining system.
    Full,
    /// `r` and the known entries of `G` are certified, the rank of `G` is not.
    DecouplingOnly,
    NotInformative,
}

/// What the data says about the relative degree of one input/output pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairDegree {
    Known(usize),
    /// The first `n` Markov coefficients are known to vanish.
    AtLeast(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VecRelDegVerdict {
    /// `None` for outputs whose relative degree is not determined.
    pub r: Vec<Option<usize>>,
    /// Decoupling matrix; entries outside `identified_mask` are zero.
    pub g: Matrix,
    /// `identified_mask[i][j]` is true when `g[(i, j)]` is certified.
    pub identified_mask: Vec<Vec<bool>>,
    pub pairs: Vec<Vec<PairDegree>>,
    pub kind: VecRelDegKind,
}

fn require_siso(m: usize, p: usize) -> Result<()> {
    if m != 1 || p != 1 {
        return Err(Error::NotSiso);
    }
    Ok(())
}

fn pe_or_err(ds: &DataSet, order: usize, tol: &ToleranceConfig) -> Result<()> {
    if ds.min_len() < order {
        return Err(Error::DataTooShort(format!(
            "persistency of excitation of order {order} needs {order} samples"
        )));
    }
    if !is_persistently_exciting(ds, order, tol)? {
        return Err(Error::NotPersistentlyExciting { order });
    }
    Ok(())
}

/// Orthonormal basis of the span of the given rows of `g` (as columns).
fn row_span(g: &Matrix, rows: &[usize], tol: &ToleranceConfig) -> Matrix {
    if rows.is_empty() {
        return Matrix::zeros(g.ncols(), 0);
    }
    range_basis(&select_rows(g, rows).transpose(), tol)
}

fn row_in(g: &Matrix, row: usize, span: &Matrix, tol: &ToleranceConfig) -> bool {
    let v: Vector = g.row(row).transpose();
    if span.ncols() == 0 {
        return v.norm() <= tol.membership_rtol * v.norm().max(1.0);
    }
    residual_norm(&v, span) <= tol.membership_rtol * v.norm().max(1.0)
}

fn stacked_hankel(ds: &DataSet, depth: usize, tol: &ToleranceConfig) -> Result<Matrix> {
    if ds.min_len() < depth {
        return Err(Error::DataTooShort(format!("window {depth} exceeds the data")));
    }
    let h = crate::hankel::mosaic_hankel(ds, depth, Signal::Stacked)?;
    Ok(compress_columns(&normalized(&h), tol))
}

/// Relative degree of a SISO system under persistent excitation of order
/// `window + n`, with `window >= lag + n + 1`.
pub fn reldeg_pe(ds: &DataSet, lag: usize, n: usize, window: usize, tol: &ToleranceConfig) -> Result<RelDeg> {
    require_siso(ds.m(), ds.p())?;
    if window < lag + n + 1 {
        return Err(Error::InvalidArgument(format!(
            "window {window} is shorter than lag + n + 1 = {}",
            lag + n + 1
        )));
    }
    pe_or_err(ds, window + n, tol)?;
    let g = stacked_hankel(ds, window, tol)?;
    let past: Vec<usize> = (0..lag).chain(window..window + lag).collect();
    let span = row_span(&g, &past, tol);
    for j in 1..=(n + 1).min(window - lag) {
        if !row_in(&g, window + lag + j - 1, &span, tol) {
            return Ok(RelDeg::Finite(j - 1));
        }
    }
    Ok(RelDeg::Infinite)
}

/// Difference of the first output row and the first input row of the depth
/// `window` Hankel that leave the span of the first `lag` samples. `None`
/// when no output row leaves it.
pub fn reldeg_sharp(ds: &DataSet, lag: usize, window: usize, tol: &ToleranceConfig) -> Result<Option<usize>> {
    require_siso(ds.m(), ds.p())?;
    if window < lag {
        return Err(Error::InvalidArgument(format!("window {window} is shorter than the lag {lag}")));
    }
    let g = stacked_hankel(ds, window, tol)?;
    let past: Vec<usize> = (0..lag).chain(window..window + lag).collect();
    let span = row_span(&g, &past, tol);
    let ky = (0..window).find(|&t| !row_in(&g, window + t, &span, tol));
    let ku = (0..window).find(|&t| !row_in(&g, t, &span, tol));
    Ok(match (ky, ku) {
        (Some(ky), Some(ku)) if ky >= ku => Some(ky - ku),
        _ => None,
    })
}

/// Informativity test for the relative degree on SISO window generators
/// (at least `lag + 1` samples; only the first `lag + 1` are used).
pub fn reldeg_informativity(gen: &GeneratorSubspace, lag: usize, tol: &ToleranceConfig) -> Result<RelDegVerdict> {
    require_siso(gen.m, gen.p)?;
    let gen = gen.leading_window(lag + 1)?;
    let g = normalized(&gen.generators);
    let y_target = gen.y_index(lag, 0);
    let y_past: Vec<usize> = (0..lag).map(|t| gen.y_index(t, 0)).collect();
    for i in (0..=lag).rev() {
        let mut rows: Vec<usize> = (0..i).map(|t| gen.u_index(t, 0)).collect();
        rows.extend(&y_past);
        let span = row_span(&g, &rows, tol);
        let ui = gen.u_index(i, 0);
        if row_in(&g, ui, &span, tol) {
            return Ok(RelDegVerdict::NotInformative);
        }
        if !row_in(&g, y_target, &span, tol) {
            let proj = |row: usize| -> Vector {
                let v: Vector = g.row(row).transpose();
                if span.ncols() == 0 {
                    v
                } else {
                    &v - &span * span.tr_mul(&v)
                }
            };
            let (u_perp, y_perp) = (proj(ui), proj(y_target));
            return Ok(RelDegVerdict::Informative {
                r: lag - i,
                witness: y_perp.dot(&u_perp) / u_perp.dot(&u_perp),
            });
        }
    }
    Ok(RelDegVerdict::NotInformative)
}

/// [`reldeg_informativity`] on the MPUM window generators of SISO data.
pub fn reldeg_informativity_data(ds: &DataSet, lag: usize, tol: &ToleranceConfig) -> Result<RelDegVerdict> {
    require_siso(ds.m(), ds.p())?;
    reldeg_informativity(&mpum_generators(ds, lag)?, lag, tol)
}

/// A trajectory of `lag + r + 1` samples in the extended MPUM whose input
/// vanishes before sample `lag` and equals one there, and whose output
/// vanishes up to sample `lag + r - 1` and equals `witness` at `lag + r`.
/// Returned in generator layout (all inputs, then all outputs), or `None`
/// when no such trajectory exists.
pub fn certificate_trajectory(
    ds: &DataSet,
    lag: usize,
    r: usize,
    witness: f64,
    tol: &ToleranceConfig,
) -> Result<Option<Vector>> {
    require_siso(ds.m(), ds.p())?;
    let ext = crate::mpum::mpum_extended(ds, lag, r, tol)?;
    let e = normalized(&ext.generators);
    let w = ext.window;
    let mut rows: Vec<usize> = (0..=lag).collect();
    rows.extend((0..w).map(|t| w + t));
    let mut rhs = Matrix::zeros(rows.len(), 1);
    rhs[(lag, 0)] = 1.0;
    rhs[(rows.len() - 1, 0)] = witness;
    let a = select_rows(&e, &rows);
    let sol = crate::linalg::lstsq(&a, &rhs, tol);
    if (&a * &sol - &rhs).norm() > tol.membership_rtol * rhs.norm().max(1.0) {
        return Ok(None);
    }
    Ok(Some((e * sol).column(0).into_owned()))
}

/// Checks an informative verdict against the MPUM: the certificate
/// trajectory exists and each of its windows of `lag + 1` samples lies in
/// the span of the MPUM window generators.
pub fn certificate_holds(ds: &DataSet, lag: usize, verdict: &RelDegVerdict, tol: &ToleranceConfig) -> Result<bool> {
    let RelDegVerdict::Informative { r, witness } = *verdict else {
        return Ok(true);
    };
    let Some(v) = certificate_trajectory(ds, lag, r, witness, tol)? else {
        return Ok(false);
    };
    let base = normalized(&mpum_generators(ds, lag)?.generators);
    let total = lag + r + 1;
    for s in 0..=r {
        let mut win = Vector::zeros(2 * (lag + 1));
        for t in 0..=lag {
            win[t] = v[s + t];
            win[lag + 1 + t] = v[total + s + t];
        }
        if !in_span(&win, &base, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Known part of the impulse response from input `j`, sound for every
/// system of lag at most `lag` whose windows contain the generators.
///
/// Returns `H(0..=k)[:, j]` as a `p x (k+1)` matrix for the largest `k <= k_max`
/// such that a trajectory with zero past, a unit input pulse on channel `j`
/// and zero input otherwise lies in the extended window generators.
pub fn impulse_prefix(
    gen: &GeneratorSubspace,
    lag: usize,
    k_max: usize,
    tol: &ToleranceConfig,
) -> Result<Vec<Option<Matrix>>> {
    let (m, p) = (gen.m, gen.p);
    let mut out: Vec<Option<Matrix>> = vec![None; m];
    let mut alive: Vec<bool> = vec![true; m];
    for k in 0..=k_max {
        if !alive.iter().any(|&a| a) {
            break;
        }
        let ext = extend_generators(gen, lag, k, tol)?;
        let e = normalized(&ext.generators);
        let w = ext.window;
        let mut known: Vec<usize> = (0..w * m).collect();
        known.extend((0..lag).flat_map(|t| (0..p).map(move |ch| w * m + t * p + ch)));
        let future: Vec<usize> = (lag..w).flat_map(|t| (0..p).map(move |ch| w * m + t * p + ch)).collect();
        let a = select_rows(&e, &known);
        let f = select_rows(&e, &future);
        let pinv_a = crate::linalg::pinv(&a, tol);
        for j in 0..m {
            if !alive[j] {
                continue;
            }
            let mut rhs = Matrix::zeros(known.len(), 1);
            rhs[(lag * m + j, 0)] = 1.0;
            let sol = &pinv_a * &rhs;
            if (&a * &sol - &rhs).norm() > tol.membership_rtol {
                alive[j] = false;
                continue;
            }
            let y = &f * sol;
            out[j] = Some(Matrix::from_fn(p, k + 1, |i, t| y[(t * p + i, 0)]));
        }
    }
    Ok(out)
}

/// Lower bound on the relative degree of SISO window generators: the number
/// of leading Markov parameters that the data proves to vanish, or the
/// relative degree itself when the data reveals a nonzero one.
pub fn reldeg_lower_bound(gen: &GeneratorSubspace, lag: usize, tol: &ToleranceConfig) -> Result<usize> {
    require_siso(gen.m, gen.p)?;
    let h = impulse_prefix(gen, lag, lag, tol)?;
    Ok(match &h[0] {
        None => 0,
        Some(h) => {
            let thr = zero_threshold(h, tol);
            (0..h.ncols()).find(|&t| h[(0, t)].abs() > thr).unwrap_or(h.ncols())
        }
    })
}

fn zero_threshold(h: &Matrix, tol: &ToleranceConfig) -> f64 {
    tol.membership_rtol * h.amax().max(1.0)
}

/// Vector relative degree and decoupling matrix under persistent excitation
/// of order `window + n`, or `None` when the decoupling matrix is not of
/// full row rank.
pub fn vecreldeg_pe(
    ds: &DataSet,
    lag: usize,
    n: usize,
    window: usize,
    tol: &ToleranceConfig,
) -> Result<Option<(Vec<usize>, Matrix)>> {
    let (m, p) = (ds.m(), ds.p());
    if window < lag + n + 1 {
        return Err(Error::InvalidArgument(format!(
            "window {window} is shorter than lag + n + 1 = {}",
            lag + n + 1
        )));
    }
    pe_or_err(ds, window + n, tol)?;
    if p > m {
        return Ok(None);
    }
    let full = GeneratorSubspace::new(stacked_hankel(ds, window, tol)?, window, m, p)?;
    let mut rij = vec![vec![None; m]; p];
    for j in 0..m {
        let sub = full.restrict_to_input(j, tol)?;
        let g = normalized(&sub.generators);
        let mut past: Vec<usize> = (0..lag).map(|t| sub.u_index(t, 0)).collect();
        past.extend((0..lag).flat_map(|t| (0..p).map(move |i| (t, i))).map(|(t, i)| sub.y_index(t, i)));
        let span = row_span(&g, &past, tol);
        for (i, row) in rij.iter_mut().enumerate() {
            row[j] = (0..=n.min(window - lag - 1)).find(|&t| !row_in(&g, sub.y_index(lag + t, i), &span, tol));
        }
    }
    let mut r = Vec::with_capacity(p);
    for row in &rij {
        match row.iter().flatten().min() {
            Some(&ri) => r.push(ri),
            None => return Ok(None),
        }
    }
    let mut a = Matrix::zeros(p, m);
    for j in 0..m {
        let mut uf = Matrix::zeros(window - lag, m);
        uf[(0, j)] = 1.0;
        let z = unique_continuation(ds, lag, window - lag, &Matrix::zeros(lag, m), &Matrix::zeros(lag, p), &uf, tol)?;
        for i in 0..p {
            a[(i, j)] = z[(r[i], i)];
        }
    }
    Ok((numerical_rank_floor(&a, 1.0, tol) == p).then_some((r, a)))
}

/// True when every `p x p` matrix with the known entries of `g` (marked in
/// `known`) and arbitrary other entries is invertible for some column
/// choice, by peeling rows that have a single entry not known to vanish.
fn triangular_completion(g: &Matrix, known: &[Vec<bool>], thr: f64) -> bool {
    let (p, m) = g.shape();
    let zero = |i: usize, j: usize| known[i][j] && g[(i, j)].abs() <= thr;
    let nonzero = |i: usize, j: usize| known[i][j] && g[(i, j)].abs() > thr;
    let mut cols: Vec<usize> = (0..p).collect();
    loop {
        let mut rows: Vec<usize> = (0..p).collect();
        let mut left = cols.clone();
        let mut progress = true;
        while progress && !rows.is_empty() {
            progress = false;
            for idx in 0..rows.len() {
                let i = rows[idx];
                let live: Vec<usize> = left.iter().copied().filter(|&j| !zero(i, j)).collect();
                if live.len() == 1 && nonzero(i, live[0]) {
                    rows.remove(idx);
                    left.retain(|&j| j != live[0]);
                    progress = true;
                    break;
                }
            }
        }
        if rows.is_empty() {
            return true;
        }
        // next p-subset of 0..m in lexicographic order
        let mut k = p;
        loop {
            if k == 0 {
                return false;
            }
            k -= 1;
            if cols[k] < m - p + k {
                cols[k] += 1;
                for l in k + 1..p {
                    cols[l] = cols[l - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Informativity for the vector relative degree and the decoupling matrix.
///
/// For each input the leading part of the impulse response that every
/// explaining system of lag at most `lag` shares is identified from the
/// extended MPUM (up to `p * lag` samples after the pulse). Pairs with a
/// known first nonzero coefficient fix the candidate `r_i`; all other pairs
/// must be proven zero beyond it.
pub fn vecreldeg_informativity(ds: &DataSet, lag: usize, tol: &ToleranceConfig) -> Result<VecRelDegVerdict> {
    vecreldeg_informativity_gen(&mpum_generators(ds, lag)?, lag, tol)
}

/// [`vecreldeg_informativity`] on window generators.
pub fn vecreldeg_informativity_gen(
    gen: &GeneratorSubspace,
    lag: usize,
    tol: &ToleranceConfig,
) -> Result<VecRelDegVerdict> {
    let (m, p) = (gen.m, gen.p);
    let h = impulse_prefix(gen, lag, p * lag, tol)?;
    let scale = h.iter().flatten().map(|x| x.amax()).fold(0.0, f64::max);
    let thr = tol.membership_rtol * scale.max(1.0);

    let pairs: Vec<Vec<PairDegree>> = (0..p)
        .map(|i| {
            (0..m)
                .map(|j| match &h[j] {
                    None => PairDegree::AtLeast(0),
                    Some(hj) => (0..hj.ncols())
                        .find(|&t| hj[(i, t)].abs() > thr)
                        .map_or(PairDegree::AtLeast(hj.ncols()), PairDegree::Known),
                })
                .collect()
        })
        .collect();

    let mut r = vec![None; p];
    let mut g = Matrix::zeros(p, m);
    let mut mask = vec![vec![false; m]; p];
    let mut informative = true;
    for i in 0..p {
        let ri = pairs[i]
            .iter()
            .filter_map(|d| match d {
                PairDegree::Known(r) => Some(*r),
                PairDegree::AtLeast(_) => None,
            })
            .min();
        let Some(ri) = ri else {
            informative = false;
            continue;
        };
        if pairs[i].iter().any(|d| matches!(d, PairDegree::AtLeast(lb) if *lb < ri)) {
            informative = false;
            continue;
        }
        r[i] = Some(ri);
        for j in 0..m {
            if let Some(hj) = &h[j] {
                if hj.ncols() > ri {
                    let v = hj[(i, ri)];
                    g[(i, j)] = if v.abs() > thr { v } else { 0.0 };
                    mask[i][j] = true;
                }
            }
        }
    }

    let kind = if !informative {
        VecRelDegKind::NotInformative
    } else if p <= m
        && ((mask.iter().flatten().all(|&k| k) && numerical_rank_floor(&g, 1.0, tol) == p)
            || triangular_completion(&g, &mask, thr))
    {
        VecRelDegKind::Full
    } else {
        VecRelDegKind::DecouplingOnly
    };
    Ok(VecRelDegVerdict {
        r,
        g,
        identified_mask: mask,
        pairs,
        kind,
    })
}
