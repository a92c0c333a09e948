//! Continuous-time reconstruction from three zero-order-hold
//! discretizations, and the data-to-continuous pipeline.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hankel::DataSet;
use crate::linalg::{eigenvalues, pinv, svd, CMatrix, Matrix, ToleranceConfig};
use crate::lti::{ContinuousStateSpace, DiscreteStateSpace};
use crate::mpum::unique_continuation;

pub const DEFAULT_K_MAX: usize = 32;

/// Three discretizations of one continuous system.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationTriple {
    pub systems: [DiscreteStateSpace; 3],
    pub sampling_times: [f64; 3],
}

impl DiscretizationTriple {
    pub fn new(systems: [DiscreteStateSpace; 3], sampling_times: [f64; 3]) -> Result<Self> {
        let dims = |s: &DiscreteStateSpace| (s.n(), s.m(), s.p());
        if systems.iter().any(|s| dims(s) != dims(&systems[0])) {
            return Err(Error::DimensionMismatch("discretizations differ in (n, m, p)".into()));
        }
        check_times(&sampling_times)?;
        Ok(Self { systems, sampling_times })
    }

    /// Forward discretization of `sys` at the three steps.
    pub fn from_continuous(sys: &ContinuousStateSpace, h: [f64; 3]) -> Result<Self> {
        Self::new(
            [sys.zoh_discretize(h[0])?, sys.zoh_discretize(h[1])?, sys.zoh_discretize(h[2])?],
            h,
        )
    }
}

fn check_times(h: &[f64; 3]) -> Result<()> {
    if h.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument("sampling times must be positive".into()));
    }
    if h[0] == h[1] || h[0] == h[2] || h[1] == h[2] {
        return Err(Error::InvalidArgument("sampling times must be pairwise distinct".into()));
    }
    Ok(())
}

/// De-aliased continuous eigenvalues. `lambdas[j]` belongs to the `j`-th
/// eigenvalue of the first discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairing {
    pub lambdas: Vec<Complex64>,
    /// Groups of eigenvalue indices sharing one modulus shell.
    pub shells: Vec<Vec<usize>>,
    /// Matched index into `E1`, `E2`, `E3` for every eigenvalue.
    pub matched: Vec<[usize; 3]>,
    /// Branch index `k` with `h_i Im(lambda) = arg(mu_i) + 2 pi k`.
    pub k_indices: Vec<[i64; 3]>,
}

fn wrap(a: f64) -> f64 {
    let t = a - 2.0 * PI * (a / (2.0 * PI)).round();
    if t.is_nan() { a } else { t }
}

/// Log-space distance between `mu` and `exp(h lambda)`.
fn log_distance(mu: Complex64, lambda: Complex64, h: f64) -> f64 {
    if mu.norm() == 0.0 {
        return f64::INFINITY;
    }
    let dr = mu.norm().ln() - h * lambda.re;
    let da = wrap(mu.arg() - h * lambda.im);
    dr.hypot(da)
}

fn branch(mu: Complex64, lambda: Complex64, h: f64) -> i64 {
    ((h * lambda.im - mu.arg()) / (2.0 * PI)).round() as i64
}

/// Radius used for eigenvalue matching in log space.
pub fn match_radius(tol: &ToleranceConfig) -> f64 {
    tol.match_atol.sqrt()
}

/// Recovers `lambda` with `exp(h_i lambda) in E_i` for all three steps.
pub fn pair_eigenvalues(
    e: [&[Complex64]; 3],
    h: [f64; 3],
    k_max: usize,
    tol: &ToleranceConfig,
) -> Result<EigenPairing> {
    check_times(&h)?;
    let n = e[0].len();
    if e[1].len() != n || e[2].len() != n {
        return Err(Error::ShellMismatch);
    }
    if e.iter().any(|s| s.iter().any(|z| z.norm() == 0.0 || !z.norm().is_finite())) {
        return Err(Error::InvalidArgument("discrete eigenvalues must be nonzero and finite".into()));
    }
    let rad = match_radius(tol);
    let mut used = [vec![false; n], vec![false; n]];
    let mut lambdas = Vec::with_capacity(n);
    let mut matched = Vec::with_capacity(n);
    let mut k_indices = Vec::with_capacity(n);

    for (j, &mu) in e[0].iter().enumerate() {
        let re = mu.norm().ln() / h[0];
        // shell check: some unused eigenvalue of E2 and E3 has the same decay rate
        for s in 1..3 {
            let ok = e[s]
                .iter()
                .enumerate()
                .any(|(i, z)| !used[s - 1][i] && (z.norm().ln() / h[s] - re).abs() * h[s] <= rad);
            if !ok {
                return Err(Error::ShellMismatch);
            }
        }
        let closest = |s: usize, lam: Complex64| -> Option<(usize, f64)> {
            e[s].iter()
                .enumerate()
                .filter(|(i, _)| !used[s - 1][*i])
                .map(|(i, z)| (i, log_distance(*z, lam, h[s])))
                .filter(|(_, d)| *d <= rad)
                .min_by(|a, b| a.1.total_cmp(&b.1))
        };
        let mut hits: Vec<(Complex64, usize, usize, f64)> = Vec::new();
        let k_max = k_max as i64;
        for k in -k_max..=k_max {
            let lam = Complex64::new(re, (mu.arg() + 2.0 * PI * k as f64) / h[0]);
            if let (Some((i2, d2)), Some((i3, d3))) = (closest(1, lam), closest(2, lam)) {
                hits.push((lam, i2, i3, d2 + d3));
            }
        }
        match hits.len() {
            0 => return Err(Error::NoBranchMatch { index: j, k_max: k_max as usize }),
            1 => {}
            _ => {
                let twin = e[0]
                    .iter()
                    .enumerate()
                    .any(|(i, z)| i != j && log_distance(*z, Complex64::new(z.norm().ln(), mu.arg()), 1.0) <= rad
                        && (z - mu).norm() <= rad * mu.norm());
                return Err(if twin { Error::DuplicateAlias } else { Error::AmbiguousBranch { index: j } });
            }
        }
        let (lam, i2, i3, _) = hits[0];
        used[0][i2] = true;
        used[1][i3] = true;
        lambdas.push(lam);
        matched.push([j, i2, i3]);
        k_indices.push([branch(mu, lam, h[0]), branch(e[1][i2], lam, h[1]), branch(e[2][i3], lam, h[2])]);
    }

    // equal discrete eigenvalues must resolve to equal continuous ones
    for a in 0..n {
        for b in 0..a {
            if (e[0][a] - e[0][b]).norm() <= rad * e[0][a].norm() && (lambdas[a] - lambdas[b]).norm() > rad {
                return Err(Error::DuplicateAlias);
            }
        }
    }

    let mut shells: Vec<Vec<usize>> = Vec::new();
    for j in 0..n {
        match shells.iter_mut().find(|g| (lambdas[g[0]].re - lambdas[j].re).abs() * h[0] <= rad) {
            Some(g) => g.push(j),
            None => shells.push(vec![j]),
        }
    }
    Ok(EigenPairing {
        lambdas,
        shells,
        matched,
        k_indices,
    })
}

/// Real `2n x 2n` embedding of a complex matrix.
fn realify(m: &CMatrix) -> Matrix {
    let (r, c) = m.shape();
    let mut out = Matrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, c + j)] = -z.im;
            out[(r + i, j)] = z.im;
            out[(r + i, c + j)] = z.re;
        }
    }
    out
}

/// `dim` independent complex vectors spanning the kernel of `m`, computed
/// from the real embedding.
fn complex_kernel(m: &CMatrix, dim: usize) -> CMatrix {
    let n = m.ncols();
    let d = svd(&realify(m));
    let total = d.vt.nrows();
    let lim = f64::EPSILON.sqrt() * d.s.first().copied().unwrap_or(0.0).max(1.0);
    if total < 2 * dim || d.s[total - 2 * dim] > lim {
        return CMatrix::zeros(n, 0);
    }
    let mut out: Vec<nalgebra::DVector<Complex64>> = Vec::new();
    for k in (total.saturating_sub(2 * dim)..total).rev() {
        let mut x = nalgebra::DVector::from_fn(n, |i, _| Complex64::new(d.vt[(k, i)], d.vt[(k, n + i)]));
        for q in &out {
            let c = q.dotc(&x);
            x -= q * c;
        }
        let nx = x.norm();
        if nx > 0.3 {
            out.push(x / Complex64::new(nx, 0.0));
        }
        if out.len() == dim {
            break;
        }
    }
    let mut v = CMatrix::zeros(n, dim);
    for (j, x) in out.iter().enumerate() {
        v.set_column(j, x);
    }
    v
}

fn condition_number(v: &CMatrix) -> f64 {
    let s = svd(&realify(v)).s;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Eigenvector matrix of `a`, one column per entry of `mus`.
fn eigenvectors(a: &Matrix, mus: &[Complex64], tol: &ToleranceConfig) -> Result<CMatrix> {
    let n = a.nrows();
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let close = |x: Complex64, y: Complex64| (x - y).norm() <= 1e-8 * a.norm().max(1.0);
    let mut v = CMatrix::zeros(n, n);
    let mut done = vec![false; n];
    for j in 0..n {
        if done[j] {
            continue;
        }
        let group: Vec<usize> = (j..n).filter(|&i| !done[i] && close(mus[i], mus[j])).collect();
        let shifted = &ac - CMatrix::identity(n, n) * mus[j];
        let basis = complex_kernel(&shifted, group.len());
        if basis.ncols() < group.len() {
            return Err(Error::Defective);
        }
        for (c, &i) in group.iter().enumerate() {
            v.set_column(i, &basis.column(c));
            done[i] = true;
        }
    }
    if condition_number(&v) > 1.0 / (tol.match_atol * 1e-3) {
        return Err(Error::Defective);
    }
    Ok(v)
}

/// `phi_1(z) = (e^z - 1) / z` with `phi_1(0) = 1`.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0
    } else {
        (z.exp() - 1.0) / z
    }
}

fn real_part_checked(m: &CMatrix, what: &str, tol: &ToleranceConfig) -> Result<Matrix> {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    if im.norm() > match_radius(tol) * re.norm().max(1.0) {
        return Err(Error::InvalidArgument(format!("{what} is not real up to tolerance")));
    }
    Ok(re)
}

/// Continuous system from the first discretization and the spectra of the
/// other two. No validation.
fn rebuild(
    sys1: &DiscreteStateSpace,
    e2: &[Complex64],
    e3: &[Complex64],
    h: [f64; 3],
    k_max: usize,
    tol: &ToleranceConfig,
) -> Result<ContinuousStateSpace> {
    let n = sys1.n();
    if n == 0 {
        return ContinuousStateSpace::new(
            Matrix::zeros(0, 0),
            Matrix::zeros(0, sys1.m()),
            Matrix::zeros(sys1.p(), 0),
            sys1.d.clone(),
        );
    }
    let e1 = eigenvalues(&sys1.a)?;
    let pairing = pair_eigenvalues([&e1, e2, e3], h, k_max, tol)?;
    let v = eigenvectors(&sys1.a, &e1, tol)?;
    let vinv = v.clone().try_inverse().ok_or(Error::Defective)?;
    let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(pairing.lambdas.clone()));
    let a = real_part_checked(&(&v * lam * &vinv), "A", tol)?;

    let mut inv_int = Vec::with_capacity(n);
    for l in &pairing.lambdas {
        let w = phi1(l * h[0]) * h[0];
        if w.norm() < 1e-8 * h[0] {
            return Err(Error::NearSingularIntegral);
        }
        inv_int.push(Complex64::new(1.0, 0.0) / w);
    }
    let dinv = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(inv_int));
    let b1 = sys1.b.map(|x| Complex64::new(x, 0.0));
    let b = real_part_checked(&(&v * dinv * &vinv * b1), "B", tol)?;
    ContinuousStateSpace::new(a, b, sys1.c.clone(), sys1.d.clone())
}

fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Reconstructs `(A, B, C, D)` from three discretizations; the result is
/// re-discretized at every step and compared with the inputs.
pub fn reconstruct_ct(triple: &DiscretizationTriple, k_max: usize, tol: &ToleranceConfig) -> Result<ContinuousStateSpace> {
    let [s1, s2, s3] = &triple.systems;
    let e2 = eigenvalues(&s2.a)?;
    let e3 = eigenvalues(&s3.a)?;
    let sys = rebuild(s1, &e2, &e3, triple.sampling_times, k_max, tol)?;
    let limit = 10.0 * tol.match_atol;
    let mut worst: f64 = 0.0;
    for (s, &h) in triple.systems.iter().zip(&triple.sampling_times) {
        let d = sys.zoh_discretize(h)?;
        worst = worst.max(rel_err(&d.a, &s.a));
        if s.b.norm() > 0.0 {
            worst = worst.max(rel_err(&d.b, &s.b));
        }
        worst = worst.max(rel_err(&d.c, &s.c)).max(rel_err(&d.d, &s.d));
    }
    if !(worst < limit) {
        return Err(Error::ValidationFailed { error: worst });
    }
    Ok(sys)
}

/// Markov parameters `H(0..count)` (each `p x m`) read off unique
/// continuations of a zero past under unit pulses.
pub fn markov_from_data(ds: &DataSet, lag: usize, count: usize, tol: &ToleranceConfig) -> Result<Vec<Matrix>> {
    let (m, p) = (ds.m(), ds.p());
    let mut out = vec![Matrix::zeros(p, m); count];
    if count == 0 {
        return Ok(out);
    }
    let order = lag + count;
    for j in 0..m {
        let mut uf = Matrix::zeros(count, m);
        uf[(0, j)] = 1.0;
        let y = unique_continuation(ds, lag, count, &Matrix::zeros(lag, m), &Matrix::zeros(lag, p), &uf, tol)
            .map_err(|e| match e {
                Error::Infeasible | Error::NotUnique => Error::NotPersistentlyExciting { order },
                other => other,
            })?;
        for (t, h) in out.iter_mut().enumerate() {
            for i in 0..p {
                h[(i, j)] = y[(t, i)];
            }
        }
    }
    Ok(out)
}

/// Ho-Kalman realization of order `n` from Markov parameters `H(0..2n)`.
pub fn ho_kalman(markov: &[Matrix], n: usize, tol: &ToleranceConfig) -> Result<DiscreteStateSpace> {
    let (p, m) = markov[0].shape();
    if n == 0 {
        return DiscreteStateSpace::new(Matrix::zeros(0, 0), Matrix::zeros(0, m), Matrix::zeros(p, 0), markov[0].clone());
    }
    if markov.len() < 2 * n + 1 {
        return Err(Error::DataTooShort(format!("need {} Markov parameters", 2 * n + 1)));
    }
    let blk = |shift: usize| {
        let mut h = Matrix::zeros(n * p, n * m);
        for i in 0..n {
            for j in 0..n {
                h.view_mut((i * p, j * m), (p, m)).copy_from(&markov[i + j + shift]);
            }
        }
        h
    };
    let h0 = blk(1);
    let h1 = blk(2);
    let d = svd(&h0);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let thresh = tol.rank_rtol * smax * h0.nrows().max(h0.ncols()) as f64;
    let rank = d.s.iter().filter(|&&x| x > thresh).count();
    if rank < n || smax == 0.0 {
        return Err(Error::RankDeficientHankel { rank, n });
    }
    let sq = Matrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| d.s[i].sqrt()));
    let obs = d.u.columns(0, n) * &sq;
    let ctr = &sq * d.vt.rows(0, n);
    let a = pinv(&obs, tol) * h1 * pinv(&ctr, tol);
    DiscreteStateSpace::new(
        a,
        ctr.columns(0, m).into_owned(),
        obs.rows(0, p).into_owned(),
        markov[0].clone(),
    )
}

/// Minimal realization of order `n` from data with the given lag.
pub fn realize_from_data(ds: &DataSet, lag: usize, n: usize, tol: &ToleranceConfig) -> Result<DiscreteStateSpace> {
    let markov = markov_from_data(ds, lag, 2 * n + 1, tol)?;
    ho_kalman(&markov, n, tol)
}

/// Continuous system from three data sets recorded at different steps.
/// The Markov parameters of the result, discretized at every step, must
/// match those extracted from the corresponding data.
pub fn reconstruct_from_data(
    ds: [&DataSet; 3],
    lags: [usize; 3],
    ns: [usize; 3],
    k_max: usize,
    tol: &ToleranceConfig,
) -> Result<ContinuousStateSpace> {
    let mut h = [0.0; 3];
    for (slot, d) in h.iter_mut().zip(&ds) {
        *slot = d
            .sampling_time()
            .ok_or_else(|| Error::InvalidArgument("every data set needs a sampling time".into()))?;
    }
    check_times(&h)?;
    if ns[0] != ns[1] || ns[0] != ns[2] {
        return Err(Error::InvalidArgument("declared orders differ across rates".into()));
    }
    let n = ns[0];
    let mut markov = Vec::with_capacity(3);
    let mut systems = Vec::with_capacity(3);
    for i in 0..3 {
        let mk = markov_from_data(ds[i], lags[i], 2 * n + 1, tol)?;
        systems.push(ho_kalman(&mk, n, tol)?);
        markov.push(mk);
    }
    let e2 = eigenvalues(&systems[1].a)?;
    let e3 = eigenvalues(&systems[2].a)?;
    let sys = rebuild(&systems[0], &e2, &e3, h, k_max, tol).map_err(|e| match e {
        Error::ShellMismatch | Error::NoBranchMatch { .. } => Error::MarkovMismatch { error: f64::INFINITY },
        other => other,
    })?;
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        let got = sys.zoh_discretize(h[i])?.impulse_response(2 * n + 1);
        let scale = markov[i].iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for (a, b) in got.iter().zip(&markov[i]) {
            worst = worst.max((a - b).norm() / scale);
        }
    }
    if !(worst < 10.0 * match_radius(tol)) {
        return Err(Error::MarkovMismatch { error: worst });
    }
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn forward(l: &[Complex64], h: [f64; 3]) -> [Vec<Complex64>; 3] {
        h.map(|hi| l.iter().map(|z| (z * hi).exp()).collect())
    }

    #[test]
    fn real_eigenvalues_need_no_branch() {
        let tol = ToleranceConfig::default();
        let h = [0.3, 0.3 / 2f64.sqrt(), 0.3 / 3f64.sqrt()];
        let l = [c(-1.0, 0.0), c(-2.0, 0.0)];
        let e = forward(&l, h);
        let p = pair_eigenvalues([&e[0], &e[1], &e[2]], h, 32, &tol).unwrap();
        for (a, b) in p.lambdas.iter().zip(&l) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(p.k_indices, vec![[0, 0, 0]; 2]);
        assert_eq!(p.shells.len(), 2);
    }

    #[test]
    fn aliased_branch_resolved() {
        let tol = ToleranceConfig::default();
        let h0 = 0.1;
        let h = [h0, h0 / 2f64.sqrt(), h0 / 3f64.sqrt()];
        let w = 1.0 + 2.0 * PI / h0;
        let l = [c(0.0, w), c(0.0, -w)];
        let e = forward(&l, h);
        let p = pair_eigenvalues([&e[0], &e[1], &e[2]], h, 32, &tol).unwrap();
        assert!((p.lambdas[0] - l[0]).norm() < 1e-7, "{:?}", p.lambdas);
        assert!((p.lambdas[1] - l[1]).norm() < 1e-7);
        assert_eq!(p.k_indices[0][0], 1);
        assert!(matches!(
            pair_eigenvalues([&e[0], &e[1], &e[2]], h, 0, &tol),
            Err(Error::NoBranchMatch { index: 0, k_max: 0 })
        ));
    }

    #[test]
    fn rational_steps_are_ambiguous() {
        let tol = ToleranceConfig::default();
        let h = [1.0, 0.5, 0.25];
        let l = [c(-0.1, 0.5)];
        let e = forward(&l, h);
        assert!(matches!(
            pair_eigenvalues([&e[0], &e[1], &e[2]], h, 8, &tol),
            Err(Error::AmbiguousBranch { index: 0 })
        ));
    }

    #[test]
    fn shell_mismatch() {
        let tol = ToleranceConfig::default();
        let h = [1.0, 0.7, 0.6];
        let e1 = [c(0.5, 0.0)];
        let e2 = [c(0.9, 0.0)];
        assert_eq!(pair_eigenvalues([&e1, &e2, &e1], h, 4, &tol), Err(Error::ShellMismatch));
    }

    #[test]
    fn phi1_series_and_closed_form_agree() {
        for z in [c(1e-5, 0.0), c(0.0, 1.2e-5), c(-1.0e-5, 2e-6)] {
            assert!((phi1(z) - (z.exp() - 1.0) / z).norm() < 1e-10);
        }
        assert_eq!(phi1(c(0.0, 0.0)), c(1.0, 0.0));
    }

    #[test]
    fn diagonal_round_trip() {
        let tol = ToleranceConfig::default();
        let sys = ContinuousStateSpace::new(
            Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -3.0])),
            Matrix::from_row_slice(2, 1, &[1.0, 2.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let t = DiscretizationTriple::from_continuous(&sys, [1.0, 1.0 / 2f64.sqrt(), 1.0 / 3f64.sqrt()]).unwrap();
        let r = reconstruct_ct(&t, 32, &tol).unwrap();
        assert!((r.a - &sys.a).norm() < 1e-10);
        assert!((r.b - &sys.b).norm() < 1e-10);
    }

    #[test]
    fn inconsistent_triple_rejected() {
        let tol = ToleranceConfig::default();
        let mk = |b: f64| {
            ContinuousStateSpace::new(
                Matrix::from_row_slice(2, 2, &[-0.5, 1.0, -1.0, -0.5]),
                Matrix::from_row_slice(2, 1, &[0.0, b]),
                Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
                Matrix::zeros(1, 1),
            )
            .unwrap()
        };
        let h = [1.0, 1.0 / 2f64.sqrt(), 1.0 / 3f64.sqrt()];
        let mut t = DiscretizationTriple::from_continuous(&mk(1.0), h).unwrap();
        t.systems[2] = mk(2.0).zoh_discretize(h[2]).unwrap();
        assert!(matches!(reconstruct_ct(&t, 32, &tol), Err(Error::ValidationFailed { .. })));
    }
}
