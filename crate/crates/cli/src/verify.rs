//! Monte-Carlo suites comparing the data-driven procedures with oracles
//! computed from the generating model. Trials run on scoped threads and
//! are reduced in seed order, so results do not depend on scheduling.

use std::thread;

use ddsys_core::ct::{reconstruct_from_data, DEFAULT_K_MAX};
use ddsys_core::hankel::{is_persistently_exciting, DataSet};
use ddsys_core::linalg::{eigenvalues, lstsq, vstack, Matrix, Vector};
use ddsys_core::lti::random::{
    matrix_with_spectrum, random_ct_system, random_system, random_zd_spectrum, rng, uniform,
    SystemConstraints,
};
use ddsys_core::lti::{ContinuousStateSpace, DiscreteStateSpace};
use ddsys_core::reldeg::{reldeg_informativity_data, reldeg_pe, reldeg_sharp, RelDegVerdict};
use ddsys_core::signal::{mosaic_dataset, pe_binary_input, simulate_trajectory};
use ddsys_core::zerodyn::{algorithm2, qtilde, ZdSign};
use ddsys_core::{Error, Stability, ToleranceConfig};
use num_complex::Complex64;

use crate::report::SuiteCount;

/// Counts plus a message for every failed trial.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub count: SuiteCount,
    pub failures: Vec<String>,
}

/// Result of one trial: on agreement, the number of contradicting and of
/// checked informative verdicts on degraded data.
type Trial = Result<(usize, usize), String>;

fn par_trials<F>(seeds: Vec<u64>, f: F) -> Vec<Trial>
where
    F: Fn(u64) -> Trial + Sync,
{
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(seeds.len().max(1));
    let chunk = seeds.len().div_ceil(workers.max(1)).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(|&k| f(k)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("trial panicked"))
            .collect()
    })
}

fn summarize(name: &str, results: Vec<Trial>, seed0: u64) -> SuiteReport {
    let mut count = SuiteCount {
        suite: name.into(),
        passed: 0,
        total: results.len(),
        unsound: 0,
        degraded_checked: 0,
    };
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok((u, checked)) => {
                count.passed += 1;
                count.unsound += u;
                count.degraded_checked += checked;
                if u > 0 {
                    failures.push(format!("seed {}: {u} unsound verdicts", seed0 + k as u64));
                }
            }
            Err(e) => failures.push(format!("seed {}: {e}", seed0 + k as u64)),
        }
    }
    SuiteReport { count, failures }
}

fn random_x0(n: usize, seed: u64) -> Vector {
    let mut g = rng(seed ^ 0x5eed);
    Vector::from_fn(n, |_, _| uniform(&mut g, -1.0, 1.0))
}

/// Single experiment with a seeded +-1 input, persistently exciting of `order`.
pub fn binary_pe_dataset(
    sys: &DiscreteStateSpace,
    len: usize,
    order: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<DataSet, Error> {
    let u = pe_binary_input(sys.m(), len, order, seed, tol)?;
    Ok(DataSet::single(simulate_trajectory(
        sys,
        &random_x0(sys.n(), seed),
        &u,
    )?))
}

/// Data sets that violate the hypotheses of the informativity test in
/// different ways: truncations, sparse, constant and zero inputs.
fn degraded(sys: &DiscreteStateSpace, ds: &DataSet, lag: usize, seed: u64) -> Vec<DataSet> {
    let full = ds.min_len();
    let mut out: Vec<DataSet> = [lag + 2, 2 * lag + 3, full / 4, full / 2]
        .iter()
        .filter(|&&l| l > lag && l < full)
        .filter_map(|&l| ds.truncated(l).ok())
        .collect();
    let len = full.min(40);
    let x0 = random_x0(sys.n(), seed.wrapping_add(1));
    let inputs = [
        Matrix::from_fn(len, sys.m(), |t, _| if t % 7 == 3 { 1.0 } else { 0.0 }),
        Matrix::from_element(len, sys.m(), 1.0),
        Matrix::zeros(len, sys.m()),
    ];
    for u in inputs {
        if let Ok(t) = simulate_trajectory(sys, &x0, &u) {
            out.push(DataSet::single(t));
        }
    }
    out
}

fn reldeg_trial(seed: u64, tol: &ToleranceConfig) -> Trial {
    let n = 1 + (seed % 5) as usize;
    let r = (seed / 5) as usize % (n + 1);
    let c = SystemConstraints {
        minimal: true,
        max_spectral_radius: Some(0.95),
        relative_degree: Some(vec![r]),
        ..Default::default()
    };
    let sys = random_system(n, 1, 1, &c, seed).map_err(|e| e.to_string())?;
    let oracle = sys.oracle_relative_degree(tol).map_err(|e| e.to_string())?;
    let lag = sys.lag(tol).map_err(|e| e.to_string())?;
    let window = lag + n + 1;
    let order = window + n;
    let ds =
        binary_pe_dataset(&sys, 6 * order + 20, order, seed, tol).map_err(|e| e.to_string())?;
    let pe = reldeg_pe(&ds, lag, n, window, tol).map_err(|e| e.to_string())?;
    let sharp = reldeg_sharp(&ds, lag, window, tol).map_err(|e| e.to_string())?;
    let inf = reldeg_informativity_data(&ds, lag, tol).map_err(|e| e.to_string())?;
    let want = oracle.finite();
    if pe != oracle || sharp != want || inf.r() != want {
        return Err(format!(
            "oracle {oracle:?}, pe {pe:?}, sharp {sharp:?}, informativity {inf:?}"
        ));
    }
    let (mut unsound, mut checked) = (0, 0);
    for d in degraded(&sys, &ds, lag, seed) {
        if let Ok(RelDegVerdict::Informative { r, .. }) = reldeg_informativity_data(&d, lag, tol) {
            checked += 1;
            if Some(r) != want {
                unsound += 1;
            }
        }
    }
    Ok((unsound, checked))
}

/// SISO relative degree from persistently exciting +-1 data, `trials`
/// minimal systems of order at most 5.
pub fn reldeg_suite(trials: usize, seed0: u64, tol: &ToleranceConfig) -> SuiteReport {
    let seeds = (0..trials as u64).map(|k| seed0 + k).collect();
    summarize("reldeg", par_trials(seeds, |s| reldeg_trial(s, tol)), seed0)
}

/// A square system with prescribed vector relative degree and zero dynamics.
pub struct ZdCase {
    pub sys: DiscreteStateSpace,
    pub r: Vec<usize>,
    pub q: Matrix,
    pub stable: bool,
}

/// Draws `n <= 6`, `d <= 3`, with the zero-dynamics spectrum at least
/// `0.05` away from the unit circle.
pub fn zd_case(seed: u64) -> Result<ZdCase, Error> {
    let mut g = rng(seed);
    let m = 1 + seed as usize % 2;
    let d = (seed as usize / 2) % 4;
    let r: Vec<usize> = (0..m)
        .map(|i| 1 + (seed as usize / 8 + i) % ((6 - d) / m).max(1))
        .collect();
    let stable = d == 0 || seed % 3 != 0;
    let spec = random_zd_spectrum(&mut g, d, stable, 0.05);
    let q = matrix_with_spectrum(&mut g, &spec);
    let c = SystemConstraints {
        minimal: true,
        relative_degree: Some(r.clone()),
        zero_dynamics: Some(q.clone()),
        ..Default::default()
    };
    let sys = random_system(d + r.iter().sum::<usize>(), m, m, &c, seed)?;
    Ok(ZdCase { sys, r, q, stable })
}

/// True when `a` and `b` agree as multisets up to `tol`.
pub fn same_multiset(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        let hit = (0..b.len())
            .filter(|&i| !used[i])
            .min_by(|&i, &j| (b[i] - x).norm().total_cmp(&(b[j] - x).norm()));
        match hit {
            Some(i) if (b[i] - x).norm() < tol => {
                used[i] = true;
                true
            }
            _ => false,
        }
    })
}

fn zerodyn_trial(seed: u64, tol: &ToleranceConfig) -> Trial {
    let ZdCase { sys, r, q, stable } = zd_case(seed).map_err(|e| e.to_string())?;
    let n = sys.n();
    let lag = sys.lag(tol).map_err(|e| e.to_string())?;
    let window = lag + r.iter().max().unwrap() + 1;
    let order = window + n;
    // many short experiments keep unstable responses bounded
    let ds = mosaic_dataset(&sys, 4 * order * sys.m() + 20, order + 6, seed)
        .map_err(|e| e.to_string())?;
    if !is_persistently_exciting(&ds, order, tol).map_err(|e| e.to_string())? {
        return Err("data not persistently exciting".into());
    }
    let (qt, _) = qtilde(&ds, lag, tol).map_err(|e| e.to_string())?;
    let got = eigenvalues(&qt).map_err(|e| e.to_string())?;
    let want = eigenvalues(&q).map_err(|e| e.to_string())?;
    if !same_multiset(&got, &want, 1e-6) {
        return Err(format!("spectrum {got:?} differs from {want:?}"));
    }
    let v = algorithm2(&ds, lag, n, r.iter().sum(), tol).map_err(|e| e.to_string())?;
    if !v.conditions.mcmillan_ok {
        return Err("McMillan-degree condition failed on persistently exciting data".into());
    }
    let expect = if stable {
        ZdSign::Stable
    } else {
        ZdSign::Unstable
    };
    if v.s != expect {
        return Err(format!("sign {:?}, expected {expect:?}", v.s));
    }
    let oracle = sys
        .oracle_zero_dynamics_stable(tol)
        .map_err(|e| e.to_string())?;
    if (oracle == Stability::Stable) != stable {
        return Err("oracle disagrees with the prescribed spectrum".into());
    }
    Ok((0, 0))
}

/// Zero-dynamics spectra and stability signs from persistently exciting data.
pub fn zerodyn_suite(trials: usize, seed0: u64, tol: &ToleranceConfig) -> SuiteReport {
    let seeds = (0..trials as u64).map(|k| seed0 + k).collect();
    summarize(
        "zerodyn",
        par_trials(seeds, |s| zerodyn_trial(s, tol)),
        seed0,
    )
}

/// Sampling times with reciprocals `1, sqrt 2, sqrt 3`.
pub fn ct_rates() -> [f64; 3] {
    [1.0, 1.0 / 2f64.sqrt(), 1.0 / 3f64.sqrt()]
}

/// Persistently exciting data of `sys` sampled with step `h`, and its lag.
pub fn rate_data(
    sys: &ContinuousStateSpace,
    h: f64,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<(DataSet, usize), Error> {
    let d = sys.zoh_discretize(h)?;
    let lag = d.lag(tol)?;
    let order = lag + 3 * d.n() + 2;
    let ds = binary_pe_dataset(&d, 6 * order * d.m() + 40, order, seed, tol)?;
    Ok((ds.with_sampling_time(Some(h)), lag))
}

/// Similarity `T` with `rec = (T^-1 A T, T^-1 B, C T)`, fitted from the
/// `A` and `C` relations only.
pub fn align(
    truth: &ContinuousStateSpace,
    rec: &ContinuousStateSpace,
    tol: &ToleranceConfig,
) -> Matrix {
    let n = truth.n();
    let eye = Matrix::identity(n, n);
    let s = truth.a.norm().max(1.0);
    let top = (eye.kronecker(&truth.a) - rec.a.transpose().kronecker(&eye)) / s;
    let bottom = eye.kronecker(&truth.c);
    let lhs = vstack(&[&top, &bottom]);
    let rhs = vstack(&[
        &Matrix::zeros(n * n, 1),
        &Matrix::from_column_slice(rec.c.len(), 1, rec.c.as_slice()),
    ]);
    let t = lstsq(&lhs, &rhs, tol);
    Matrix::from_column_slice(n, n, t.as_slice())
}

/// Relative Frobenius errors of `A` and `B` after aligning the bases.
pub fn aligned_errors(
    truth: &ContinuousStateSpace,
    rec: &ContinuousStateSpace,
    tol: &ToleranceConfig,
) -> (f64, f64) {
    if truth.n() == 0 {
        return (0.0, 0.0);
    }
    let t = align(truth, rec, tol);
    let Some(ti) = t.clone().try_inverse() else {
        return (f64::INFINITY, f64::INFINITY);
    };
    let a = &t * &rec.a * ti;
    let b = &t * &rec.b;
    (
        (a - &truth.a).norm() / truth.a.norm(),
        (b - &truth.b).norm() / truth.b.norm(),
    )
}

fn ct_system(seed: u64) -> Result<ContinuousStateSpace, Error> {
    let n = 1 + (seed % 6) as usize;
    let m = 1 + (seed / 6 % 2) as usize;
    let p = 1 + (seed / 12 % 2) as usize;
    Ok(random_ct_system(n, m, p, 20.0, &ct_rates(), seed)?.0)
}

fn ct_trial(seed: u64, tol: &ToleranceConfig) -> Trial {
    let sys = ct_system(seed).map_err(|e| e.to_string())?;
    let h = ct_rates();
    let mut parts = Vec::with_capacity(3);
    for (i, &hi) in h.iter().enumerate() {
        parts.push(rate_data(&sys, hi, seed * 3 + i as u64, tol).map_err(|e| e.to_string())?);
    }
    let rec = reconstruct_from_data(
        [&parts[0].0, &parts[1].0, &parts[2].0],
        [parts[0].1, parts[1].1, parts[2].1],
        [sys.n(); 3],
        DEFAULT_K_MAX,
        tol,
    )
    .map_err(|e| e.to_string())?;
    let (ea, eb) = aligned_errors(&sys, &rec, tol);
    if !(ea < 1e-6 && eb < 1e-6) {
        return Err(format!("relative errors A {ea:e}, B {eb:e}"));
    }
    Ok((0, 0))
}

/// Continuous reconstruction from three sampled data sets, `n <= 6`,
/// `|Im lambda| <= 20`.
pub fn ct_suite(trials: usize, seed0: u64, tol: &ToleranceConfig) -> SuiteReport {
    let seeds = (0..trials as u64).map(|k| seed0 + k).collect();
    summarize("ct", par_trials(seeds, |s| ct_trial(s, tol)), seed0)
}

fn mismatch_trial(seed: u64, tol: &ToleranceConfig) -> Trial {
    let sys = ct_system(seed).map_err(|e| e.to_string())?;
    // same shapes, so the mismatch is only visible in the dynamics
    let other = random_ct_system(sys.n(), sys.m(), sys.p(), 20.0, &ct_rates(), seed + 1000)
        .map_err(|e| e.to_string())?
        .0;
    let h = ct_rates();
    let odd = (seed % 3) as usize;
    let mut parts = Vec::with_capacity(3);
    for (i, &hi) in h.iter().enumerate() {
        let s = if i == odd { &other } else { &sys };
        parts.push(rate_data(s, hi, seed * 3 + i as u64, tol).map_err(|e| e.to_string())?);
    }
    match reconstruct_from_data(
        [&parts[0].0, &parts[1].0, &parts[2].0],
        [parts[0].1, parts[1].1, parts[2].1],
        [sys.n(); 3],
        DEFAULT_K_MAX,
        tol,
    ) {
        Err(Error::MarkovMismatch { .. }) => Ok((0, 0)),
        other => Err(format!("expected MarkovMismatch, got {other:?}")),
    }
}

/// Triples mixing data of two systems must be rejected.
pub fn ct_mismatch_suite(trials: usize, seed0: u64, tol: &ToleranceConfig) -> SuiteReport {
    let seeds = (0..trials as u64).map(|k| seed0 + k).collect();
    summarize(
        "ct-mixed",
        par_trials(seeds, |s| mismatch_trial(s, tol)),
        seed0,
    )
}
