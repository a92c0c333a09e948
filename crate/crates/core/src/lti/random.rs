//! Seeded random systems for the Monte-Carlo oracle suites.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ContinuousStateSpace, DiscreteStateSpace, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, svd, Matrix, ToleranceConfig};

const ATTEMPTS: usize = 500;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| uniform(rng, -scale, scale))
}

fn condition(m: &Matrix) -> f64 {
    let s = svd(m).s;
    match (s.first(), s.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        _ => f64::INFINITY,
    }
}

/// Random invertible matrix with condition number at most `max_cond`.
pub fn random_transform<R: Rng>(rng: &mut R, n: usize, max_cond: f64) -> Matrix {
    loop {
        let t = Matrix::identity(n, n) + random_matrix(rng, n, n, 0.6);
        if condition(&t) <= max_cond {
            return t;
        }
    }
}

/// Real matrix whose spectrum is `eigs` (conjugate pairs listed once, with
/// positive imaginary part), in a random well-conditioned basis.
pub fn matrix_with_spectrum<R: Rng>(rng: &mut R, eigs: &[Complex64]) -> Matrix {
    let n: usize = eigs.iter().map(|z| if z.im != 0.0 { 2 } else { 1 }).sum();
    let mut a = Matrix::zeros(n, n);
    let mut k = 0;
    for z in eigs {
        if z.im != 0.0 {
            a[(k, k)] = z.re;
            a[(k + 1, k + 1)] = z.re;
            a[(k, k + 1)] = -z.im;
            a[(k + 1, k)] = z.im;
            k += 2;
        } else {
            a[(k, k)] = z.re;
            k += 1;
        }
    }
    if n == 0 {
        return a;
    }
    let t = random_transform(rng, n, 20.0);
    let ti = t.clone().try_inverse().expect("well conditioned");
    t * a * ti
}

/// `d` eigenvalues (pairs counted twice) at least `margin` away from the
/// unit circle, all inside when `stable`, at least one outside otherwise.
pub fn random_zd_spectrum<R: Rng>(rng: &mut R, d: usize, stable: bool, margin: f64) -> Vec<Complex64> {
    let inside = |rng: &mut R| uniform(rng, 0.05, 1.0 - margin);
    let outside = |rng: &mut R| uniform(rng, 1.0 + margin, 1.8);
    let mut out = Vec::new();
    let mut left = d;
    let mut need_unstable = !stable && d > 0;
    while left > 0 {
        let radius = if need_unstable || (!stable && rng.random::<f64>() < 0.4) {
            need_unstable = false;
            outside(rng)
        } else {
            inside(rng)
        };
        if left >= 2 && rng.random::<f64>() < 0.4 {
            let th = uniform(rng, 0.2, PI - 0.2);
            out.push(Complex64::from_polar(radius, th));
            left -= 2;
        } else {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            out.push(Complex64::new(sign * radius, 0.0));
            left -= 1;
        }
    }
    out
}

/// Constraints for [`random_system`].
#[derive(Debug, Clone, Default)]
pub struct SystemConstraints {
    /// Require controllability and observability.
    pub minimal: bool,
    /// Upper bound on the spectral radius of `A`.
    pub max_spectral_radius: Option<f64>,
    /// Prescribed vector relative degree; entries of zero mean direct feedthrough (SISO only).
    pub relative_degree: Option<Vec<usize>>,
    /// Prescribed zero-dynamics matrix `Q` (used with `relative_degree`).
    pub zero_dynamics: Option<Matrix>,
    /// Allow a random nonzero `D` for unstructured draws.
    pub feedthrough: bool,
}

fn accept(sys: &DiscreteStateSpace, c: &SystemConstraints, tol: &ToleranceConfig) -> bool {
    if c.minimal && !sys.is_minimal(tol) {
        return false;
    }
    if let Some(rho) = c.max_spectral_radius {
        if spectral_radius(&sys.a).map_or(true, |x| x > rho) {
            return false;
        }
    }
    true
}

/// Deterministic random system satisfying `constraints`, resampled up to a
/// fixed budget.
pub fn random_system(
    n: usize,
    m: usize,
    p: usize,
    constraints: &SystemConstraints,
    seed: u64,
) -> Result<DiscreteStateSpace> {
    let tol = ToleranceConfig::default();
    let mut rng = rng(seed);
    for _ in 0..ATTEMPTS {
        let sys = match &constraints.relative_degree {
            Some(r) if r.iter().all(|&ri| ri >= 1) => {
                let sr: usize = r.iter().sum();
                if m != p || r.len() != p || sr > n {
                    return Err(Error::InvalidArgument("relative degree incompatible with (n, m, p)".into()));
                }
                let d = n - sr;
                let q = match &constraints.zero_dynamics {
                    Some(q) if q.shape() == (d, d) => q.clone(),
                    Some(_) => return Err(Error::InvalidArgument("zero-dynamics matrix has wrong size".into())),
                    None => {
                        let eigs = random_zd_spectrum(&mut rng, d, true, 0.2);
                        matrix_with_spectrum(&mut rng, &eigs)
                    }
                };
                let pm = random_matrix(&mut rng, d, p, 1.0);
                let alpha = random_matrix(&mut rng, p, n, 0.4);
                let g = random_transform(&mut rng, p, 10.0);
                match StateSpace::from_bif(r, &q, &pm, &alpha, &g) {
                    Ok(s) => s,
                    Err(_) => continue,
                }
            }
            Some(r) => {
                if m != 1 || p != 1 || r.len() != 1 {
                    return Err(Error::InvalidArgument("zero relative degree only for SISO".into()));
                }
                let mut s = dense(&mut rng, n, m, p, constraints.max_spectral_radius);
                s.d = Matrix::from_element(1, 1, uniform(&mut rng, 0.5, 1.5));
                s
            }
            None => {
                let mut s = dense(&mut rng, n, m, p, constraints.max_spectral_radius);
                if constraints.feedthrough {
                    s.d = random_matrix(&mut rng, p, m, 1.0);
                }
                s
            }
        };
        if accept(&sys, constraints, &tol) {
            if let Some(r) = &constraints.relative_degree {
                if r.len() == 1 {
                    if sys.oracle_relative_degree(&tol).ok().and_then(|x| x.finite()) != Some(r[0]) {
                        continue;
                    }
                } else if sys.oracle_vector_relative_degree(&tol).map(|x| x.0) != Some(r.clone()) {
                    continue;
                }
            }
            return Ok(sys);
        }
    }
    Err(Error::InfeasibleConstraints { attempts: ATTEMPTS })
}

fn dense<R: Rng>(rng: &mut R, n: usize, m: usize, p: usize, rho: Option<f64>) -> DiscreteStateSpace {
    let mut a = random_matrix(rng, n, n, 1.0);
    if let Some(rho) = rho {
        let cur = spectral_radius(&a).unwrap_or(0.0);
        if cur > 0.0 {
            a *= uniform(rng, 0.3, 1.0) * rho / cur;
        }
    }
    StateSpace::new(
        a,
        random_matrix(rng, n, m, 1.0),
        random_matrix(rng, p, n, 1.0),
        Matrix::zeros(p, m),
    )
    .expect("consistent shapes")
}

/// Random diagonalizable continuous system together with its eigenvalues
/// (pairs listed once). Eigenvalues are separated by at least `5e-2`, and
/// so are their images `exp(h lambda)` for every `h` in `rates`.
pub fn random_ct_system(
    n: usize,
    m: usize,
    p: usize,
    max_imag: f64,
    rates: &[f64],
    seed: u64,
) -> Result<(ContinuousStateSpace, Vec<Complex64>)> {
    let tol = ToleranceConfig::default();
    let mut rng = rng(seed);
    'outer: for _ in 0..ATTEMPTS {
        let mut eigs = Vec::new();
        let mut left = n;
        while left > 0 {
            let re = uniform(&mut rng, -1.5, -0.05);
            if left >= 2 && rng.random::<f64>() < 0.6 {
                eigs.push(Complex64::new(re, uniform(&mut rng, 0.1, max_imag)));
                left -= 2;
            } else {
                eigs.push(Complex64::new(re, 0.0));
                left -= 1;
            }
        }
        let mut all = Vec::new();
        for z in &eigs {
            all.push(*z);
            if z.im != 0.0 {
                all.push(z.conj());
            }
        }
        for i in 0..all.len() {
            for j in 0..i {
                if (all[i] - all[j]).norm() < 5e-2 {
                    continue 'outer;
                }
                for &h in rates {
                    if ((all[i] * h).exp() - (all[j] * h).exp()).norm() < 5e-2 {
                        continue 'outer;
                    }
                }
            }
        }
        let a = matrix_with_spectrum(&mut rng, &eigs);
        let sys = StateSpace::new(
            a,
            random_matrix(&mut rng, n, m, 1.0),
            random_matrix(&mut rng, p, n, 1.0),
            Matrix::zeros(p, m),
        )?;
        if !sys.is_minimal(&tol) {
            continue;
        }
        let mut ok = true;
        for &h in rates {
            ok &= sys.zoh_discretize(h).map_or(false, |d| d.is_minimal(&tol));
        }
        if ok {
            return Ok((sys, eigs));
        }
    }
    Err(Error::InfeasibleConstraints { attempts: ATTEMPTS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::RelDeg;

    #[test]
    fn prescribed_siso_example() {
        let tol = ToleranceConfig::default();
        let c = SystemConstraints {
            minimal: true,
            relative_degree: Some(alloc::vec![1]),
            zero_dynamics: Some(Matrix::from_element(1, 1, 0.5)),
            ..Default::default()
        };
        let s = random_system(2, 1, 1, &c, 7).unwrap();
        assert_eq!(s.oracle_relative_degree(&tol).unwrap(), RelDeg::Finite(1));
        assert_eq!(s, random_system(2, 1, 1, &c, 7).unwrap());
    }

    #[test]
    fn minimal_draw() {
        let tol = ToleranceConfig::default();
        let c = SystemConstraints {
            minimal: true,
            ..Default::default()
        };
        let s = random_system(3, 1, 1, &c, 1).unwrap();
        assert!(s.is_controllable(&tol) && s.is_observable(&tol));
    }

    #[test]
    fn spectrum_is_prescribed() {
        let mut r = rng(3);
        let eigs = [Complex64::new(0.5, 0.3), Complex64::new(-0.2, 0.0)];
        let a = matrix_with_spectrum(&mut r, &eigs);
        let ev = crate::linalg::eigenvalues(&a).unwrap();
        for z in [eigs[0], eigs[0].conj(), eigs[1]] {
            assert!(ev.iter().any(|w| (w - z).norm() < 1e-10));
        }
    }
}
