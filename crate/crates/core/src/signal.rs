//! Input signals and data generation.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hankel::{is_persistently_exciting, DataSet, Trajectory};
use crate::linalg::{Matrix, ToleranceConfig, Vector};
use crate::lti::random::{rng, uniform};
use crate::lti::DiscreteStateSpace;

const PE_ATTEMPTS: usize = 100;

/// Random binary (+-1) sequence, one column per channel.
pub fn prbs(m: usize, len: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    Matrix::from_fn(len, m, |_, _| if r.random::<bool>() { 1.0 } else { -1.0 })
}

/// Uniform noise in `[-1, 1]`.
pub fn uniform_input(m: usize, len: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    Matrix::from_fn(len, m, |_, _| uniform(&mut r, -1.0, 1.0))
}

/// Seeded input that is persistently exciting of `order`.
pub fn pe_input(m: usize, len: usize, order: usize, seed: u64, tol: &ToleranceConfig) -> Result<Matrix> {
    if order == 0 || len + 1 < order * (m + 1) {
        return Err(Error::DataTooShort(alloc::format!(
            "{len} samples cannot be persistently exciting of order {order} with {m} inputs"
        )));
    }
    for k in 0..PE_ATTEMPTS as u64 {
        let u = uniform_input(m, len, seed.wrapping_add(k.wrapping_mul(0x9e37_79b9)));
        let ds = DataSet::single(Trajectory::new(u.clone(), Matrix::zeros(len, 0))?);
        if is_persistently_exciting(&ds, order, tol)? {
            return Ok(u);
        }
    }
    Err(Error::InfeasibleConstraints { attempts: PE_ATTEMPTS })
}

/// Seeded +-1 input that is persistently exciting of `order`; resampled
/// with a derived seed until the check passes.
pub fn pe_binary_input(m: usize, len: usize, order: usize, seed: u64, tol: &ToleranceConfig) -> Result<Matrix> {
    if order == 0 || len + 1 < order * (m + 1) {
        return Err(Error::DataTooShort(alloc::format!(
            "{len} samples cannot be persistently exciting of order {order} with {m} inputs"
        )));
    }
    for k in 0..PE_ATTEMPTS as u64 {
        let u = prbs(m, len, seed.wrapping_add(k.wrapping_mul(0x9e37_79b9)));
        let ds = DataSet::single(Trajectory::new(u.clone(), Matrix::zeros(len, 0))?);
        if is_persistently_exciting(&ds, order, tol)? {
            return Ok(u);
        }
    }
    Err(Error::InfeasibleConstraints { attempts: PE_ATTEMPTS })
}

/// Unit pulse on channel `channel` at sample `at`.
pub fn impulse_input(m: usize, len: usize, channel: usize, at: usize) -> Result<Matrix> {
    if channel >= m || at >= len {
        return Err(Error::IndexOutOfRange(alloc::format!(
            "pulse on channel {channel} at {at} for m={m}, len={len}"
        )));
    }
    let mut u = Matrix::zeros(len, m);
    u[(at, channel)] = 1.0;
    Ok(u)
}

/// Simulates `sys` from `x0` under `u` and returns the trajectory.
pub fn simulate_trajectory(sys: &DiscreteStateSpace, x0: &Vector, u: &Matrix) -> Result<Trajectory> {
    let (y, _) = sys.simulate(x0, u)?;
    Trajectory::new(u.clone(), y)
}

/// Single experiment with a persistently exciting input and random `x0`.
pub fn pe_dataset(sys: &DiscreteStateSpace, len: usize, order: usize, seed: u64, tol: &ToleranceConfig) -> Result<DataSet> {
    let u = pe_input(sys.m(), len, order, seed, tol)?;
    let mut r = rng(seed ^ 0x5eed);
    let x0 = Vector::from_fn(sys.n(), |_, _| uniform(&mut r, -1.0, 1.0));
    Ok(DataSet::single(simulate_trajectory(sys, &x0, &u)?))
}

/// `count` short experiments with independent random inputs and initial
/// states. Keeps every sequence bounded even for unstable systems.
pub fn mosaic_dataset(sys: &DiscreteStateSpace, count: usize, len: usize, seed: u64) -> Result<DataSet> {
    let mut r = rng(seed);
    let mut seqs = Vec::with_capacity(count);
    for _ in 0..count {
        let u = Matrix::from_fn(len, sys.m(), |_, _| uniform(&mut r, -1.0, 1.0));
        let x0 = Vector::from_fn(sys.n(), |_, _| uniform(&mut r, -1.0, 1.0));
        seqs.push(simulate_trajectory(sys, &x0, &u)?);
    }
    DataSet::new(sys.m(), sys.p(), seqs, None)
}
