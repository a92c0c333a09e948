//! State-space systems and the structural oracles used as ground truth.

use alloc::format;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::marker::PhantomData;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, vstack, Matrix, ToleranceConfig, Vector};

mod bif;
pub mod random;
mod zoh;

pub use bif::{build_from_bif, BifForm, ZeroDynamics};

pub trait TimeDomain: Debug + Clone + Copy + PartialEq + Default {
    const CONTINUOUS: bool;
}

/// Marker for `x(t+1) = A x(t) + B u(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Discrete;

/// Marker for `dx/dt = A x + B u`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Continuous;

impl TimeDomain for Discrete {
    const CONTINUOUS: bool = false;
}
impl TimeDomain for Continuous {
    const CONTINUOUS: bool = true;
}

/// Relative degree of a SISO channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelDeg {
    Finite(usize),
    Infinite,
}

impl RelDeg {
    pub fn finite(self) -> Option<usize> {
        match self {
            RelDeg::Finite(r) => Some(r),
            RelDeg::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace<T: TimeDomain> {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    domain: PhantomData<T>,
}

pub type DiscreteStateSpace = StateSpace<Discrete>;
pub type ContinuousStateSpace = StateSpace<Continuous>;

impl<T: TimeDomain> StateSpace<T> {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n = a.nrows();
        let (m, p) = (d.ncols(), d.nrows());
        let ok = a.ncols() == n
            && b.shape() == (n, m)
            && c.shape() == (p, n)
            && [&a, &b, &c, &d].iter().all(|x| x.iter().all(|v| v.is_finite()));
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            domain: PhantomData,
        })
    }

    /// A memoryless system `y = D u`.
    pub fn static_gain(d: Matrix) -> Self {
        let (p, m) = d.shape();
        Self {
            a: Matrix::zeros(0, 0),
            b: Matrix::zeros(0, m),
            c: Matrix::zeros(p, 0),
            d,
            domain: PhantomData,
        }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m(&self) -> usize {
        self.d.ncols()
    }
    pub fn p(&self) -> usize {
        self.d.nrows()
    }
    pub fn is_continuous(&self) -> bool {
        T::CONTINUOUS
    }

    /// Similarity transform with the new state `z = T x`.
    pub fn transformed(&self, t: &Matrix) -> Result<Self> {
        let ti = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("singular state transform".into()))?;
        Self::new(t * &self.a * &ti, t * &self.b, &self.c * &ti, self.d.clone())
    }

    /// `[C; CA; ...; CA^{k-1}]`.
    pub fn observability(&self, k: usize) -> Matrix {
        let mut rows = Vec::with_capacity(k);
        let mut cur = self.c.clone();
        for _ in 0..k {
            rows.push(cur.clone());
            cur = &cur * &self.a;
        }
        let refs: Vec<&Matrix> = rows.iter().collect();
        if refs.is_empty() {
            Matrix::zeros(0, self.n())
        } else {
            vstack(&refs)
        }
    }

    /// `[B, AB, ..., A^{k-1}B]`.
    pub fn controllability(&self, k: usize) -> Matrix {
        let (n, m) = (self.n(), self.m());
        let mut out = Matrix::zeros(n, k * m);
        let mut cur = self.b.clone();
        for i in 0..k {
            out.view_mut((0, i * m), (n, m)).copy_from(&cur);
            cur = &self.a * &cur;
        }
        out
    }

    pub fn is_observable(&self, tol: &ToleranceConfig) -> bool {
        numerical_rank(&self.observability(self.n()), tol) == self.n()
    }

    pub fn is_controllable(&self, tol: &ToleranceConfig) -> bool {
        numerical_rank(&self.controllability(self.n()), tol) == self.n()
    }

    pub fn is_minimal(&self, tol: &ToleranceConfig) -> bool {
        self.is_observable(tol) && self.is_controllable(tol)
    }

    /// Observability index: smallest `L` with `rank O_L = n`.
    pub fn lag(&self, tol: &ToleranceConfig) -> Result<usize> {
        let n = self.n();
        for l in 0..=n {
            if numerical_rank(&self.observability(l), tol) == n {
                return Ok(l);
            }
        }
        Err(Error::NotObservable)
    }

    /// Markov parameters `D, CB, CAB, ...` (`count` of them).
    pub fn markov(&self, count: usize) -> Vec<Matrix> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.d.clone());
        let mut ab = self.b.clone();
        for _ in 1..count {
            out.push(&self.c * &ab);
            ab = &self.a * &ab;
        }
        out
    }

    /// Scale below which the `(i, j)` entry of `C A^k B` counts as zero.
    fn markov_thresholds(&self, i: usize, count: usize, tol: &ToleranceConfig) -> Vec<f64> {
        let ci = self.c.row(i).norm();
        let bn = self.b.norm();
        let mut out = Vec::with_capacity(count);
        out.push(tol.membership_rtol * self.d.row(i).norm().max(f64::MIN_POSITIVE));
        let mut ak = Matrix::identity(self.n(), self.n());
        for _ in 1..count {
            out.push(tol.membership_rtol * (ci * ak.norm() * bn).max(f64::MIN_POSITIVE));
            ak = &ak * &self.a;
        }
        out
    }

    /// Relative degree of a SISO system from its Markov parameters.
    pub fn oracle_relative_degree(&self, tol: &ToleranceConfig) -> Result<RelDeg> {
        if self.m() != 1 || self.p() != 1 {
            return Err(Error::NotSiso);
        }
        let count = self.n() + 1;
        let h = self.markov(count);
        let thr = self.markov_thresholds(0, count, tol);
        Ok(h.iter()
            .zip(thr)
            .position(|(hk, t)| hk[(0, 0)].abs() > t)
            .map_or(RelDeg::Infinite, RelDeg::Finite))
    }

    /// Per-output relative degrees and the decoupling matrix, if the latter
    /// has full row rank.
    pub fn oracle_vector_relative_degree(
        &self,
        tol: &ToleranceConfig,
    ) -> Option<(Vec<usize>, Matrix)> {
        let (p, m) = (self.p(), self.m());
        let count = self.n() + 1;
        let h = self.markov(count);
        let mut r = Vec::with_capacity(p);
        let mut g = Matrix::zeros(p, m);
        for i in 0..p {
            let thr = self.markov_thresholds(i, count, tol);
            let k = (0..count).find(|&k| h[k].row(i).iter().any(|x| x.abs() > thr[k]))?;
            r.push(k);
            g.row_mut(i).copy_from(&h[k].row(i));
        }
        (numerical_rank(&g, tol) == p).then_some((r, g))
    }
}

impl DiscreteStateSpace {
    /// Runs the recursion from `x0` with input rows `u` (`T x m`).
    /// Returns `y` (`T x p`) and the states (`(T+1) x n`).
    pub fn simulate(&self, x0: &Vector, u: &Matrix) -> Result<(Matrix, Matrix)> {
        let (n, m, p) = (self.n(), self.m(), self.p());
        if x0.len() != n || u.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "x0 of length {} and input with {} columns for n={n}, m={m}",
                x0.len(),
                u.ncols()
            )));
        }
        let steps = u.nrows();
        let mut y = Matrix::zeros(steps, p);
        let mut xs = Matrix::zeros(steps + 1, n);
        let mut x = x0.clone();
        xs.row_mut(0).copy_from(&x.transpose());
        for t in 0..steps {
            let ut = u.row(t).transpose();
            let yt = &self.c * &x + &self.d * &ut;
            y.row_mut(t).copy_from(&yt.transpose());
            x = &self.a * &x + &self.b * &ut;
            xs.row_mut(t + 1).copy_from(&x.transpose());
        }
        Ok((y, xs))
    }

    /// `H(0) = D`, `H(k) = C A^{k-1} B`.
    pub fn impulse_response(&self, count: usize) -> Vec<Matrix> {
        self.markov(count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delay() -> DiscreteStateSpace {
        let one = Matrix::from_element(1, 1, 1.0);
        StateSpace::new(Matrix::zeros(1, 1), one.clone(), one, Matrix::zeros(1, 1)).unwrap()
    }

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn simulate_examples() {
        let s = delay();
        let (y, x) = s.simulate(&Vector::zeros(1), &Matrix::zeros(4, 1)).unwrap();
        assert_eq!(y, Matrix::zeros(4, 1));
        assert_eq!(x.nrows(), 5);
        let (y, _) = s.simulate(&Vector::zeros(1), &col(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(y, col(&[0.0, 1.0, 0.0]));
        let (y, _) = s.simulate(&Vector::zeros(1), &col(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(y, col(&[0.0, 1.0, 2.0]));
        assert!(s.simulate(&Vector::zeros(2), &col(&[1.0])).is_err());
    }

    #[test]
    fn impulse_examples() {
        let s = delay();
        let h: Vec<f64> = s.impulse_response(3).iter().map(|m| m[(0, 0)]).collect();
        assert_eq!(h, [0.0, 1.0, 0.0]);
        let s = StateSpace::<Discrete>::new(
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            col(&[0.0, 1.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let h: Vec<f64> = s.impulse_response(4).iter().map(|m| m[(0, 0)]).collect();
        assert_eq!(h, [0.0, 0.0, 1.0, 0.0]);
        let z = StateSpace::<Discrete>::new(
            Matrix::identity(2, 2),
            Matrix::zeros(2, 1),
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        assert!(z.impulse_response(5).iter().all(|m| m[(0, 0)] == 0.0));
    }

    #[test]
    fn lag_examples() {
        let tol = ToleranceConfig::default();
        let s0 = DiscreteStateSpace::static_gain(Matrix::identity(2, 2));
        assert_eq!(s0.lag(&tol).unwrap(), 0);
        assert_eq!(delay().lag(&tol).unwrap(), 1);
        let unobs = StateSpace::<Discrete>::new(
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Matrix::zeros(1, 2),
        )
        .unwrap();
        assert_eq!(unobs.lag(&tol), Err(Error::NotObservable));
    }

    #[test]
    fn relative_degree_oracle() {
        let tol = ToleranceConfig::default();
        let s = DiscreteStateSpace::static_gain(Matrix::from_element(1, 1, 5.0));
        assert_eq!(s.oracle_relative_degree(&tol).unwrap(), RelDeg::Finite(0));
        assert_eq!(delay().oracle_relative_degree(&tol).unwrap(), RelDeg::Finite(1));
        let orth = StateSpace::<Discrete>::new(
            Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.3]),
            col(&[1.0, 0.0]),
            Matrix::from_row_slice(1, 2, &[0.0, 1.0]),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        assert_eq!(orth.oracle_relative_degree(&tol).unwrap(), RelDeg::Infinite);
        let mimo = DiscreteStateSpace::static_gain(Matrix::identity(2, 2));
        assert_eq!(mimo.oracle_relative_degree(&tol), Err(Error::NotSiso));
    }

    #[test]
    fn vector_relative_degree_oracle() {
        let tol = ToleranceConfig::default();
        // two decoupled unit delays
        let s = StateSpace::<Discrete>::new(
            Matrix::zeros(2, 2),
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::zeros(2, 2),
        )
        .unwrap();
        let (r, g) = s.oracle_vector_relative_degree(&tol).unwrap();
        assert_eq!(r, [1, 1]);
        assert_eq!(g, Matrix::identity(2, 2));
        let tall = StateSpace::<Discrete>::new(
            Matrix::zeros(1, 1),
            Matrix::from_element(1, 1, 1.0),
            col(&[1.0, 2.0]),
            Matrix::zeros(2, 1),
        )
        .unwrap();
        assert!(tall.oracle_vector_relative_degree(&tol).is_none());
    }
}
