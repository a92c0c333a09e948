//! Trajectory data, (mosaic) Hankel matrices and generator subspaces.
//!
//! Block row `t` of a depth-`L` Hankel matrix holds sample `t` of every
//! window, with the channels of one sample stored contiguously. Channel and
//! output indices are zero-based throughout the library.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{compress_columns, hstack, kernel_basis, numerical_rank, select_rows, vstack, Matrix, ToleranceConfig};

/// One input/output experiment; row `t` of `u` and `y` is sample `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub u: Matrix,
    pub y: Matrix,
}

impl Trajectory {
    pub fn new(u: Matrix, y: Matrix) -> Result<Self> {
        if u.nrows() != y.nrows() || u.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "input has {} samples, output has {}",
                u.nrows(),
                y.nrows()
            )));
        }
        if u.iter().chain(y.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(Self { u, y })
    }

    pub fn len(&self) -> usize {
        self.u.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    m: usize,
    p: usize,
    sequences: Vec<Trajectory>,
    sampling_time: Option<f64>,
}

impl DataSet {
    pub fn new(m: usize, p: usize, sequences: Vec<Trajectory>, sampling_time: Option<f64>) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::InvalidArgument("a data set needs at least one sequence".into()));
        }
        for (k, s) in sequences.iter().enumerate() {
            if s.u.ncols() != m || s.y.ncols() != p {
                return Err(Error::DimensionMismatch(format!(
                    "sequence {k} has m={}, p={}; expected m={m}, p={p}",
                    s.u.ncols(),
                    s.y.ncols()
                )));
            }
        }
        if let Some(h) = sampling_time {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument("sampling time must be positive".into()));
            }
        }
        Ok(Self {
            m,
            p,
            sequences,
            sampling_time,
        })
    }

    pub fn single(t: Trajectory) -> Self {
        let (m, p) = (t.u.ncols(), t.y.ncols());
        Self {
            m,
            p,
            sequences: alloc::vec![t],
            sampling_time: None,
        }
    }

    pub fn with_sampling_time(mut self, h: Option<f64>) -> Self {
        self.sampling_time = h;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn sequences(&self) -> &[Trajectory] {
        &self.sequences
    }
    pub fn sampling_time(&self) -> Option<f64> {
        self.sampling_time
    }

    /// Length of the shortest sequence.
    pub fn min_len(&self) -> usize {
        self.sequences.iter().map(Trajectory::len).min().unwrap_or(0)
    }

    /// All samples multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.sequences {
            s.u *= c;
            s.y *= c;
        }
        out
    }

    /// Every sequence cut to its first `len` samples.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        let seqs = self
            .sequences
            .iter()
            .map(|s| {
                let k = len.min(s.len());
                Trajectory::new(s.u.rows(0, k).into_owned(), s.y.rows(0, k).into_owned())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.m, self.p, seqs, self.sampling_time)
    }
}

/// Which signal a mosaic Hankel matrix is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Input,
    Output,
    Stacked,
}

/// Depth-`depth` block Hankel matrix of the samples in the rows of `w`.
pub fn hankel(w: &Matrix, depth: usize) -> Result<Matrix> {
    let (len, d) = w.shape();
    if depth == 0 || depth > len {
        return Err(Error::WindowTooLong { window: depth, len });
    }
    let cols = len - depth + 1;
    Ok(Matrix::from_fn(depth * d, cols, |r, c| w[(c + r / d, r % d)]))
}

pub fn mosaic_hankel(ds: &DataSet, depth: usize, which: Signal) -> Result<Matrix> {
    let mut parts = Vec::with_capacity(ds.sequences.len());
    for s in &ds.sequences {
        let h = match which {
            Signal::Input => hankel(&s.u, depth)?,
            Signal::Output => hankel(&s.y, depth)?,
            Signal::Stacked => vstack(&[&hankel(&s.u, depth)?, &hankel(&s.y, depth)?]),
        };
        parts.push(h);
    }
    let refs: Vec<&Matrix> = parts.iter().collect();
    Ok(hstack(&refs))
}

/// `rank H_order(u) = order * m` over the mosaic input Hankel.
pub fn is_persistently_exciting(ds: &DataSet, order: usize, tol: &ToleranceConfig) -> Result<bool> {
    let h = mosaic_hankel(ds, order, Signal::Input)?;
    Ok(numerical_rank(&h, tol) == order * ds.m)
}

/// Columns span a set of trajectories on a window of `window` samples;
/// all input rows are stacked above all output rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSubspace {
    pub generators: Matrix,
    pub window: usize,
    pub m: usize,
    pub p: usize,
}

impl GeneratorSubspace {
    pub fn new(generators: Matrix, window: usize, m: usize, p: usize) -> Result<Self> {
        if generators.nrows() != window * (m + p) {
            return Err(Error::DimensionMismatch(format!(
                "{} generator rows for window {window}, m={m}, p={p}",
                generators.nrows()
            )));
        }
        Ok(Self {
            generators,
            window,
            m,
            p,
        })
    }

    /// Stacked mosaic Hankel of depth `window`.
    pub fn from_data(ds: &DataSet, window: usize) -> Result<Self> {
        Self::new(mosaic_hankel(ds, window, Signal::Stacked)?, window, ds.m, ds.p)
    }

    pub fn u_index(&self, t: usize, ch: usize) -> usize {
        t * self.m + ch
    }

    pub fn y_index(&self, t: usize, ch: usize) -> usize {
        self.window * self.m + t * self.p + ch
    }

    pub fn u_part(&self) -> Matrix {
        self.generators.rows(0, self.window * self.m).into_owned()
    }

    pub fn y_part(&self) -> Matrix {
        self.generators.rows(self.window * self.m, self.window * self.p).into_owned()
    }

    pub fn row(&self, idx: usize) -> Matrix {
        self.generators.rows(idx, 1).into_owned()
    }

    /// The first `w` samples of every generator.
    pub fn leading_window(&self, w: usize) -> Result<Self> {
        if w > self.window {
            return Err(Error::WindowTooLong {
                window: w,
                len: self.window,
            });
        }
        let mut rows: Vec<usize> = (0..w * self.m).collect();
        rows.extend((0..w * self.p).map(|r| self.window * self.m + r));
        Self::new(select_rows(&self.generators, &rows), w, self.m, self.p)
    }

    /// Same column space with at most `rank` columns.
    pub fn compressed(&self, tol: &ToleranceConfig) -> Self {
        Self {
            generators: compress_columns(&self.generators, tol),
            ..self.clone()
        }
    }

    /// Trajectories whose inputs other than `j` vanish, with input `j` and
    /// every output kept.
    pub fn restrict_to_input(&self, j: usize, tol: &ToleranceConfig) -> Result<Self> {
        if j >= self.m {
            return Err(Error::IndexOutOfRange(format!("input {j} of {}", self.m)));
        }
        let others: Vec<usize> = (0..self.window)
            .flat_map(|t| (0..self.m).filter(move |&k| k != j).map(move |k| (t, k)))
            .map(|(t, k)| self.u_index(t, k))
            .collect();
        let k = kernel_basis(&select_rows(&self.generators, &others), tol);
        let g = &self.generators * k;
        let mut rows: Vec<usize> = (0..self.window).map(|t| self.u_index(t, j)).collect();
        rows.extend(self.window * self.m..self.generators.nrows());
        Self::new(select_rows(&g, &rows), self.window, 1, self.p)
    }

    /// Keeps only output channel `i`.
    pub fn select_output(&self, i: usize) -> Result<Self> {
        if i >= self.p {
            return Err(Error::IndexOutOfRange(format!("output {i} of {}", self.p)));
        }
        let mut rows: Vec<usize> = (0..self.window * self.m).collect();
        rows.extend((0..self.window).map(|t| self.y_index(t, i)));
        Self::new(select_rows(&self.generators, &rows), self.window, self.m, 1)
    }
}

/// Generators of the SISO behaviour from input `j` to output `i` obtained
/// by constraining all other inputs to zero.
pub fn induced_siso_generators(
    ds: &DataSet,
    window: usize,
    i: usize,
    j: usize,
    tol: &ToleranceConfig,
) -> Result<GeneratorSubspace> {
    if i >= ds.p || j >= ds.m {
        return Err(Error::IndexOutOfRange(format!(
            "pair ({i}, {j}) for p={}, m={}",
            ds.p, ds.m
        )));
    }
    GeneratorSubspace::from_data(ds, window)?
        .restrict_to_input(j, tol)?
        .select_output(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn hankel_layout() {
        let h = hankel(&col(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(h, Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0]));
        let h = hankel(&col(&[1.0, 2.0, 3.0]), 3).unwrap();
        assert_eq!(h, col(&[1.0, 2.0, 3.0]));
        let w = Matrix::from_row_slice(3, 2, &[10.0, 11.0, 20.0, 21.0, 30.0, 31.0]);
        let h = hankel(&w, 2).unwrap();
        assert_eq!(
            h,
            Matrix::from_row_slice(4, 2, &[10.0, 20.0, 11.0, 21.0, 20.0, 30.0, 21.0, 31.0])
        );
        assert_eq!(hankel(&col(&[1.0]), 2), Err(Error::WindowTooLong { window: 2, len: 1 }));
    }

    #[test]
    fn mosaic_shapes() {
        let t = |v: &[f64]| Trajectory::new(col(v), col(v)).unwrap();
        let ds = DataSet::new(1, 1, vec![t(&[1.0, 2.0, 3.0]), t(&[4.0, 5.0, 6.0])], None).unwrap();
        assert_eq!(mosaic_hankel(&ds, 2, Signal::Input).unwrap().shape(), (2, 4));
        let one = DataSet::single(t(&[1.0, 2.0, 3.0]));
        assert_eq!(
            mosaic_hankel(&one, 2, Signal::Input).unwrap(),
            hankel(&col(&[1.0, 2.0, 3.0]), 2).unwrap()
        );
    }

    #[test]
    fn pe_examples() {
        let tol = ToleranceConfig::default();
        let zero = DataSet::single(Trajectory::new(Matrix::zeros(6, 1), Matrix::zeros(6, 1)).unwrap());
        for l in 1..=3 {
            assert!(!is_persistently_exciting(&zero, l, &tol).unwrap());
        }
        let imp = DataSet::single(
            Trajectory::new(col(&[0.0, 0.0, 1.0, 0.0, 0.0]), Matrix::zeros(5, 1)).unwrap(),
        );
        assert!(is_persistently_exciting(&imp, 2, &tol).unwrap());
    }

    #[test]
    fn induced_generators_single_input() {
        let tol = ToleranceConfig::default();
        let ds = DataSet::single(
            Trajectory::new(col(&[1.0, -1.0, 2.0, 0.5]), col(&[0.0, 1.0, -1.0, 2.0])).unwrap(),
        );
        let g = induced_siso_generators(&ds, 2, 0, 0, &tol).unwrap();
        assert_eq!(g.generators.shape().0, 4);
        let full = GeneratorSubspace::from_data(&ds, 2).unwrap();
        assert_eq!(
            numerical_rank(&hstack(&[&g.generators, &full.generators]), &tol),
            numerical_rank(&full.generators, &tol)
        );
        assert!(induced_siso_generators(&ds, 2, 1, 0, &tol).is_err());
    }
}
