use super::{ContinuousStateSpace, DiscreteStateSpace};
use crate::error::{Error, Result};
use crate::linalg::{expm, Matrix};

impl ContinuousStateSpace {
    /// Zero-order-hold discretization with step `h`.
    ///
    /// `B_d` is read off the top-right block of `exp(h [[A, B], [0, 0]])`,
    /// so `A` may be singular.
    pub fn zoh_discretize(&self, h: f64) -> Result<DiscreteStateSpace> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument("sampling time must be positive".into()));
        }
        let (n, m) = (self.n(), self.m());
        let mut aug = Matrix::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.a * h));
        aug.view_mut((0, n), (n, m)).copy_from(&(&self.b * h));
        let e = expm(&aug)?;
        DiscreteStateSpace::new(
            e.view((0, 0), (n, n)).into_owned(),
            e.view((0, n), (n, m)).into_owned(),
            self.c.clone(),
            self.d.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_a_gives_scaled_b() {
        let s = ContinuousStateSpace::new(
            Matrix::zeros(2, 2),
            Matrix::from_row_slice(2, 1, &[1.0, -2.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            Matrix::from_element(1, 1, 3.0),
        )
        .unwrap();
        let d = s.zoh_discretize(0.25).unwrap();
        assert!((d.a.clone() - Matrix::identity(2, 2)).norm() < 1e-15);
        assert!((d.b.clone() - &s.b * 0.25).norm() < 1e-15);
        assert_eq!(d.d, s.d);
        assert!(s.zoh_discretize(0.0).is_err());
    }

    #[test]
    fn rotation_generator() {
        let h = 0.1;
        let s = ContinuousStateSpace::new(
            Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            Matrix::from_row_slice(2, 1, &[0.0, 1.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let d = s.zoh_discretize(h).unwrap();
        let want = Matrix::from_row_slice(2, 2, &[h.cos(), -h.sin(), h.sin(), h.cos()]);
        assert!((d.a - want).norm() < 1e-15);
        // integral of e^{As} (0,1)^T over [0,h]
        let wb = Matrix::from_row_slice(2, 1, &[h.cos() - 1.0, h.sin()]);
        assert!((d.b - wb).norm() < 1e-15);
    }
}
