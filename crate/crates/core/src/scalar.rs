use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Real or complex field element used by the generic kernels (interpolation,
/// the collocation solver, small dense solves).
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Mul<f64, Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn to_c64(self) -> Complex64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn to_c64(self) -> Complex64 {
        self
    }
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major `n × n`. Returns `None` when a pivot vanishes.
pub(crate) fn solve_dense<T: Scalar>(a: &mut [T], b: &mut [T], n: usize) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].modulus();
        for row in col + 1..n {
            let m = a[row * n + col].modulus();
            if m > best {
                best = m;
                piv = row;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let inv = T::from_f64(1.0) / a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            if factor.modulus() == 0.0 {
                continue;
            }
            for k in col + 1..n {
                let v = a[col * n + k];
                a[row * n + k] -= factor * v;
            }
            let bv = b[col];
            b[row] -= factor * bv;
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_recovers_known_solution() {
        let mut a = vec![
            Complex64::new(2.0, 1.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(4.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let x = [Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.5), Complex64::new(0.0, 1.0)];
        let mut b: Vec<Complex64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x[j]).sum())
            .collect();
        solve_dense(&mut a, &mut b, 3).unwrap();
        for (got, want) in b.iter().zip(x.iter()) {
            assert!((got - want).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 1.0];
        assert!(solve_dense(&mut a, &mut b, 2).is_none());
    }
}
