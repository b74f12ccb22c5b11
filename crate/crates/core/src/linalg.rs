//! Small dense linear algebra over exact rationals or `f64`.
//!
//! The systems solved here come from absorbing Markov chains with at most a
//! few dozen transient states, so a plain Gaussian elimination is enough.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Field element usable by the solvers in this crate.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;
    fn is_zero(&self) -> bool;
    /// Pivot preference; larger is better, zero means unusable.
    fn pivot_score(&self) -> f64;
    fn to_f64(&self) -> f64;
    fn is_negative(&self) -> bool;
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn pivot_score(&self) -> f64 {
        // Exact arithmetic: any nonzero pivot is as good as another.
        if Zero::is_zero(self) {
            0.0
        } else {
            1.0
        }
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

/// Threshold under which an `f64` pivot is treated as zero.
pub const F64_PIVOT_EPS: f64 = 1e-14;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_u64(v: u64) -> Self {
        v as f64
    }
    fn is_zero(&self) -> bool {
        self.abs() < F64_PIVOT_EPS
    }
    fn pivot_score(&self) -> f64 {
        if self.abs() < F64_PIVOT_EPS {
            0.0
        } else {
            self.abs()
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_negative(&self) -> bool {
        *self < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("singular linear system (no usable pivot in column {column})")]
pub struct SingularMatrix {
    pub column: usize,
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is row-major and square. Consumes its inputs.
pub fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>, SingularMatrix> {
    let n = b.len();
    debug_assert_eq!(a.len(), n);
    for col in 0..n {
        let mut best = col;
        let mut best_score = a[col][col].pivot_score();
        for row in col + 1..n {
            let score = a[row][col].pivot_score();
            if score > best_score {
                best = row;
                best_score = score;
            }
        }
        if best_score == 0.0 {
            return Err(SingularMatrix { column: col });
        }
        a.swap(col, best);
        b.swap(col, best);

        let pivot = a[col][col].clone();
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = a[row][col].clone() / pivot.clone();
            for k in col..n {
                let delta = factor.clone() * a[col][k].clone();
                a[row][k] = a[row][k].clone() - delta;
            }
            b[row] = b[row].clone() - factor * b[col].clone();
        }
    }

    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc - a[row][k].clone() * x[k].clone();
        }
        x[row] = acc / a[row][row].clone();
    }
    Ok(x)
}

/// Max-norm residual `|a x - b|` evaluated in `f64`.
pub fn residual<T: Scalar>(a: &[Vec<T>], x: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(row, rhs)| {
            let lhs: f64 = row.iter().zip(x).map(|(aij, xj)| aij.to_f64() * xj.to_f64()).sum();
            (lhs - rhs.to_f64()).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rational_solve_is_exact() {
        // [[2, 1], [1, 3]] x = [1, 2]  =>  x = (1/5, 3/5)
        let a = vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(3, 1)]];
        let b = vec![q(1, 1), q(2, 1)];
        let x = solve(a, b).unwrap();
        assert_eq!(x, vec![q(1, 5), q(3, 5)]);
    }

    #[test]
    fn zero_leading_entry_needs_pivot() {
        let a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let x = solve(a, vec![2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        let err = solve(a, vec![q(1, 1), q(1, 1)]).unwrap_err();
        assert_eq!(err.column, 1);
    }

    #[test]
    fn float_residual_small() {
        let a = vec![vec![4.0, -1.0, 0.0], vec![-1.0, 4.0, -1.0], vec![0.0, -1.0, 4.0]];
        let b = vec![1.0, 2.0, 3.0];
        let x = solve(a.clone(), b.clone()).unwrap();
        assert!(residual(&a, &x, &b) < 1e-12);
    }
}
