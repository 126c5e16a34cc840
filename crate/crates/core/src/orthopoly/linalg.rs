//! Dense complex LU with partial pivoting, generic over the scalar.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

fn mag<T: Real>(z: &Complex<T>) -> T {
    z.re.abs() + z.im.abs()
}

#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Vec<Vec<Complex<T>>>,
    perm: Vec<usize>,
    odd: bool,
    /// Smallest |pivot| relative to the largest entry, as log10.
    pub log10_pivot_ratio: f64,
}

/// Factor a square matrix; fails if a pivot vanishes at the working precision.
pub fn lu<T: Real>(mut a: Vec<Vec<Complex<T>>>) -> Result<Lu<T>> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::Domain("LU needs a square matrix".into()));
    }
    let big = a.iter().flatten().map(mag).fold(T::zero(), T::max_of);
    if big.is_zero() {
        return Err(Error::Precision("zero matrix".into()));
    }
    let tiny = big.clone() * T::epsilon() * T::from_i64(100);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut odd = false;
    let mut worst = f64::INFINITY;
    for col in 0..n {
        let (piv, pmag) = (col..n).map(|r| (r, mag(&a[r][col]))).fold((col, T::from_i64(-1)), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmag <= tiny {
            return Err(Error::Precision(format!("matrix numerically singular at {} digits (pivot {col})", T::digits())));
        }
        worst = worst.min((pmag.clone() / big.clone()).ln().to_f64() / std::f64::consts::LN_10);
        if piv != col {
            a.swap(piv, col);
            perm.swap(piv, col);
            odd = !odd;
        }
        let inv = Complex::<T>::one() / a[col][col].clone();
        for r in col + 1..n {
            let f = &a[r][col] * &inv;
            if f.is_zero() {
                continue;
            }
            for c in col + 1..n {
                let t = &f * &a[col][c];
                a[r][c] = &a[r][c] - &t;
            }
            a[r][col] = f;
        }
    }
    Ok(Lu { lu: a, perm, odd, log10_pivot_ratio: worst })
}

impl<T: Real> Lu<T> {
    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.lu.len();
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&i| b[i].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let t = &self.lu[i][j] * &x[j];
                x[i] = &x[i] - &t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = &self.lu[i][j] * &x[j];
                x[i] = &x[i] - &t;
            }
            x[i] = &x[i] / &self.lu[i][i];
        }
        x
    }

    pub fn det(&self) -> Complex<T> {
        let mut d = Complex::<T>::one();
        for (i, row) in self.lu.iter().enumerate() {
            d = d * row[i].clone();
        }
        if self.odd {
            -d
        } else {
            d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    #[test]
    fn solves_and_determinant() {
        let a = vec![
            vec![C::new(0.0, 0.0), C::new(2.0, 1.0), C::new(1.0, 0.0)],
            vec![C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(3.0, 0.0)],
            vec![C::new(0.0, 1.0), C::new(1.0, 0.0), C::new(0.0, 0.0)],
        ];
        let f = lu(a.clone()).unwrap();
        let b = vec![C::new(1.0, 0.0), C::new(2.0, -1.0), C::new(0.5, 0.0)];
        let x = f.solve(&b);
        for i in 0..3 {
            let r: C = (0..3).map(|j| a[i][j] * x[j]).sum();
            assert!((r - b[i]).norm() < 1e-14);
        }
        // cofactor expansion
        let d = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        assert!((f.det() - d).norm() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![vec![C::new(1.0, 0.0), C::new(2.0, 0.0)], vec![C::new(2.0, 0.0), C::new(4.0, 0.0)]];
        assert!(matches!(lu(a), Err(Error::Precision(_))));
    }
}
