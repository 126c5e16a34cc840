//! Scalar abstraction shared by the double and extended-precision code paths.
//!
//! `Real` is deliberately weaker than `num_traits::Float`: it does not require
//! `Copy`, so a heap-backed multiprecision float can implement it. Complex
//! arithmetic goes through `num_complex::Complex<T>`, which only needs
//! `Clone + Num` for the field operations; the transcendental complex helpers
//! live here as free functions.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Num, One, Zero};

pub trait Real: Clone + PartialOrd + Debug + Display + Send + Sync + Num + std::ops::Neg<Output = Self> + 'static {
    fn from_f64(x: f64) -> Self;
    fn from_i64(x: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn atan2(&self, x: &Self) -> Self;
    fn pi() -> Self;
    /// Unit roundoff of the current working precision.
    fn epsilon() -> Self;
    /// Decimal mantissa digits carried by the current working precision.
    fn digits() -> u32;
    fn to_decimal(&self, digits: usize) -> String;
    fn parse_decimal(s: &str) -> Option<Self>;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn powi(&self, n: i64) -> Self {
        let mut base = if n < 0 { Self::one() / self.clone() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// Run `f` with the working precision set to `digits`; rayon workers need
    /// this because extended precision is thread-local.
    fn run_at_precision<R>(digits: u32, f: impl FnOnce() -> R) -> R {
        let _ = digits;
        f()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a < b {
            b
        } else {
            a
        }
    }
}

macro_rules! impl_real_prim {
    ($t:ty, $digits:expr) => {
        impl Real for $t {
            fn from_f64(x: f64) -> Self {
                x as $t
            }
            fn from_i64(x: i64) -> Self {
                x as $t
            }
            fn to_f64(&self) -> f64 {
                *self as f64
            }
            fn sqrt(&self) -> Self {
                <$t>::sqrt(*self)
            }
            fn ln(&self) -> Self {
                <$t>::ln(*self)
            }
            fn exp(&self) -> Self {
                <$t>::exp(*self)
            }
            fn sin(&self) -> Self {
                <$t>::sin(*self)
            }
            fn cos(&self) -> Self {
                <$t>::cos(*self)
            }
            fn atan2(&self, x: &Self) -> Self {
                <$t>::atan2(*self, *x)
            }
            fn pi() -> Self {
                std::f64::consts::PI as $t
            }
            fn epsilon() -> Self {
                <$t>::EPSILON
            }
            fn digits() -> u32 {
                $digits
            }
            fn to_decimal(&self, digits: usize) -> String {
                format!("{:.*e}", digits.saturating_sub(1), self)
            }
            fn parse_decimal(s: &str) -> Option<Self> {
                s.trim().parse().ok()
            }
            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }
        }
    };
}

impl_real_prim!(f32, 7);
impl_real_prim!(f64, 16);

pub fn c_from<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::from_f64(z.re), T::from_f64(z.im))
}

pub fn c_to_f64<T: Real>(z: &Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

pub fn c_real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

pub fn c_abs<T: Real>(z: &Complex<T>) -> T {
    let (a, b) = (z.re.abs(), z.im.abs());
    if a.is_zero() && b.is_zero() {
        return T::zero();
    }
    let (big, small) = if a < b { (b, a) } else { (a, b) };
    let r = small / big.clone();
    big * (T::one() + r.clone() * r).sqrt()
}

pub fn c_arg<T: Real>(z: &Complex<T>) -> T {
    z.im.atan2(&z.re)
}

/// Principal logarithm, argument in (−π, π].
pub fn c_ln<T: Real>(z: &Complex<T>) -> Complex<T> {
    Complex::new(c_abs(z).ln(), c_arg(z))
}

pub fn c_exp<T: Real>(z: &Complex<T>) -> Complex<T> {
    let m = z.re.exp();
    Complex::new(m.clone() * z.im.cos(), m * z.im.sin())
}

/// Principal power `z^e` for real `e`.
pub fn c_powf<T: Real>(z: &Complex<T>, e: &T) -> Complex<T> {
    if z.re.is_zero() && z.im.is_zero() {
        return Complex::zero();
    }
    let l = c_ln(z);
    c_exp(&Complex::new(l.re * e.clone(), l.im * e.clone()))
}

pub fn c_powi<T: Real>(z: &Complex<T>, n: i64) -> Complex<T> {
    let mut base = if n < 0 { Complex::<T>::one() / z.clone() } else { z.clone() };
    let mut e = n.unsigned_abs();
    let mut acc = Complex::<T>::one();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base.clone();
        }
        e >>= 1;
        if e > 0 {
            base = base.clone() * base;
        }
    }
    acc
}

/// Principal square root (cut on the negative real axis).
pub fn c_sqrt<T: Real>(z: &Complex<T>) -> Complex<T> {
    let r = c_abs(z);
    if r.is_zero() {
        return Complex::zero();
    }
    let two = T::from_i64(2);
    let re = ((r.clone() + z.re.clone()) / two.clone()).sqrt();
    let im = ((r - z.re.clone()) / two).sqrt();
    if z.im < T::zero() {
        Complex::new(re, -im)
    } else {
        Complex::new(re, im)
    }
}

/// `|z|` relative comparison helper used by convergence tests.
pub fn c_rel_diff<T: Real>(a: &Complex<T>, b: &Complex<T>) -> T {
    let d = c_abs(&(a.clone() - b.clone()));
    let s = T::max_of(c_abs(a), c_abs(b));
    if s.is_zero() {
        d
    } else {
        d / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_std() {
        assert!((Real::powi(&1.5f64, 7) - 1.5f64.powi(7)).abs() < 1e-12);
        assert!((Real::powi(&2.0f64, -3) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn complex_helpers_match_num_complex() {
        let z = Complex::new(-0.7f64, 0.3);
        assert!((c_ln(&z) - z.ln()).norm() < 1e-15);
        assert!((c_sqrt(&z) - z.sqrt()).norm() < 1e-15);
        assert!((c_exp(&z) - z.exp()).norm() < 1e-15);
        assert!((c_powf(&z, &2.5) - z.powf(2.5)).norm() < 1e-14);
        assert!((c_powi(&z, -4) - z.powi(-4)).norm() < 1e-12);
        let zm = Complex::new(-0.7f64, -0.3);
        assert!((c_sqrt(&zm) - zm.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn f32_path_is_usable() {
        let z = Complex::new(0.25f32, 1.0);
        let e = c_exp(&c_ln(&z));
        assert!((e - z).norm() < 1e-6);
    }
}
