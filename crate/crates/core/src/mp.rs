//! Extended-precision real built on `astro-float`.
//!
//! Working precision is thread-local and set through [`Precision`] guards;
//! every constructor and operation rounds to it. Worker threads must install
//! their own guard.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_traits::{Num, One, Zero};

use crate::scalar::Real;

const RM: RoundingMode = RoundingMode::ToEven;
const GUARD_BITS: usize = 32;
const LOG2_10: f64 = std::f64::consts::LOG2_10;

thread_local! {
    static BITS: Cell<usize> = const { Cell::new(192) };
    static DIGITS: Cell<u32> = const { Cell::new(48) };
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn bits() -> usize {
    BITS.with(|b| b.get())
}

fn with_cc<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Scoped working precision in decimal digits; restores the previous value on drop.
pub struct Precision {
    prev_bits: usize,
    prev_digits: u32,
}

impl Precision {
    pub fn digits(d: u32) -> Self {
        let prev_bits = bits();
        let prev_digits = DIGITS.with(|x| x.get());
        let b = (d as f64 * LOG2_10).ceil() as usize + GUARD_BITS;
        // astro-float wants whole 64-bit words
        let b = b.div_ceil(64) * 64;
        BITS.with(|x| x.set(b));
        DIGITS.with(|x| x.set(d));
        Precision { prev_bits, prev_digits }
    }

    pub fn current_digits() -> u32 {
        DIGITS.with(|x| x.get())
    }
}

impl Drop for Precision {
    fn drop(&mut self) {
        BITS.with(|x| x.set(self.prev_bits));
        DIGITS.with(|x| x.set(self.prev_digits));
    }
}

#[derive(Clone)]
pub struct Mp(BigFloat);

impl Mp {
    pub fn inner(&self) -> &BigFloat {
        &self.0
    }

    fn wrap(x: BigFloat) -> Self {
        debug_assert!(!x.is_nan(), "NaN in extended arithmetic");
        Mp(x)
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }
}

impl PartialEq for Mp {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Mp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Debug for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mp({})", self.to_decimal(20))
    }
}

impl fmt::Display for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = f.precision().unwrap_or(Precision::current_digits() as usize);
        f.write_str(&self.to_decimal(d))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Mp {
            type Output = Mp;
            fn $m(self, rhs: Mp) -> Mp {
                Mp::wrap(self.0.$m(&rhs.0, bits(), RM))
            }
        }
        impl<'a> $tr<&'a Mp> for &'a Mp {
            type Output = Mp;
            fn $m(self, rhs: &'a Mp) -> Mp {
                Mp::wrap(self.0.$m(&rhs.0, bits(), RM))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Rem for Mp {
    type Output = Mp;
    fn rem(self, rhs: Mp) -> Mp {
        let q = (self.clone() / rhs.clone()).0.int();
        self - Mp::wrap(q) * rhs
    }
}

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(self.0.neg())
    }
}

impl Zero for Mp {
    fn zero() -> Self {
        Mp(BigFloat::from_f64(0.0, bits()))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Mp {
    fn one() -> Self {
        Mp(BigFloat::from_f64(1.0, bits()))
    }
}

impl Num for Mp {
    type FromStrRadixErr = &'static str;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            return Err("only radix 10 is supported");
        }
        Mp::parse_decimal(s).ok_or("malformed decimal")
    }
}

fn ldexp(m: f64, e: i64) -> f64 {
    if e > 1100 {
        return f64::INFINITY * m.signum();
    }
    if e < -1200 {
        return 0.0;
    }
    let mut x = m;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Round a digit string `d.ddd` (no sign, no exponent) to `n` significant digits.
fn round_digits(mant: &str, n: usize) -> (String, i64) {
    let digits: Vec<u8> = mant.bytes().filter(|c| c.is_ascii_digit()).map(|c| c - b'0').collect();
    if digits.len() <= n {
        let mut v = digits;
        v.resize(n, 0);
        return (v.iter().map(|d| (b'0' + d) as char).collect(), 0);
    }
    let mut v: Vec<u8> = digits[..n].to_vec();
    let round_up = digits[n] > 5 || (digits[n] == 5 && (digits[n + 1..].iter().any(|&d| d > 0) || v[n - 1] % 2 == 1));
    let mut carry = 0i64;
    if round_up {
        let mut i = n;
        loop {
            if i == 0 {
                v.insert(0, 1);
                v.pop();
                carry = 1;
                break;
            }
            i -= 1;
            if v[i] == 9 {
                v[i] = 0;
            } else {
                v[i] += 1;
                break;
            }
        }
    }
    (v.iter().map(|d| (b'0' + d) as char).collect(), carry)
}

impl Real for Mp {
    fn from_f64(x: f64) -> Self {
        Mp(BigFloat::from_f64(x, bits()))
    }
    fn from_i64(x: i64) -> Self {
        Mp(BigFloat::from_i64(x, bits()))
    }
    fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        if self.0.is_nan() {
            return f64::NAN;
        }
        match self.0.as_raw_parts() {
            Some((words, _, sign, e, _)) => {
                let n = words.len();
                let hi = words[n - 1] as f64;
                let lo = if n > 1 { words[n - 2] as f64 } else { 0.0 };
                let m = (hi + lo / 18446744073709551616.0) / 18446744073709551616.0;
                let v = ldexp(m, e as i64);
                if sign.is_negative() {
                    -v
                } else {
                    v
                }
            }
            None => {
                if self.0.is_inf_pos() {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
    fn sqrt(&self) -> Self {
        Mp::wrap(self.0.sqrt(bits(), RM))
    }
    fn ln(&self) -> Self {
        Mp::wrap(with_cc(|cc| self.0.ln(bits(), RM, cc)))
    }
    fn exp(&self) -> Self {
        Mp::wrap(with_cc(|cc| self.0.exp(bits(), RM, cc)))
    }
    fn sin(&self) -> Self {
        Mp::wrap(with_cc(|cc| self.0.sin(bits(), RM, cc)))
    }
    fn cos(&self) -> Self {
        Mp::wrap(with_cc(|cc| self.0.cos(bits(), RM, cc)))
    }
    fn atan2(&self, x: &Self) -> Self {
        let y = self;
        let zero = Mp::zero();
        if x.is_zero() {
            let half = Mp::pi() / Mp::from_i64(2);
            return if *y > zero {
                half
            } else if *y < zero {
                -half
            } else {
                zero
            };
        }
        let base = Mp::wrap(with_cc(|cc| (y.clone() / x.clone()).0.atan(bits(), RM, cc)));
        if *x > zero {
            base
        } else if *y < zero {
            base - Mp::pi()
        } else {
            base + Mp::pi()
        }
    }
    fn pi() -> Self {
        Mp(with_cc(|cc| cc.pi(bits(), RM)))
    }
    fn epsilon() -> Self {
        Mp::from_f64(2.0).powi(-(bits() as i64))
    }
    fn digits() -> u32 {
        Precision::current_digits()
    }
    fn abs(&self) -> Self {
        Mp(self.0.abs())
    }
    fn run_at_precision<R>(digits: u32, f: impl FnOnce() -> R) -> R {
        let _g = Precision::digits(digits);
        f()
    }
    fn to_decimal(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.0.is_zero() {
            return "0".to_string();
        }
        let s = with_cc(|cc| self.0.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "NaN".into());
        let (neg, body) = match s.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, s.as_str()),
        };
        let (mant, exp) = match body.split_once('e') {
            Some((m, e)) => (m, e.parse::<i64>().unwrap_or(0)),
            None => (body, 0),
        };
        let (d, carry) = round_digits(mant, digits);
        let e = exp + carry;
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(&d[..1]);
        if digits > 1 {
            out.push('.');
            out.push_str(&d[1..]);
        }
        out.push_str(&format!("e{e}"));
        out
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        let t = s.trim();
        if t.is_empty() {
            return None;
        }
        let v = with_cc(|cc| BigFloat::parse(t, Radix::Dec, bits(), RM, cc));
        if v.is_nan() {
            None
        } else {
            Some(Mp(v))
        }
    }
}
