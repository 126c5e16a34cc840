//! Polynomial roots: double-precision companion eigenvalues polished by
//! Aberth–Ehrlich iteration at the working precision.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;

use super::moments::log10_abs;
use crate::error::{Error, Result};
use crate::scalar::{c_abs, c_from, c_to_f64, Real};

fn horner<T: Real>(c: &[Complex<T>], z: &Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::<T>::zero();
    let mut dp = Complex::<T>::zero();
    for a in c.iter().rev() {
        dp = &dp * z + &p;
        p = &p * z + a;
    }
    (p, dp)
}

/// log10 Σ|c_k||z|^k.
fn log10_scale<T: Real>(c: &[Complex<T>], z: &Complex<T>) -> f64 {
    let ar = c_abs(z);
    let mut scale = T::zero();
    let mut pw = T::one();
    for a in c {
        scale = scale + c_abs(a) * pw.clone();
        pw = pw * ar.clone();
    }
    scale.ln().to_f64() / std::f64::consts::LN_10
}

/// Starting values from the companion matrix of the real parts, in double precision.
fn companion_guess(c: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let n = c.len() - 1;
    let lead = c[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -(c[i] / lead).re;
    }
    let ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    if ev.iter().all(|z| z.is_finite()) {
        // split exact duplicates so the Aberth correction is defined
        let mut out: Vec<Complex<f64>> = Vec::with_capacity(n);
        for (k, z) in ev.into_iter().enumerate() {
            let mut z = z;
            while out.iter().any(|o| (*o - z).norm() < 1e-12 * z.norm().max(1.0)) {
                z += Complex::from_polar(1e-8 * z.norm().max(1.0), k as f64);
            }
            out.push(z);
        }
        out
    } else {
        let r = c.iter().take(n).map(|a| (a / lead).norm()).fold(0.0f64, f64::max).powf(1.0 / n as f64).max(1.0);
        (0..n).map(|k| Complex::from_polar(r, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64)).collect()
    }
}

/// All roots of Σ c_k z^k (ascending coefficients, c_n ≠ 0).
///
/// Returns roots and the worst residual |P(ζ)| / Σ|c_k||ζ|^k.
pub fn roots<T: Real>(c: &[Complex<T>], max_iter: usize) -> Result<(Vec<Complex<T>>, f64)> {
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let cf: Vec<Complex<f64>> = c.iter().map(c_to_f64).collect();
    let mut z: Vec<Complex<T>> = companion_guess(&cf).into_iter().map(c_from).collect();
    let stop = -(T::digits() as f64) + 6.0;
    let floor = -(T::digits() as f64) + 3.0;
    let mut frozen = vec![false; n];
    for _ in 0..max_iter {
        for i in 0..n {
            if frozen[i] {
                continue;
            }
            let (p, dp) = horner(c, &z[i]);
            // residual at the roundoff floor: further corrections are noise
            if log10_abs(&p) - log10_scale(c, &z[i]) < floor {
                frozen[i] = true;
                continue;
            }
            let ratio = &p / &dp;
            let mut s = Complex::<T>::zero();
            for j in 0..n {
                if j != i {
                    s = s + (&z[i] - &z[j]).inv();
                }
            }
            let corr = &ratio / &(Complex::new(T::one(), T::zero()) - &ratio * &s);
            if log10_abs(&corr) - log10_abs(&z[i]).max(0.0) < stop {
                frozen[i] = true;
            }
            z[i] = &z[i] - &corr;
        }
        if frozen.iter().all(|f| *f) {
            break;
        }
    }
    if !frozen.iter().all(|f| *f) {
        return Err(Error::Root(format!("Aberth iteration did not converge in {max_iter} steps")));
    }
    let mut resid = f64::NEG_INFINITY;
    for r in &z {
        let (p, _) = horner(c, r);
        resid = resid.max(log10_abs(&p) - log10_scale(c, r));
    }
    Ok((z, 10f64.powf(resid)))
}
