//! Model parameters, phase classification and the elementary scalar functions:
//! planar potential, logarithmic potential, contour weight, Gamma-ratio constant.

use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Relative tolerance separating `Critical` from the two open phases.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub q0: T,
    pub q1: T,
    pub w: T,
    /// Particle number N.
    pub big_n: u32,
    /// Polynomial degree n; the offset is `n - N`.
    pub n: i64,
}

impl<T: Float> ModelParams<T> {
    pub fn new(q0: T, q1: T, w: T, big_n: u32, n: i64) -> Result<Self> {
        let p = ModelParams { q0, q1, w, big_n, n };
        p.validate()?;
        Ok(p)
    }

    /// Geometry-only parameters (N = n = 1); the limit objects do not depend on N.
    pub fn geometry(q0: T, q1: T, w: T) -> Result<Self> {
        Self::new(q0, q1, w, 1, 1)
    }

    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        if !(self.q0 > z && self.q1 > z && self.w > z) {
            return Err(Error::Domain("Q0, Q1 and w must be positive".into()));
        }
        if !(self.q0.is_finite() && self.q1.is_finite() && self.w.is_finite()) {
            return Err(Error::Domain("parameters must be finite".into()));
        }
        if self.big_n < 1 {
            return Err(Error::Domain("N must be at least 1".into()));
        }
        if self.n < 0 {
            return Err(Error::Domain("degree must be non-negative".into()));
        }
        let nn = T::from(self.big_n).unwrap();
        let cap = nn + nn * self.q0;
        if T::from(self.n).unwrap() > cap {
            return Err(Error::Domain(format!("degree n = {} exceeds N + N*Q0 (planar norm diverges)", self.n)));
        }
        Ok(())
    }

    pub fn with_sizes(&self, big_n: u32, n: i64) -> Result<Self> {
        Self::new(self.q0, self.q1, self.w, big_n, n)
    }

    pub fn r0(&self) -> i64 {
        self.n - self.big_n as i64
    }

    /// 1 + Q0 + Q1.
    pub fn total(&self) -> T {
        T::one() + self.q0 + self.q1
    }

    fn nf(&self) -> T {
        T::from(self.big_n).unwrap()
    }

    /// N·Q1 and N·Q0 when both are integers (meromorphic weight).
    pub fn integer_exponents(&self) -> Option<(i64, i64)> {
        let a = self.nf() * self.q1;
        let b = self.nf() * self.q0;
        let tol = T::from(1e-9).unwrap();
        if (a - a.round()).abs() < tol && (b - b.round()).abs() < tol {
            Some((a.round().to_i64()?, b.round().to_i64()?))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseTag {
    PreCritical,
    Critical,
    PostCritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase<T> {
    pub tag: PhaseTag,
    pub w_cri: T,
}

pub fn critical_w<T: Float>(q0: T, q1: T) -> Result<T> {
    if !(q0 > T::zero() && q1 > T::zero()) {
        return Err(Error::Domain("charges must be positive".into()));
    }
    let one = T::one();
    let two = one + one;
    let s = two * q0 * q1 + q0 + q1 + two * (q0 * q1 * (one + q0) * (one + q1)).sqrt();
    Ok(one / s.sqrt())
}

pub fn classify_phase<T: Float>(p: &ModelParams<T>) -> Result<Phase<T>> {
    classify_phase_tol(p, T::from(CRITICAL_TOL).unwrap())
}

pub fn classify_phase_tol<T: Float>(p: &ModelParams<T>, tol: T) -> Result<Phase<T>> {
    p.validate()?;
    let w_cri = critical_w(p.q0, p.q1)?;
    let tag = if (p.w - w_cri).abs() <= tol * w_cri {
        PhaseTag::Critical
    } else if p.w > w_cri {
        PhaseTag::PreCritical
    } else {
        PhaseTag::PostCritical
    };
    Ok(Phase { tag, w_cri })
}

pub fn require_precritical<T: Float>(p: &ModelParams<T>) -> Result<()> {
    let ph = classify_phase(p)?;
    if ph.tag != PhaseTag::PreCritical {
        return Err(Error::PostCritical { w: p.w.to_f64().unwrap_or(f64::NAN), w_cri: ph.w_cri.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(())
}

/// Value of a potential with a logarithmic singularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PotentialValue<T> {
    Finite(T),
    /// Evaluated exactly at the insertion point.
    Infinite,
}

impl<T: Copy> PotentialValue<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            PotentialValue::Finite(v) => Some(v),
            PotentialValue::Infinite => None,
        }
    }
}

/// Finite-N planar potential V(z), including the 1/N term.
pub fn planar_potential<T: Float>(p: &ModelParams<T>, z: Complex<T>) -> PotentialValue<T> {
    let d = (z - Complex::new(p.w, T::zero())).norm();
    if d == T::zero() {
        return PotentialValue::Infinite;
    }
    let one = T::one();
    let c = one + one / p.nf() + p.q0 + p.q1;
    let two = one + one;
    PotentialValue::Finite(c * (one + z.norm_sqr()).ln() - two * p.q1 * d.ln())
}

fn on_real_ray<T: Float>(z: Complex<T>, hi: T) -> bool {
    z.im == T::zero() && z.re <= hi
}

/// Logarithmic potential 𝒱 with total cut on (−∞, w].
pub fn log_potential<T: Float>(p: &ModelParams<T>, z: Complex<T>) -> Result<Complex<T>> {
    if on_real_ray(z, p.w) {
        return Err(Error::Branch(format!("log potential cut (-inf, w] hit at {:?}", z.re.to_f64())));
    }
    let one = T::one();
    let w = Complex::new(p.w, T::zero());
    let iw = Complex::new(one / p.w, T::zero());
    Ok(z.ln() * (one + p.q1) + (z + iw).ln() * (one + p.q0) - (z - w).ln() * p.q1)
}

/// Re 𝒱, defined everywhere except the three insertion points.
pub fn log_potential_re<T: Float>(p: &ModelParams<T>, z: Complex<T>) -> T {
    let one = T::one();
    let w = Complex::new(p.w, T::zero());
    let iw = Complex::new(one / p.w, T::zero());
    z.norm().ln() * (one + p.q1) + (z + iw).norm().ln() * (one + p.q0) - (z - w).norm().ln() * p.q1
}

pub fn log_potential_deriv<T: Float>(p: &ModelParams<T>, z: Complex<T>) -> Complex<T> {
    let one = T::one();
    let w = Complex::new(p.w, T::zero());
    let iw = Complex::new(one / p.w, T::zero());
    z.inv() * (one + p.q1) + (z + iw).inv() * (one + p.q0) - (z - w).inv() * p.q1
}

/// Contour weight ((z−w)/z)^{NQ1} z^{−n} (z+1/w)^{−(N+NQ0)} with principal powers.
pub fn contour_weight<T: Float>(p: &ModelParams<T>, z: Complex<T>) -> Result<Complex<T>> {
    let one = T::one();
    let zero = T::zero();
    if z.im == zero && ((z.re >= zero && z.re <= p.w) || z.re <= -one / p.w) {
        return Err(Error::Branch("weight cuts [0,w] and (-inf,-1/w]".into()));
    }
    let w = Complex::new(p.w, zero);
    let iw = Complex::new(one / p.w, zero);
    let nf = p.nf();
    if let Some((a, b)) = p.integer_exponents() {
        let big_n = p.big_n as i32;
        let num = (z - w).powi(a as i32);
        let den = z.powi((p.n + a) as i32) * (z + iw).powi(big_n + b as i32);
        return Ok(num / den);
    }
    let r = ((z - w) / z).powf(nf * p.q1);
    let zn = z.powi(p.n as i32);
    let tail = (z + iw).powf(-(nf + nf * p.q0));
    Ok(r * tail / zn)
}

/// Γ(N+NQ0−k) Γ(1+k+NQ1) / Γ(N(1+Q0+Q1)+1) through log-Gamma.
pub fn gamma_ratio<T: Float>(p: &ModelParams<T>, k: i64) -> Result<T> {
    let nf = p.big_n as f64;
    let q0 = p.q0.to_f64().unwrap();
    let q1 = p.q1.to_f64().unwrap();
    let a = nf + nf * q0 - k as f64;
    let b = 1.0 + k as f64 + nf * q1;
    let c = nf * (1.0 + q0 + q1) + 1.0;
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::Domain(format!("Gamma argument non-positive for k = {k}")));
    }
    T::from((ln_gamma(a) + ln_gamma(b) - ln_gamma(c)).exp()).ok_or_else(|| Error::Domain("gamma ratio not representable".into()))
}

pub fn ln_gamma_ratio<T: Float>(p: &ModelParams<T>, k: i64) -> Result<f64> {
    let nf = p.big_n as f64;
    let q0 = p.q0.to_f64().unwrap();
    let q1 = p.q1.to_f64().unwrap();
    let a = nf + nf * q0 - k as f64;
    let b = 1.0 + k as f64 + nf * q1;
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::Domain(format!("Gamma argument non-positive for k = {k}")));
    }
    Ok(ln_gamma(a) + ln_gamma(b) - ln_gamma(nf * (1.0 + q0 + q1) + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    #[test]
    fn critical_value_unit_charges() {
        let w = critical_w(1.0f64, 1.0).unwrap();
        assert!((w - 8f64.powf(-0.5)).abs() < 1e-15);
        assert!((w - 0.3535533906).abs() < 1e-10);
    }

    #[test]
    fn phase_examples() {
        for w in [0.5, 1.0, 2.0] {
            let p = ModelParams::geometry(1.0, 1.0, w).unwrap();
            assert_eq!(classify_phase(&p).unwrap().tag, PhaseTag::PreCritical);
        }
        let p = ModelParams::geometry(1.0, 1.0, 0.3).unwrap();
        assert_eq!(classify_phase(&p).unwrap().tag, PhaseTag::PostCritical);
        let p = ModelParams::geometry(1.0, 1.0, 8f64.powf(-0.5)).unwrap();
        assert_eq!(classify_phase(&p).unwrap().tag, PhaseTag::Critical);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 2, 2).is_err());
        assert!(ModelParams::new(1.0, 1.0, -1.0, 2, 2).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0, 0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 2, 5).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 2, 4).is_ok());
        assert!(critical_w(-1.0, 1.0).is_err());
    }

    #[test]
    fn planar_potential_examples() {
        let p = ModelParams::new(1.0, 1.0, 0.5, 3, 3).unwrap();
        let v = planar_potential(&p, C::new(0.0, 0.0)).finite().unwrap();
        assert!((v + 2.0 * 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(planar_potential(&p, C::new(0.5, 0.0)), PotentialValue::Infinite);
    }

    #[test]
    fn log_potential_real_and_reflection() {
        let p = ModelParams::geometry(1.0, 1.0, 1.0).unwrap();
        let v = log_potential(&p, C::new(2.5, 0.0)).unwrap();
        assert_eq!(v.im, 0.0);
        let z = C::new(-0.4, 0.9);
        let a = log_potential(&p, z).unwrap();
        let b = log_potential(&p, z.conj()).unwrap();
        assert!((a.conj() - b).norm() < 1e-14);
        assert!(log_potential(&p, C::new(-3.0, 0.0)).is_err());
    }

    #[test]
    fn log_potential_derivative_by_differences() {
        let p = ModelParams::geometry(1.3, 0.7, 1.4).unwrap();
        for z in [C::new(0.3, 0.8), C::new(-2.0, -0.5), C::new(3.0, 0.1)] {
            let h = 1e-6;
            let fd = (log_potential(&p, z + h).unwrap() - log_potential(&p, z - h).unwrap()) / (2.0 * h);
            let an = log_potential_deriv(&p, z);
            assert!((fd - an).norm() / an.norm() < 1e-6);
        }
    }

    #[test]
    fn weight_matches_exponential_form() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 3, 4).unwrap();
        for z in [C::new(1.5, 0.3), C::new(2.2, -0.7), C::new(4.0, 0.0)] {
            let wz = contour_weight(&p, z).unwrap();
            let v = log_potential(&p, z).unwrap();
            let id = wz * z.powi(p.r0() as i32) * (v * 3.0).exp();
            assert!((id - 1.0).norm() < 1e-12, "{id}");
        }
    }

    #[test]
    fn weight_general_path_matches_integer_path() {
        let pi = ModelParams::new(1.0, 1.0, 0.8, 2, 2).unwrap();
        let pg = ModelParams::new(1.0 + 1e-7, 1.0, 0.8, 2, 2).unwrap();
        assert!(pg.integer_exponents().is_none());
        let z = C::new(0.3, 0.6);
        let a = contour_weight(&pi, z).unwrap();
        let b = contour_weight(&pg, z).unwrap();
        assert!((a - b).norm() / a.norm() < 1e-5);
        assert!((contour_weight(&pg, z.conj()).unwrap() - b.conj()).norm() < 1e-14 * b.norm());
        assert!(contour_weight(&pi, C::new(0.4, 0.0)).is_err());
        assert!(contour_weight(&pi, C::new(-2.0, 0.0)).is_err());
    }

    #[test]
    fn gamma_ratio_factorial_table() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1, 1).unwrap();
        assert!((gamma_ratio(&p, 0).unwrap() - 1.0 / 6.0).abs() < 1e-14);
        assert!((gamma_ratio(&p, 1).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_ratio_vs_direct_product() {
        fn fact(n: u32) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        for big_n in 1..=5u32 {
            let p = ModelParams::new(1.0, 1.0, 1.0, big_n, big_n as i64).unwrap();
            for k in 0..big_n as i64 {
                let direct = fact(2 * big_n - k as u32 - 1) * fact(k as u32 + big_n) / fact(3 * big_n);
                let g = gamma_ratio(&p, k).unwrap();
                assert!((g / direct - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn f32_geometry_is_supported() {
        let w = critical_w(1.0f32, 1.0).unwrap();
        assert!((w - 0.35355338).abs() < 1e-6);
    }
}
