//! Contour moments of the non-Hermitian weight by the periodic trapezoid rule.

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::{c_abs, c_from, c_powf, c_powi, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    #[serde(with = "decimal_f64")]
    pub center: f64,
    #[serde(with = "decimal_f64")]
    pub radius: f64,
}

impl Circle {
    /// Center w/2, radius w/2 + 1/(2w): encloses [0, w] and leaves −1/w outside.
    pub fn standard(w: f64) -> Self {
        Circle { center: 0.5 * w, radius: 0.5 * w + 0.5 / w }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Circle { center: self.center, radius: self.radius * factor }
    }

    pub fn encloses_cuts(&self, w: f64) -> bool {
        let left = self.center - self.radius;
        let right = self.center + self.radius;
        left < 0.0 && right > w && left > -1.0 / w
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MomentOptions {
    /// Stop when successive node doublings agree to this many digits; defaults
    /// to max(p − 10, 3p/4) for working precision p.
    pub tol_digits: Option<u32>,
    pub min_nodes: usize,
    pub max_nodes: usize,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions { tol_digits: None, min_nodes: 64, max_nodes: 1 << 18 }
    }
}

impl MomentOptions {
    pub fn tol_digits_for(&self, digits: u32) -> u32 {
        self.tol_digits.unwrap_or_else(|| (digits.saturating_sub(10)).max(3 * digits / 4))
    }
}

#[derive(Debug, Clone)]
pub struct CircleIntegrals<T> {
    /// ∮ z^k f(z) dz for k = kmin..=kmax.
    pub values: Vec<Complex<T>>,
    /// ∮ |z^k f(z)| |dz|, the roundoff scale of each value.
    pub scale: Vec<f64>,
    pub nodes: usize,
}

pub(crate) fn log10_abs<T: Real>(z: &Complex<T>) -> f64 {
    let a = c_abs(z);
    if a.is_zero() {
        f64::NEG_INFINITY
    } else {
        a.ln().to_f64() / std::f64::consts::LN_10
    }
}

struct Partial<T> {
    sums: Vec<Complex<T>>,
    abs: Vec<f64>,
}

fn node_partial<T: Real, F>(circle: &Circle, m: usize, idx: &[usize], kmin: i64, count: usize, f: &F) -> Partial<T>
where
    F: Fn(&Complex<T>) -> Complex<T>,
{
    let c = T::from_f64(circle.center);
    let r = T::from_f64(circle.radius);
    let two_pi = T::pi() * T::from_i64(2);
    let mut sums = vec![Complex::<T>::zero(); count];
    let mut abs = vec![0.0f64; count];
    for &j in idx {
        let theta = two_pi.clone() * T::from_i64(j as i64) / T::from_i64(m as i64);
        let e = Complex::new(theta.cos(), theta.sin());
        let z = Complex::new(c.clone() + r.clone() * e.re.clone(), r.clone() * e.im.clone());
        // dz/dθ = i r e^{iθ}; the i r factor is applied once at the end
        let fe = f(&z) * e;
        let mut zp = c_powi(&z, kmin);
        let zf = Complex::new(z.re.to_f64(), z.im.to_f64()).norm();
        let mut mag = Complex::new(fe.re.to_f64(), fe.im.to_f64()).norm() * zf.powi(kmin as i32);
        for k in 0..count {
            let term = &zp * &fe;
            sums[k] = &sums[k] + &term;
            abs[k] += mag;
            if k + 1 < count {
                zp = &zp * &z;
                mag *= zf;
            }
        }
    }
    Partial { sums, abs }
}

/// ∮ z^k f(z) dz over a positively oriented circle for k = kmin..=kmax.
///
/// Nodes are doubled until every value changes by less than 10^{−tol} relative
/// to max(|value|, scale). Evaluation is parallel over nodes.
pub fn circle_power_integrals<T: Real, F>(circle: &Circle, kmin: i64, kmax: i64, f: F, opts: &MomentOptions) -> Result<CircleIntegrals<T>>
where
    F: Fn(&Complex<T>) -> Complex<T> + Sync,
{
    if kmax < kmin {
        return Err(Error::Domain("empty moment range".into()));
    }
    let digits = T::digits();
    let tol = opts.tol_digits_for(digits) as f64;
    let count = (kmax - kmin + 1) as usize;
    let run = |m: usize, idx: Vec<usize>| -> Partial<T> {
        let parts: Vec<Partial<T>> =
            idx.par_chunks(32).map(|ch| T::run_at_precision(digits, || node_partial(circle, m, ch, kmin, count, &f))).collect();
        let mut acc = Partial { sums: vec![Complex::<T>::zero(); count], abs: vec![0.0; count] };
        for p in parts {
            for k in 0..count {
                acc.sums[k] = &acc.sums[k] + &p.sums[k];
                acc.abs[k] += p.abs[k];
            }
        }
        acc
    };
    let finish = |s: &Partial<T>, m: usize| -> (Vec<Complex<T>>, Vec<f64>) {
        let fac = T::pi() * T::from_i64(2) * T::from_f64(circle.radius) / T::from_i64(m as i64);
        let ir = Complex::new(T::zero(), fac);
        let scale_fac = 2.0 * std::f64::consts::PI * circle.radius / m as f64;
        (s.sums.iter().map(|v| v * &ir).collect(), s.abs.iter().map(|a| a * scale_fac).collect())
    };

    let mut m = opts.min_nodes.max(8).next_power_of_two();
    let mut acc = run(m, (0..m).collect());
    let (mut prev, _) = finish(&acc, m);
    while 2 * m <= opts.max_nodes {
        let odd = run(2 * m, (0..m).map(|j| 2 * j + 1).collect());
        for k in 0..count {
            acc.sums[k] = &acc.sums[k] + &odd.sums[k];
            acc.abs[k] += odd.abs[k];
        }
        m *= 2;
        let (vals, scale) = finish(&acc, m);
        let converged = vals.iter().zip(&prev).zip(&scale).all(|((a, b), s)| {
            let d = log10_abs(&(a - b));
            let r = log10_abs(a).max(s.log10());
            d <= r - tol
        });
        if converged {
            return Ok(CircleIntegrals { values: vals, scale, nodes: m });
        }
        prev = vals;
    }
    Err(Error::Quadrature(format!("trapezoid rule not converged at {} nodes", opts.max_nodes)))
}

/// ((z−w)/z)^{NQ1} (1+wz)^{−(N+NQ0)}: the contour weight without its z^{−n} factor.
pub fn base_weight<T: Real>(p: &ModelParams<f64>, z: &Complex<T>) -> Complex<T> {
    let w = T::from_f64(p.w);
    let one = Complex::<T>::one();
    let zw = Complex::new(z.re.clone() - w.clone(), z.im.clone());
    let lin = one + z * Complex::new(w, T::zero());
    if let Some((a, b)) = p.integer_exponents() {
        let big_n = p.big_n as i64;
        return c_powi(&zw, a) * c_powi(z, -a) * c_powi(&lin, -(big_n + b));
    }
    let nf = p.big_n as f64;
    let a = T::from_f64(nf * p.q1);
    let b = T::from_f64(-(nf + nf * p.q0));
    c_powf(&(zw / z.clone()), &a) * c_powf(&lin, &b)
}

/// Base moments m_k = ∮ z^k ((z−w)/z)^{NQ1} (1+wz)^{−(N+NQ0)} dz.
///
/// The degree-n pairing moments are ν_i = ⟨z^i, 1⟩_co = m_{i−n}, so a single
/// table serves every degree with the same N.
#[derive(Debug, Clone)]
pub struct MomentTable<T> {
    pub params: ModelParams<f64>,
    pub kmin: i64,
    pub values: Vec<Complex<T>>,
    pub scale: Vec<f64>,
    pub circle: Circle,
    pub nodes: usize,
    pub digits: u32,
}

impl<T: Real> MomentTable<T> {
    pub fn compute(p: &ModelParams<f64>, kmin: i64, kmax: i64, circle: Circle, opts: &MomentOptions) -> Result<Self> {
        if !circle.encloses_cuts(p.w) {
            return Err(Error::Domain("contour must enclose [0,w] and exclude -1/w".into()));
        }
        let ci = circle_power_integrals::<T, _>(&circle, kmin, kmax, |z| base_weight(p, z), opts)?;
        Ok(MomentTable { params: *p, kmin, values: ci.values, scale: ci.scale, circle, nodes: ci.nodes, digits: T::digits() })
    }

    /// Table on the standard circle covering every moment needed for degrees up to `n_max`.
    pub fn for_degree(p: &ModelParams<f64>, n_max: i64) -> Result<Self> {
        Self::compute(p, -n_max, n_max, Circle::standard(p.w), &MomentOptions::default())
    }

    pub fn kmax(&self) -> i64 {
        self.kmin + self.values.len() as i64 - 1
    }

    pub fn base(&self, k: i64) -> Result<&Complex<T>> {
        if k < self.kmin || k > self.kmax() {
            return Err(Error::Dependency(format!("moment m_{k} outside table [{}, {}]", self.kmin, self.kmax())));
        }
        Ok(&self.values[(k - self.kmin) as usize])
    }

    /// ν_i for the degree-n pairing.
    pub fn nu(&self, n: i64, i: i64) -> Result<&Complex<T>> {
        self.base(i - n)
    }

    /// Recompute on a deformed circle and return the worst disagreement.
    ///
    /// Values above the roundoff floor are compared relatively; values at the
    /// floor (e.g. moments that vanish identically) are compared against their scale.
    pub fn deformation_error(&self, factor: f64) -> Result<f64> {
        let other = Self::compute(&self.params, self.kmin, self.kmax(), self.circle.scaled(factor), &MomentOptions::default())?;
        let floor = -(self.digits as f64) / 2.0;
        let mut worst = f64::NEG_INFINITY;
        for ((a, b), s) in self.values.iter().zip(&other.values).zip(&self.scale) {
            let d = log10_abs(&(a - b));
            let mag = log10_abs(a).max(log10_abs(b));
            let e = if mag > s.log10() + floor { d - mag } else { d - s.log10() };
            worst = worst.max(e);
        }
        Ok(10f64.powf(worst))
    }

    pub fn to_f64(&self) -> Vec<Complex<f64>> {
        self.values.iter().map(|z| Complex::new(z.re.to_f64(), z.im.to_f64())).collect()
    }

    pub fn record(&self) -> MomentRecord {
        MomentRecord {
            q0: self.params.q0,
            q1: self.params.q1,
            w: self.params.w,
            big_n: self.params.big_n,
            digits: self.digits,
            circle: self.circle,
            nodes: self.nodes,
            kmin: self.kmin,
            moments: self.values.iter().map(|z| DecimalComplex::new(z, self.digits as usize)).collect(),
        }
    }

    pub fn from_record(r: &MomentRecord) -> Result<Self> {
        let params = ModelParams::new(r.q0, r.q1, r.w, r.big_n, 0)?;
        let values = r.moments.iter().map(|d| d.parse::<T>()).collect::<Option<Vec<_>>>();
        let values = values.ok_or_else(|| Error::Domain("malformed decimal in moment record".into()))?;
        Ok(MomentTable {
            params,
            kmin: r.kmin,
            scale: values.iter().map(|z| c_abs(z).to_f64()).collect(),
            values,
            circle: r.circle,
            nodes: r.nodes,
            digits: r.digits,
        })
    }
}

/// Complex number with decimal-string parts, for precision-preserving JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecimalComplex {
    pub re: String,
    pub im: String,
}

impl DecimalComplex {
    pub fn new<T: Real>(z: &Complex<T>, digits: usize) -> Self {
        DecimalComplex { re: z.re.to_decimal(digits), im: z.im.to_decimal(digits) }
    }

    pub fn parse<T: Real>(&self) -> Option<Complex<T>> {
        Some(Complex::new(T::parse_decimal(&self.re)?, T::parse_decimal(&self.im)?))
    }
}

/// Serde adapter writing an f64 as its shortest round-trip decimal string.
pub mod decimal_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Num(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => t.trim().parse().map_err(serde::de::Error::custom),
            Raw::Num(x) => Ok(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    #[serde(with = "decimal_f64")]
    pub q0: f64,
    #[serde(with = "decimal_f64")]
    pub q1: f64,
    #[serde(with = "decimal_f64")]
    pub w: f64,
    pub big_n: u32,
    pub digits: u32,
    pub circle: Circle,
    pub nodes: usize,
    pub kmin: i64,
    pub moments: Vec<DecimalComplex>,
}

/// ∮ z^j (z−w)^{NQ1} (1+wz)^{−(N+NQ0−k)} z^{−(k+1+NQ1)} dz: the contour side of the
/// planar/contour duality, integrated directly.
pub fn duality_contour<T: Real>(p: &ModelParams<f64>, j: i64, k: i64, opts: &MomentOptions) -> Result<Complex<T>> {
    duality_contour_on(p, j, k, &Circle::standard(p.w), opts)
}

/// [`duality_contour`] on a caller-chosen admissible circle.
pub fn duality_contour_on<T: Real>(p: &ModelParams<f64>, j: i64, k: i64, circle: &Circle, opts: &MomentOptions) -> Result<Complex<T>> {
    let w = p.w;
    if !circle.encloses_cuts(w) {
        return Err(Error::Domain("contour must enclose [0,w] and exclude -1/w".into()));
    }
    let ci = circle_power_integrals::<T, _>(
        circle,
        j - k - 1,
        j - k - 1,
        |z| {
            let lin = Complex::<T>::one() + z * c_from::<T>(Complex::new(w, 0.0));
            base_weight(p, z) * c_powi(&lin, k)
        },
        opts,
    )?;
    Ok(ci.values.into_iter().next().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp::{Mp, Precision};

    #[test]
    fn unit_circle_monomials() {
        let c = Circle { center: 0.0, radius: 1.0 };
        let ci = circle_power_integrals::<f64, _>(&c, -3, 2, |_| Complex::new(1.0, 0.0), &MomentOptions::default()).unwrap();
        for (k, v) in (-3..=2).zip(&ci.values) {
            let expect = if k == -1 { 2.0 * std::f64::consts::PI } else { 0.0 };
            assert!((v - Complex::new(0.0, expect)).norm() < 1e-13, "k={k} {v}");
        }
    }

    #[test]
    fn extended_precision_matches_double() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 3, 3).unwrap();
        let d = MomentTable::<f64>::for_degree(&p, 4).unwrap();
        let _g = Precision::digits(50);
        let m = MomentTable::<Mp>::for_degree(&p, 4).unwrap();
        for (a, b) in d.to_f64().iter().zip(m.to_f64()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
        let rec = m.record();
        let back = MomentTable::<Mp>::from_record(&rec).unwrap();
        let diff = log10_abs(&(&back.values[1] - &m.values[1])) - log10_abs(&m.values[1]);
        assert!(diff < -45.0);
    }
}
