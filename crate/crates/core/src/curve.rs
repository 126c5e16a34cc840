//! Conformal map of the droplet exterior, the spectral curve, and branch-aware
//! evaluators for F1/F2, S1/S2, √R and √R0.
//!
//! Every square root of (z−z1)(z−z2) goes through [`Cut`]: before the
//! mother-body arc is known the cut is the straight segment z1→z2, afterwards
//! the curve is rebound to the traced arc with [`SpectralCurve::with_cut`].

use num_complex::Complex;
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{require_precritical, ModelParams};

const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX: usize = 60;
const SCAN_POINTS: usize = 6000;

fn c<T: Float>(x: f64) -> T {
    T::from(x).unwrap()
}

fn cr<T: Float>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConformalMap<T> {
    pub rho: T,
    pub a: T,
    pub b: T,
    pub v0: T,
    pub u1: Complex<T>,
    pub u2: Complex<T>,
}

impl<T: Float> ConformalMap<T> {
    /// Builds the map from (ρ, a, b) and locates v0 with f(v0) = w.
    pub fn new(rho: T, a: T, b: T, w: T) -> Result<Self> {
        let (zero, one) = (T::zero(), T::one());
        if !(rho > zero && a > zero && a < one && a < b) {
            return Err(Error::Consistency(format!(
                "map parameters violate rho>0, 0<a<1, a<b: rho={:?} a={:?} b={:?}",
                rho.to_f64(),
                a.to_f64(),
                b.to_f64()
            )));
        }
        // a w v^2 - (w + ρ b) v + ρ = 0
        let qa = a * w;
        let qb = -(w + rho * b);
        let disc = qb * qb - c::<T>(4.0) * qa * rho;
        if disc < zero {
            return Err(Error::Consistency("f(v) = w has no real solution".into()));
        }
        let sq = disc.sqrt();
        // stable pair of roots
        let q = -(qb - sq) / c::<T>(2.0);
        let r1 = q / qa;
        let r2 = rho / q;
        let v0 = [r1, r2]
            .into_iter()
            .find(|v| *v > zero && *v < one)
            .ok_or_else(|| Error::Consistency("no preimage of w inside (0,1)".into()))?;
        let im = (b / a - one).sqrt() / b;
        let re = one / b;
        Ok(ConformalMap { rho, a, b, v0, u1: Complex::new(re, -im), u2: Complex::new(re, im) })
    }

    pub fn f(&self, u: Complex<T>) -> Result<Complex<T>> {
        let one = T::one();
        let d = u * (cr(one) - u * self.a);
        if d.norm() == T::zero() {
            return Err(Error::Pole("f has poles at 0 and 1/a".into()));
        }
        Ok((cr(one) - u * self.b) * self.rho / d)
    }

    pub fn f_prime(&self, u: Complex<T>) -> Result<Complex<T>> {
        let one = T::one();
        let d = u * (cr(one) - u * self.a);
        if d.norm() == T::zero() {
            return Err(Error::Pole("f' has poles at 0 and 1/a".into()));
        }
        let num = cr(-one) + u * (self.a + self.a) - u * u * (self.a * self.b);
        Ok(num * self.rho / (d * d))
    }

    pub fn deck(&self, u: Complex<T>) -> Result<Complex<T>> {
        let one = T::one();
        let d = u - cr(one / self.b);
        if d.norm() == T::zero() {
            return Err(Error::Pole("deck has a pole at 1/b".into()));
        }
        Ok(u / d * ((self.a - self.b) / (self.a * self.b)) + cr(one / self.a))
    }

    /// Samples u_j = f(e^{iθ_j}) together with f(e^{−iθ_j}).
    pub fn boundary(&self, m: usize) -> Result<Vec<(Complex<T>, Complex<T>)>> {
        if m < 16 {
            return Err(Error::Domain("boundary grid needs at least 16 points".into()));
        }
        let two_pi = c::<T>(std::f64::consts::TAU);
        (0..m)
            .map(|j| {
                let th = two_pi * T::from(j).unwrap() / T::from(m).unwrap();
                let e = Complex::new(th.cos(), th.sin());
                Ok((self.f(e)?, self.f(e.conj())?))
            })
            .collect()
    }

    /// Recorded only: b < 1 exactly when 0 lies inside the droplet.
    pub fn origin_inside(&self) -> bool {
        self.b < T::one()
    }
}

/// Branch cut for √((z−z1)(z−z2)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Cut<T> {
    Straight,
    /// Open polyline from z1 to z2.
    Arc(Vec<Complex<T>>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralCurve<T> {
    pub params: ModelParams<T>,
    pub map: ConformalMap<T>,
    pub z1: Complex<T>,
    pub z2: Complex<T>,
    pub c0: T,
    /// Zero of S1, f(b).
    pub fb: T,
    /// P4 coefficients, ascending powers.
    pub quartic: [T; 5],
    pub cut: Cut<T>,
    #[serde(skip)]
    bbox: Option<[T; 4]>,
}

type Poly<T> = Vec<T>;

fn pmul<T: Float>(a: &[T], b: &[T]) -> Poly<T> {
    let mut r = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            r[i + j] = r[i + j] + *x * *y;
        }
    }
    r
}

fn padd<T: Float>(a: &[T], b: &[T]) -> Poly<T> {
    let n = a.len().max(b.len());
    (0..n).map(|i| *a.get(i).unwrap_or(&T::zero()) + *b.get(i).unwrap_or(&T::zero())).collect()
}

fn pscale<T: Float>(a: &[T], s: T) -> Poly<T> {
    a.iter().map(|x| *x * s).collect()
}

fn peval<T: Float>(a: &[T], x: T) -> T {
    a.iter().rev().fold(T::zero(), |acc, k| acc * x + *k)
}

fn pderiv<T: Float>(a: &[T]) -> Poly<T> {
    a.iter().enumerate().skip(1).map(|(i, k)| *k * T::from(i).unwrap()).collect()
}

/// Pieces of P4(z; t) = A(z) + 4κ t D(z).
struct QuarticParts<T> {
    a: Poly<T>,
    d: Poly<T>,
    kappa: T,
}

fn quartic_parts<T: Float>(p: &ModelParams<T>) -> QuarticParts<T> {
    let one = T::one();
    let s = p.total();
    let (ca, cb, cc) = ((one + p.q0) / s, p.q1 / s, (one + p.q1) / s);
    let zw = [-p.w, one];
    let ziw = [one / p.w, one];
    let zz = [T::zero(), one];
    let q3 = padd(&padd(&pscale(&pmul(&zw, &zz), ca), &pscale(&pmul(&ziw, &zz), cb)), &pscale(&pmul(&zw, &ziw), cc));
    let d = pmul(&pmul(&zw, &ziw), &zz);
    let four_k = c::<T>(4.0) * cc;
    let a = padd(&pmul(&q3, &q3), &pscale(&pmul(&zz, &d), -four_k));
    QuarticParts { a, d, kappa: cc }
}

fn quartic_at<T: Float>(qp: &QuarticParts<T>, t: T) -> [T; 5] {
    let full = padd(&qp.a, &pscale(&qp.d, c::<T>(4.0) * qp.kappa * t));
    let mut out = [T::zero(); 5];
    for (i, v) in full.iter().enumerate().take(5) {
        out[i] = *v;
    }
    out
}

/// Candidate (t, c0) pairs: critical points of t(z) = −A/(4κD) on (w, ∞).
fn scan_candidates<T: Float>(p: &ModelParams<T>, qp: &QuarticParts<T>) -> Vec<(T, T)> {
    // t'(z) = 0  <=>  A'D − AD' = 0
    let h = padd(&pmul(&pderiv(&qp.a), &qp.d), &pscale(&pmul(&qp.a, &pderiv(&qp.d)), -T::one()));
    let lo = p.w.to_f64().unwrap();
    let span = 1e4 * (1.0 + 1.0 / lo + lo);
    let xs: Vec<T> = (0..=SCAN_POINTS)
        .map(|i| {
            let s = i as f64 / SCAN_POINTS as f64;
            c(lo + (span * 1e-9) * (1e13f64).powf(s))
        })
        .collect();
    let mut out = Vec::new();
    for win in xs.windows(2) {
        let (x0, x1) = (win[0], win[1]);
        let (h0, h1) = (peval(&h, x0), peval(&h, x1));
        if h0 == T::zero() || (h0 < T::zero()) != (h1 < T::zero()) {
            let (mut l, mut r, mut hl) = (x0, x1, h0);
            for _ in 0..200 {
                let m = (l + r) / c(2.0);
                let hm = peval(&h, m);
                if (hm < T::zero()) == (hl < T::zero()) {
                    l = m;
                    hl = hm;
                } else {
                    r = m;
                }
                if (r - l) <= T::epsilon() * r {
                    break;
                }
            }
            let z = (l + r) / c(2.0);
            let t = -peval(&qp.a, z) / (c::<T>(4.0) * qp.kappa * peval(&qp.d, z));
            out.push((t, z));
        }
    }
    out
}

/// Solves the spectral curve from (Q0, Q1, w).
pub fn solve_curve<T: Float>(p: &ModelParams<T>) -> Result<SpectralCurve<T>> {
    require_precritical(p)?;
    let qp = quartic_parts(p);
    let cands = scan_candidates(p, &qp);
    let mut good = Vec::new();
    let mut reasons = Vec::new();
    for (t, z) in cands {
        match polish(p, &qp, t, z).and_then(|(t, c0)| assemble(p, &qp, t, c0)) {
            Ok(curve) => good.push(curve),
            Err(e) => reasons.push(e.to_string()),
        }
    }
    match good.len() {
        1 => Ok(good.pop().unwrap()),
        0 => Err(Error::Solver(format!("no admissible double root; rejected candidates: {reasons:?}"))),
        k => Err(Error::Solver(format!(
            "{k} admissible double-root candidates at t = {:?}",
            good.iter().map(|g| g.fb.to_f64()).collect::<Vec<_>>()
        ))),
    }
}

/// Newton polish seeded from a previous solution's (f(b), c0).
pub fn solve_curve_seeded<T: Float>(p: &ModelParams<T>, t: T, c0: T) -> Result<SpectralCurve<T>> {
    require_precritical(p)?;
    let qp = quartic_parts(p);
    let (t, c0) = polish(p, &qp, t, c0)?;
    assemble(p, &qp, t, c0)
}

fn polish<T: Float>(p: &ModelParams<T>, qp: &QuarticParts<T>, t0: T, z0: T) -> Result<(T, T)> {
    let four_k = c::<T>(4.0) * qp.kappa;
    let dd = pderiv(&qp.d);
    let (mut t, mut z) = (t0, z0);
    let tol = c::<T>(NEWTON_TOL);
    for _ in 0..NEWTON_MAX {
        let q = quartic_at(qp, t);
        let q1 = pderiv(&q);
        let q2 = pderiv(&q1);
        let f0 = peval(&q, z);
        let f1 = peval(&q1, z);
        if f0.abs() < tol && f1.abs() < tol {
            break;
        }
        // Jacobian in (t, z)
        let j11 = four_k * peval(&qp.d, z);
        let j12 = f1;
        let j21 = four_k * peval(&dd, z);
        let j22 = peval(&q2, z);
        let det = j11 * j22 - j12 * j21;
        if det == T::zero() {
            return Err(Error::Solver("singular Jacobian in double-root Newton".into()));
        }
        let dt = (f0 * j22 - j12 * f1) / det;
        let dz = (j11 * f1 - j21 * f0) / det;
        t = t - dt;
        z = z - dz;
    }
    let q = quartic_at(qp, t);
    let f0 = peval(&q, z).abs();
    let f1 = peval(&pderiv(&q), z).abs();
    let scale = c::<T>(1e3);
    if !(f0 < tol * scale && f1 < tol * scale) {
        return Err(Error::Solver(format!("double-root Newton stalled, residuals {:?}, {:?}", f0.to_f64(), f1.to_f64())));
    }
    if z <= p.w {
        return Err(Error::Solver("node not to the right of w".into()));
    }
    Ok((t, z))
}

fn assemble<T: Float>(p: &ModelParams<T>, qp: &QuarticParts<T>, t: T, c0: T) -> Result<SpectralCurve<T>> {
    let one = T::one();
    let two = c::<T>(2.0);
    let quartic = quartic_at(qp, t);
    let lead = quartic[4];
    let pp = quartic[3] / lead + two * c0;
    let qq = quartic[0] / (lead * c0 * c0);
    let disc = qq - pp * pp / c::<T>(4.0);
    if disc <= T::zero() {
        return Err(Error::Solver("remaining quartic roots are real; leaving the pre-critical phase".into()));
    }
    let z1 = Complex::new(-pp / two, disc.sqrt());
    let z2 = z1.conj();
    // coefficient-wise identity P4 = lead (z−c0)^2 (z^2 + pp z + qq)
    let rebuilt = pscale(&pmul(&[c0 * c0, -two * c0, one], &[qq, pp, one]), lead);
    let scale = quartic.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let resid = quartic.iter().zip(&rebuilt).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()));
    if resid > c::<T>(1e-10) * scale {
        return Err(Error::Consistency(format!("quartic factorization residual {:?}", (resid / scale).to_f64())));
    }
    let mod1 = z1.norm();
    let k = (one + p.q1) / p.q0;
    let rho = (k * (z1.re + mod1) / (two * mod1)).sqrt();
    let b = mod1 / rho;
    let a = (z1.re / rho + b) / two;
    let map = ConformalMap::new(rho, a, b, p.w)?;
    let curve = SpectralCurve { params: *p, map, z1, z2, c0, fb: t, quartic, cut: Cut::Straight, bbox: None };
    curve.check_invariants()?;
    Ok(curve)
}

impl<T: Float> SpectralCurve<T> {
    fn check_invariants(&self) -> Result<()> {
        let one = T::one();
        let p = &self.params;
        let m = &self.map;
        let tol = c::<T>(1e-9);
        let rel = |x: T, y: T| (x - y).abs() / y.abs().max(T::min_positive_value());
        let ratio = m.b * m.rho * m.rho / m.a;
        if rel(ratio, (one + p.q1) / p.q0) > tol {
            return Err(Error::Consistency("b rho^2 / a relation".into()));
        }
        if rel(self.c0, (one + p.q1) / (p.q0 * self.z1.norm())) > tol {
            return Err(Error::Consistency("node location vs branch point modulus".into()));
        }
        let fv = m.f(cr(m.v0))?;
        let fi = m.f(cr(one / m.v0))?;
        if (fv - cr(p.w)).norm() > tol * p.w || (fv * fi + one).norm() > tol {
            return Err(Error::Consistency("f(v0) = w, f(v0) f(1/v0) = -1".into()));
        }
        if !(self.c0 > p.w) || self.z1.im == T::zero() {
            return Err(Error::Consistency("c0 > w and Im z1 != 0".into()));
        }
        Ok(())
    }

    /// Rebinds the square-root cut to a traced arc from z1 to z2.
    pub fn with_cut(&self, arc: Vec<Complex<T>>) -> Self {
        let mut out = self.clone();
        let mut bb = [T::infinity(), T::neg_infinity(), T::infinity(), T::neg_infinity()];
        for z in arc.iter().chain([self.z1, self.z2].iter()) {
            bb[0] = bb[0].min(z.re);
            bb[1] = bb[1].max(z.re);
            bb[2] = bb[2].min(z.im);
            bb[3] = bb[3].max(z.im);
        }
        out.bbox = Some(bb);
        out.cut = Cut::Arc(arc);
        out
    }

    pub fn straight(&self) -> Self {
        let mut out = self.clone();
        out.cut = Cut::Straight;
        out.bbox = None;
        out
    }

    /// Region between the straight segment and the arc, where the two branches differ.
    fn flipped(&self, z: Complex<T>) -> bool {
        let arc = match &self.cut {
            Cut::Straight => return false,
            Cut::Arc(a) => a,
        };
        let x = self.z1.re;
        if let Some(bb) = self.bbox {
            if z.re < bb[0].min(x) || z.re > bb[1].max(x) || z.im < bb[2] || z.im > bb[3] {
                return false;
            }
        }
        // crossing count of a horizontal ray to the right over arc + closing segment z2→z1
        let mut inside = false;
        let closing = [self.z2, self.z1];
        let mut test = |a: Complex<T>, b: Complex<T>| {
            if (a.im > z.im) != (b.im > z.im) {
                let xc = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
                if z.re < xc {
                    inside = !inside;
                }
            }
        };
        for s in arc.windows(2) {
            test(s[0], s[1]);
        }
        test(arc[arc.len() - 1], closing[0]);
        test(closing[0], closing[1]);
        test(closing[1], arc[0]);
        inside
    }

    /// √((z−z1)(z−z2)) with the active cut, ~ z at ∞.
    pub fn sqrt_disc(&self, z: Complex<T>) -> Complex<T> {
        let x = self.z1.re;
        let y = self.z1.im;
        let u = z - cr(x);
        let s = if u.norm() == T::zero() { Complex::new(T::zero(), y.abs()) } else { u * (cr(T::one()) + cr(y * y) / (u * u)).sqrt() };
        if self.flipped(z) {
            -s
        } else {
            s
        }
    }

    pub fn p1(&self, z: Complex<T>) -> Complex<T> {
        let p = &self.params;
        let one = T::one();
        let s = p.total();
        (z + cr(one / p.w)).inv() * ((one + p.q0) / s) + (z - cr(p.w)).inv() * (p.q1 / s) + z.inv() * ((one + p.q1) / s)
    }

    pub fn p2(&self, z: Complex<T>) -> Complex<T> {
        let p = &self.params;
        let one = T::one();
        let k = (one + p.q1) / p.total();
        (z - cr(self.fb)) * k / ((z - cr(p.w)) * (z + cr(one / p.w)) * z)
    }

    fn pole_check(&self, z: Complex<T>) -> Result<()> {
        let p = &self.params;
        for q in [T::zero(), p.w, -T::one() / p.w] {
            if (z - cr(q)).norm() == T::zero() {
                return Err(Error::Pole(format!("pole of the spectral curve at {:?}", q.to_f64())));
            }
        }
        Ok(())
    }

    /// Rational R = P1² − 4P2.
    pub fn r(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.pole_check(z)?;
        let p1 = self.p1(z);
        Ok(p1 * p1 - self.p2(z) * c::<T>(4.0))
    }

    pub fn r0(&self, z: Complex<T>) -> Result<Complex<T>> {
        let s = self.params.total();
        Ok(self.r(z)? * (s * s))
    }

    /// √R with cut on the active arc, ~ Q0/((1+Q0+Q1) z) at ∞.
    pub fn sqrt_r(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.pole_check(z)?;
        let p = &self.params;
        let one = T::one();
        let pre = p.q0 / p.total();
        Ok(self.sqrt_disc(z) * (z - cr(self.c0)) * pre / (z * (z - cr(p.w)) * (z + cr(one / p.w))))
    }

    pub fn sqrt_r0(&self, z: Complex<T>) -> Result<Complex<T>> {
        Ok(self.sqrt_r(z)? * self.params.total())
    }

    /// Spherical Schwarz function on the given sheet (1 or 2).
    pub fn schwarz(&self, z: Complex<T>, sheet: u8) -> Result<Complex<T>> {
        let half = c::<T>(0.5);
        let sr = self.sqrt_r(z)?;
        let p1 = self.p1(z);
        match sheet {
            1 => Ok((p1 - sr) * half),
            2 => Ok((p1 + sr) * half),
            _ => Err(Error::Domain("sheet must be 1 or 2".into())),
        }
    }

    /// Inverse branches of f: F1 ~ ρ/z and F2 ~ 1/a at ∞.
    pub fn inverse(&self, z: Complex<T>, sheet: u8) -> Result<Complex<T>> {
        let m = &self.map;
        let s = self.sqrt_disc(z);
        let br = cr(m.b * m.rho);
        match sheet {
            1 => {
                let d = br + z + s;
                if d.norm() == T::zero() {
                    return Err(Error::Pole("F1 denominator vanished".into()));
                }
                Ok(cr(m.rho + m.rho) / d)
            }
            2 => {
                if z.norm() == T::zero() {
                    return Err(Error::Pole("F2 has a pole at 0".into()));
                }
                Ok((br + z + s) / (z * (m.a + m.a)))
            }
            _ => Err(Error::Domain("sheet must be 1 or 2".into())),
        }
    }

    /// Schwarz function through the inverse map, f(1/F)/(1 + z f(1/F)).
    pub fn schwarz_via_map(&self, z: Complex<T>, sheet: u8) -> Result<Complex<T>> {
        let u = self.inverse(z, sheet)?;
        let g = self.map.f(u.inv())?;
        Ok(g / (cr(T::one()) + z * g))
    }
}
