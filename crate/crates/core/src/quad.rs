//! Gauss–Legendre rules on [0, 1] and endpoint-clustering substitutions.

use gauss_quad::GaussLegendre;
use num_complex::Complex;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Rule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

/// n-point Gauss–Legendre on [0, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<Rule> {
    let gl = GaussLegendre::new(n).map_err(|_| Error::Quadrature(format!("bad Gauss-Legendre order {n}")))?;
    let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Rule { x: pairs.iter().map(|p| p.0).collect(), w: pairs.iter().map(|p| p.1).collect() })
}

/// Quintic smoothstep t(u) = 10u³ − 15u⁴ + 6u⁵ and its derivative.
///
/// Pulls back a t^{2/3}-type endpoint singularity to an analytic one.
pub fn smoothstep(u: f64) -> (f64, f64) {
    let v = 1.0 - u;
    let t = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    (t, 30.0 * u * u * v * v)
}

/// ∫ f(z) dz along the straight segment a→b.
pub fn segment(rule: &Rule, a: Complex<f64>, b: Complex<f64>, mut f: impl FnMut(Complex<f64>) -> Complex<f64>) -> Complex<f64> {
    let d = b - a;
    let mut acc = Complex::new(0.0, 0.0);
    for (x, w) in rule.x.iter().zip(&rule.w) {
        acc += f(a + d * *x) * *w;
    }
    acc * d
}

/// ∫ f(z) dz along a→b where f has a square-root zero at `a`; uses z = a + (b−a)v².
pub fn segment_sqrt_start(rule: &Rule, a: Complex<f64>, b: Complex<f64>, mut f: impl FnMut(Complex<f64>) -> Complex<f64>) -> Complex<f64> {
    let d = b - a;
    let mut acc = Complex::new(0.0, 0.0);
    for (x, w) in rule.x.iter().zip(&rule.w) {
        acc += f(a + d * (x * x)) * (2.0 * x * w);
    }
    acc * d
}

/// Adaptive ∫ f(z) dz along a→b by interval halving with a fixed rule.
pub fn adaptive_segment(
    rule: &Rule,
    a: Complex<f64>,
    b: Complex<f64>,
    tol: f64,
    f: &mut impl FnMut(Complex<f64>) -> Complex<f64>,
) -> Result<Complex<f64>> {
    fn rec(
        rule: &Rule,
        a: Complex<f64>,
        b: Complex<f64>,
        whole: Complex<f64>,
        tol: f64,
        depth: u32,
        f: &mut impl FnMut(Complex<f64>) -> Complex<f64>,
    ) -> Result<Complex<f64>> {
        let m = (a + b) * 0.5;
        let left = segment(rule, a, m, &mut *f);
        let right = segment(rule, m, b, &mut *f);
        let both = left + right;
        if (both - whole).norm() <= tol.max(1e-14 * both.norm()) {
            return Ok(both);
        }
        if depth == 0 {
            return Err(Error::Quadrature(format!("adaptive segment {a} -> {b} did not converge")));
        }
        Ok(rec(rule, a, m, left, tol / 2.0, depth - 1, f)? + rec(rule, m, b, right, tol / 2.0, depth - 1, f)?)
    }
    let whole = segment(rule, a, b, &mut *f);
    rec(rule, a, b, whole, tol, 40, f)
}
