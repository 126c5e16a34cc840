//! Planar pairings by 2D quadrature in polar coordinates about the origin.
//!
//! The radius is compactified by r = tan φ (equivalently r² = t/(1−t) with
//! t = sin²φ), which turns the (1+r²)^{−(NS+1)} decay into a power of cos φ.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quad::{gauss_legendre, Rule};

type C = Complex<f64>;

/// e^{−N V(z)} = |z−w|^{2NQ1} / (1+|z|²)^{N(1+Q0+Q1)+1}.
pub fn planar_weight(p: &ModelParams<f64>, z: C) -> f64 {
    let nf = p.big_n as f64;
    let d2 = (z - p.w).norm_sqr();
    d2.powf(nf * p.q1) * (1.0 + z.norm_sqr()).powf(-(nf * (1.0 + p.q0 + p.q1) + 1.0))
}

#[derive(Debug, Clone, Copy)]
pub struct PlanarOptions {
    /// Angular trapezoid nodes (integer exponents: exact above the trig degree).
    pub angular: usize,
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Geometric grading levels toward the insertion point (non-integer exponents).
    pub levels: usize,
}

impl Default for PlanarOptions {
    fn default() -> Self {
        PlanarOptions { angular: 128, order: 48, levels: 24 }
    }
}

fn graded(a: f64, b: f64, levels: usize, toward_b: bool) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0];
    for l in (0..levels).rev() {
        cuts.push(1.0 - 0.5f64.powi(l as i32 + 1));
    }
    cuts.push(1.0);
    let mut out: Vec<(f64, f64)> = cuts.windows(2).map(|c| (c[0], c[1])).collect();
    if !toward_b {
        out = out.into_iter().rev().map(|(x, y)| (1.0 - y, 1.0 - x)).collect();
    }
    out.into_iter().map(|(x, y)| (a + (b - a) * x, a + (b - a) * y)).collect()
}

fn panel_nodes(rule: &Rule, panels: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(panels.len() * rule.x.len());
    for &(a, b) in panels {
        for (x, w) in rule.x.iter().zip(&rule.w) {
            out.push((a + (b - a) * x, (b - a) * w));
        }
    }
    out
}

/// ∫_ℂ f(z) e^{−N V(z)} dA(z).
pub fn planar_integral(p: &ModelParams<f64>, f: impl Fn(C) -> C, opts: &PlanarOptions) -> Result<C> {
    let rule = gauss_legendre(opts.order)?;
    let nf = p.big_n as f64;
    let s = nf * (1.0 + p.q0 + p.q1);
    let phi_w = p.w.atan();
    let integer = p.integer_exponents().is_some();
    let (radial, angular): (Vec<(f64, f64)>, Vec<(f64, f64)>) = if integer {
        let rad = panel_nodes(&rule, &[(0.0, phi_w), (phi_w, 0.5 * PI)]);
        let m = opts.angular;
        let ang = (0..m).map(|k| (2.0 * PI * k as f64 / m as f64, 2.0 * PI / m as f64)).collect();
        (rad, ang)
    } else {
        let mut rp = graded(0.0, phi_w, opts.levels, true);
        rp.extend(graded(phi_w, 0.5 * PI, opts.levels, false));
        let mut ap = graded(-PI, 0.0, opts.levels, true);
        ap.extend(graded(0.0, PI, opts.levels, false));
        (panel_nodes(&rule, &rp), panel_nodes(&rule, &ap))
    };
    let mut acc = C::new(0.0, 0.0);
    for &(phi, wr) in &radial {
        let (sp, cp) = phi.sin_cos();
        let r = sp / cp;
        // r dr (1+r²)^{−(S+1)} = sin φ cos^{2S−1} φ dφ
        let jac = sp * cp.powf(2.0 * s - 1.0) * wr;
        if jac == 0.0 {
            continue;
        }
        let mut ring = C::new(0.0, 0.0);
        for &(th, wt) in &angular {
            let z = C::from_polar(r, th);
            ring += f(z) * ((z - p.w).norm_sqr().powf(nf * p.q1) * wt);
        }
        acc += ring * jac;
    }
    Ok(acc)
}

fn check_decay(p: &ModelParams<f64>, deg: i64) -> Result<()> {
    let nf = p.big_n as f64;
    if deg as f64 >= 2.0 * (nf + nf * p.q0) {
        return Err(Error::Domain(format!("planar integral of total degree {deg} diverges (needs < 2(N+NQ0))")));
    }
    Ok(())
}

/// ⟨z^j, (z−w)^k⟩_pl.
pub fn planar_moment(p: &ModelParams<f64>, j: i64, k: i64) -> Result<C> {
    check_decay(p, j + k)?;
    let w = p.w;
    planar_integral(p, |z| z.powi(j as i32) * (z - w).conj().powi(k as i32), &PlanarOptions::default())
}

/// ⟨z^i, z^j⟩_pl.
pub fn planar_gram(p: &ModelParams<f64>, i: i64, j: i64) -> Result<C> {
    check_decay(p, i + j)?;
    planar_integral(p, |z| z.powi(i as i32) * z.conj().powi(j as i32), &PlanarOptions::default())
}
