//! Global parametrix and leading-order predictions for P_{n,N}, h and ĥ.
//!
//! Write s = √((z−z1)(z−z2)), F1 = 2ρ/(bρ+z+s), F2 = (bρ+z+s)/(2az) and
//! σ_j² = ρ(−1 + 2aF_j − abF_j²), so σ1² = −F1(1−aF1)s and σ2² = F2(1−aF2)s.
//! The parametrix is
//!
//!   N = [[a1(1−aF1)/σ1, a1(1−aF2)/σ2], [−a·a2·F1/σ1, −a·a2·F2/σ2]],
//!   M = D∞^{−r0σ3} N D^{r0σ3},  D = √(ρ/a)/F1.
//!
//! s, σ1 and σ2 are continued together along polygonal routes that avoid Γ0,
//! starting at an anchor far right of c0 where σ1 = i√ρ·(1+o(1)) fixes N11 → 1.
//! σ2 is seeded from the jump σ2(z₊) = σ1(z₋) at the real crossing of Γ0, and
//! a2 = −σ2(∞) makes N22 → 1.

use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::solve_curve;
use crate::error::{Error, Result};
use crate::model::{require_precritical, ModelParams};
use crate::motherbody::{MotherBody, TraceOptions};
use crate::orthopoly::GroundTruth;
use crate::potential::PotentialData;

type C = Complex<f64>;

const I: C = C::new(0.0, 1.0);

/// Values of the continued branches at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branches {
    pub z: C,
    pub s: C,
    pub f1: C,
    pub f2: C,
    pub sigma1: C,
    pub sigma2: C,
}

#[derive(Debug, Clone)]
pub struct Parametrix {
    pub pd: PotentialData,
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    pub d_inf: f64,
    pub a1: C,
    pub a2: C,
    /// Minimum distance to Γ0 accepted by the field predictions.
    pub margin: f64,
    anchor: Branches,
    avoid: Vec<C>,
    gap: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldRow {
    pub re: f64,
    pub im: f64,
    pub big_n: u32,
    pub n: i64,
    pub abs_ratio_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroSummary {
    pub big_n: u32,
    pub n: i64,
    pub count: usize,
    pub max_distance: f64,
    pub mean_distance: f64,
    /// Largest relative gap between the zero-counting and μ0 Cauchy transforms at the probes.
    pub cauchy_discrepancy: f64,
    /// Sup-difference of projected zero CDF against the μ0 distribution along Γ0.
    pub ks: f64,
}

/// Two-sided boundary values on Γ0 at s(t), with the + side to the left of z1 → z2.
#[derive(Debug, Clone, Copy)]
pub struct JumpSample {
    pub t: f64,
    pub z: C,
    pub plus: Branches,
    pub minus: Branches,
}

fn pick(v: C, prev: C) -> C {
    let r = v.sqrt();
    if (r - prev).norm() <= (r + prev).norm() {
        r
    } else {
        -r
    }
}

impl Parametrix {
    pub fn build(p: &ModelParams<f64>) -> Result<Self> {
        require_precritical(p)?;
        let curve = solve_curve(p)?;
        let body = MotherBody::build(&curve, TraceOptions::default())?;
        Self::new(PotentialData::new(body)?)
    }

    pub fn new(pd: PotentialData) -> Result<Self> {
        let cv = &pd.body.curve;
        let m = cv.map;
        let (rho, a, b) = (m.rho, m.a, m.b);
        let sc = pd.scale();
        let za = C::new(cv.c0 + 10.0, 0.0);
        let avoid = vec![C::new(0.0, 0.0), cv.z1, cv.z2];
        let mut this = Parametrix {
            rho,
            a,
            b,
            d_inf: 1.0 / (rho * a).sqrt(),
            a1: I * rho.sqrt(),
            a2: C::new(0.0, 0.0),
            margin: 0.05 * sc,
            anchor: Branches { z: za, s: za, f1: za, f2: za, sigma1: za, sigma2: za },
            avoid,
            gap: 2e-3 * sc,
            pd,
        };
        let s = this.pd.body.curve.sqrt_disc(za);
        let (f1, f2) = this.sheets(za, s)?;
        let (h1, h2) = this.squares(f1, f2, s);
        if h1.re >= 0.0 || h2.re >= 0.0 {
            return Err(Error::Consistency(format!("branch squares at the anchor are not negative: {h1}, {h2}")));
        }
        this.anchor = Branches { z: za, s, f1, f2, sigma1: I * (-h1.re).sqrt(), sigma2: I * (-h2.re).sqrt() };
        this.seed_sigma2()?;
        let sign = this.anchor.sigma2.im.signum();
        this.a2 = -I * (sign * (rho * (b - a) / a).sqrt());
        Ok(this)
    }

    /// (F1, F2); F2 is NaN at its pole z = 0.
    fn sheets(&self, z: C, s: C) -> Result<(C, C)> {
        let br = C::new(self.b * self.rho, 0.0);
        let d = br + z + s;
        if d.norm() == 0.0 {
            return Err(Error::Pole(format!("F1 is singular at {z}")));
        }
        let f2 = if z.norm() == 0.0 { C::new(f64::NAN, f64::NAN) } else { d / (z * (2.0 * self.a)) };
        Ok((2.0 * self.rho / d, f2))
    }

    fn squares(&self, f1: C, f2: C, s: C) -> (C, C) {
        let a = self.a;
        (-f1 * (1.0 - f1 * a) * s, f2 * (1.0 - f2 * a) * s)
    }

    /// Continues (s, σ1, σ2) from `start` along `path` (path[0] = start.z).
    pub fn continue_along(&self, start: Branches, path: &[C]) -> Result<Branches> {
        self.continue_inner(start, path, true)
    }

    fn continue_inner(&self, start: Branches, path: &[C], second: bool) -> Result<Branches> {
        let (z1, z2) = (self.pd.body.curve.z1, self.pd.body.curve.z2);
        let mut cur = start;
        for seg in path.windows(2) {
            let (p, q) = (seg[0], seg[1]);
            let mut t = 0.0;
            let mut dt: f64 = 1.0 / 32.0;
            while t < 1.0 {
                let t1 = (t + dt).min(1.0);
                let z = p + (q - p) * t1;
                let s = pick((z - z1) * (z - z2), cur.s);
                let (f1, f2) = self.sheets(z, s)?;
                let (h1, h2) = self.squares(f1, f2, s);
                let s1 = pick(h1, cur.sigma1);
                let s2 = if second { pick(h2, cur.sigma2) } else { cur.sigma2 };
                let tracked = if second { 3 } else { 2 };
                let jump = [(s, cur.s), (s1, cur.sigma1), (s2, cur.sigma2)][..tracked]
                    .iter()
                    .map(|(x, y)| (x - y).norm() / y.norm())
                    .fold(0.0, f64::max);
                if jump > 0.25 {
                    dt /= 2.0;
                    if dt < 1e-14 {
                        return Err(Error::Branch(format!("square-root continuation stalled near {z}")));
                    }
                    continue;
                }
                cur = Branches { z, s, f1, f2, sigma1: s1, sigma2: s2 };
                t = t1;
                dt = (dt * 1.5).min(0.25);
            }
        }
        Ok(cur)
    }

    fn route(&self, z: C) -> Result<Vec<C>> {
        self.route_avoiding(z, &self.avoid)
    }

    fn route_avoiding(&self, z: C, avoid: &[C]) -> Result<Vec<C>> {
        self.pd
            .route_from(self.anchor.z, z, avoid, self.gap)
            .ok_or_else(|| Error::Branch(format!("no admissible continuation route to {z}")))
    }

    /// Branch values at `z` off Γ0 (and off 0, z1, z2).
    pub fn branches(&self, z: C) -> Result<Branches> {
        let r = self.route(z)?;
        self.continue_along(self.anchor, &r)
    }

    /// Like `branches` but tracks only the first sheet, so z = 0 is allowed;
    /// f2 and sigma2 are left unspecified.
    pub fn first_sheet(&self, z: C) -> Result<Branches> {
        let r = self.route_avoiding(z, &self.avoid[1..])?;
        let mut b = self.continue_inner(self.anchor, &r, false)?;
        b.f2 = C::new(f64::NAN, f64::NAN);
        b.sigma2 = b.f2;
        Ok(b)
    }

    /// Fixes the sign of σ2 at the anchor from σ2(x̂₊) = σ1(x̂₋).
    fn seed_sigma2(&mut self) -> Result<()> {
        let xhat = self.pd.body.real_crossing;
        let delta = 1e-4 * self.pd.scale();
        let minus = self.branches(C::new(xhat - delta, 0.0))?;
        let mid = C::new(0.5 * xhat, 0.0);
        let mut path = self.route(mid)?;
        path.push(C::new(xhat + delta, 0.0));
        let plus = self.continue_along(self.anchor, &path)?;
        let v = minus.sigma1;
        if (plus.sigma2 + v).norm() < (plus.sigma2 - v).norm() {
            self.anchor.sigma2 = -self.anchor.sigma2;
        }
        let seeded = if (plus.sigma2 + v).norm() < (plus.sigma2 - v).norm() { -plus.sigma2 } else { plus.sigma2 };
        if (seeded - v).norm() > 0.05 * v.norm() {
            return Err(Error::Consistency(format!("second-sheet seed mismatch at x̂: {seeded} vs {v}")));
        }
        Ok(())
    }

    pub fn d(&self, f1: C) -> C {
        (self.rho / self.a).sqrt() / f1
    }

    /// Global parametrix M at a point with the given branch values.
    pub fn m_matrix(&self, br: &Branches, r0: i64) -> [[C; 2]; 2] {
        let a = self.a;
        let d = self.d(br.f1);
        let dp = d.powi(r0 as i32);
        let dm = dp.inv();
        let ip = self.d_inf.powi(r0 as i32);
        let n11 = self.a1 * (1.0 - br.f1 * a) / br.sigma1;
        let n12 = self.a1 * (1.0 - br.f2 * a) / br.sigma2;
        let n21 = -self.a2 * a * br.f1 / br.sigma1;
        let n22 = -self.a2 * a * br.f2 / br.sigma2;
        [[n11 * dp / ip, n12 * dm / ip], [n21 * dp * ip, n22 * dm * ip]]
    }

    /// Two-sided boundary values at s(t) ∈ Γ0, each extrapolated from offsets δ and 2δ.
    pub fn jump_sample(&self, t: f64) -> Result<JumpSample> {
        let body = &self.pd.body;
        let (s, sp) = body.frame_at(t)?;
        let n = I * sp / sp.norm();
        let sc = self.pd.scale();
        let eta = 0.02 * sc;
        let delta = 1e-5 * sc;
        let side = |sign: f64| -> Result<Branches> {
            let q = s + n * (sign * eta);
            let mut path = self.route(q)?;
            path.push(s + n * (sign * 2.0 * delta));
            let far = self.continue_along(self.anchor, &path)?;
            let near = self.continue_along(far, &[far.z, s + n * (sign * delta)])?;
            let ex = |x: C, y: C| x * 2.0 - y;
            Ok(Branches {
                z: s,
                s: ex(near.s, far.s),
                f1: ex(near.f1, far.f1),
                f2: ex(near.f2, far.f2),
                sigma1: ex(near.sigma1, far.sigma1),
                sigma2: ex(near.sigma2, far.sigma2),
            })
        };
        Ok(JumpSample { t, z: s, plus: side(1.0)?, minus: side(-1.0)? })
    }

    /// Relative residual of M₊ = M₋·[[0, z^{−r0}], [−z^{r0}, 0]].
    pub fn jump_residual(&self, js: &JumpSample, r0: i64) -> f64 {
        let mp = self.m_matrix(&js.plus, r0);
        let mm = self.m_matrix(&js.minus, r0);
        let zp = js.z.powi(r0 as i32);
        let zm = zp.inv();
        let rhs = [[-mm[0][1] * zp, mm[0][0] * zm], [-mm[1][1] * zp, mm[1][0] * zm]];
        let scale = mp.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((mp[i][j] - rhs[i][j]).norm());
            }
        }
        worst / scale
    }

    fn check_margin(&self, z: C) -> Result<()> {
        let d = self.pd.body.distance_to_gamma0(z);
        if d < self.margin {
            return Err(Error::Domain(format!("{z} is within the margin {:.3e} of the mother body (distance {d:.3e})", self.margin)));
        }
        Ok(())
    }

    /// g at z; points on the auxiliary cut [c0, ∞) are nudged off it, which
    /// leaves e^{Ng} unchanged for integer N.
    fn g_at(&self, z: C) -> Result<C> {
        let cv = &self.pd.body.curve;
        let z = if z.im == 0.0 && z.re >= cv.c0 { C::new(z.re, 1e-13 * self.pd.scale()) } else { z };
        self.pd.eval_g(z)
    }

    /// M11 / e^{Ng} = (ρ/F1)^{r0}·a1(1−aF1)/σ1.
    pub fn prefactor(&self, br: &Branches, r0: i64) -> C {
        (self.rho / br.f1).powi(r0 as i32) * self.a1 * (1.0 - br.f1 * self.a) / br.sigma1
    }

    /// Logarithm of the predicted P_{n,N}(z), n = N + r0; the imaginary part is defined mod 2π.
    pub fn predict_p_log(&self, z: C, r0: i64, big_n: u32) -> Result<C> {
        self.check_margin(z)?;
        let br = self.first_sheet(z)?;
        Ok(self.prefactor(&br, r0).ln() + self.g_at(z)? * big_n as f64)
    }

    pub fn predict_p(&self, z: C, r0: i64, big_n: u32) -> Result<C> {
        Ok(self.predict_p_log(z, r0, big_n)?.exp())
    }

    /// √(ρF0′) with F0 = 1/F1, continued on its own from the anchor (→ 1 at ∞).
    pub fn sqrt_rho_f0_prime(&self, z: C) -> Result<C> {
        let m = &self.pd.body.curve.map;
        let q = |x: C| -> Result<C> {
            let f1 = self.pd.body.curve.inverse(x, 1)?;
            Ok(-self.rho / (m.f_prime(f1)? * f1 * f1))
        };
        let route = self.route_avoiding(z, &self.avoid[1..])?;
        let mut r = q(route[0])?.sqrt();
        if r.re < 0.0 {
            r = -r;
        }
        for seg in route.windows(2) {
            let (p, e) = (seg[0], seg[1]);
            let mut t = 0.0;
            let mut dt: f64 = 1.0 / 32.0;
            while t < 1.0 {
                let t1 = (t + dt).min(1.0);
                let v = pick(q(p + (e - p) * t1)?, r);
                if (v - r).norm() > 0.25 * r.norm() {
                    dt /= 2.0;
                    if dt < 1e-14 {
                        return Err(Error::Branch(format!("continuation of √(ρF0′) stalled at {z}")));
                    }
                    continue;
                }
                r = v;
                t = t1;
                dt = (dt * 1.5).min(0.25);
            }
        }
        Ok(r)
    }

    /// Exterior form (ρF0)^{r0} e^{Ng} √(ρF0′).
    pub fn predict_p_exterior_form(&self, z: C, r0: i64, big_n: u32) -> Result<C> {
        self.check_margin(z)?;
        let f1 = self.pd.body.curve.inverse(z, 1)?;
        let lead = (self.rho / f1).powi(r0 as i32) * self.sqrt_rho_f0_prime(z)?;
        Ok(lead * (self.g_at(z)? * big_n as f64).exp())
    }

    fn total(&self) -> f64 {
        self.pd.body.curve.params.total()
    }

    pub fn predict_h_log(&self, r0: i64, big_n: u32) -> f64 {
        let nf = big_n as f64;
        PI.ln() + 0.5 * (2.0 * PI / (nf * self.total())).ln() + (2 * r0 + 1) as f64 * self.rho.ln() + nf * self.pd.ell2d
    }

    pub fn predict_h(&self, r0: i64, big_n: u32) -> f64 {
        self.predict_h_log(r0, big_n).exp()
    }

    /// −2πi e^{Nℓ0} (ρa)^{r0} ρ √(a(b−a)).
    pub fn predict_hhat(&self, r0: i64, big_n: u32) -> C {
        let (rho, a, b) = (self.rho, self.a, self.b);
        let m = (big_n as f64 * self.pd.ell0).exp() * (rho * a).powi(r0 as i32) * rho * (a * (b - a)).sqrt();
        -I * (2.0 * PI * m)
    }

    /// P_{n+1,N}(0) ≈ ρ(ρb)^{r0} √(b(b−a)) e^{Ng(0)}.
    pub fn predict_p_next_at_zero(&self, r0: i64, big_n: u32) -> Result<C> {
        let (rho, b, a) = (self.rho, self.b, self.a);
        let g0 = self.pd.eval_g(C::new(0.0, 0.0))?;
        Ok((g0 * big_n as f64).exp() * (rho * (rho * b).powi(r0 as i32) * (b * (b - a)).sqrt()))
    }

    /// Leading Stirling form of Γ(NQ0−r0)Γ(N(1+Q1)+r0+1)/Γ(N(1+Q0+Q1)+1).
    pub fn stirling_gamma_log(&self, r0: i64, big_n: u32) -> f64 {
        let p = &self.pd.body.curve.params;
        let nf = big_n as f64;
        let (q0, q1, s) = (p.q0, p.q1, p.total());
        let r = r0 as f64;
        0.5 * (2.0 * PI / nf).ln() + (nf * q0 - r - 0.5) * q0.ln() + (nf * (1.0 + q1) + r + 0.5) * (1.0 + q1).ln() - (nf * s + 0.5) * s.ln()
    }

    /// h rebuilt from the ĥ and P_{n+1}(0) predictions through the norm chain
    /// h = −G·ĥ·w^{−(N+NQ0)}/(2i·P_{n+1}(0)) with the Stirling form of G.
    pub fn predict_h_via_chain(&self, r0: i64, big_n: u32) -> Result<C> {
        let p = &self.pd.body.curve.params;
        let nf = big_n as f64;
        let log_w = -(nf * (1.0 + p.q0)) * p.w.ln();
        let g = (self.stirling_gamma_log(r0, big_n) + log_w).exp();
        let p0 = self.predict_p_next_at_zero(r0, big_n)?;
        Ok(-self.predict_hhat(r0, big_n) * g / (I * 2.0 * p0))
    }

    /// Default probe grid: 12 points each on the images of |u| = 0.5 and 0.8,
    /// 8 real points beyond c0, and the points of f(|u| = 1.15) that still lie
    /// on the first sheet between ∂Ω and Γ0 with the margin respected.
    pub fn default_grid(&self) -> Result<Vec<C>> {
        let cv = &self.pd.body.curve;
        let ring = |r: f64, k: usize| C::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / 12.0);
        let mut pts = Vec::new();
        for r in [0.5, 0.8] {
            for k in 0..12 {
                pts.push(cv.map.f(ring(r, k))?);
            }
        }
        let sc = self.pd.scale();
        for k in 0..8 {
            pts.push(C::new(cv.c0 + 0.25 * sc * (k + 1) as f64, 0.0));
        }
        for k in 0..12 {
            let u = ring(1.15, k);
            let z = cv.map.f(u)?;
            let back = cv.inverse(z, 1)?;
            if (back - u).norm() < 1e-8 && self.pd.body.distance_to_gamma0(z) >= self.margin && !self.pd.is_exterior(z) {
                pts.push(z);
            }
        }
        Ok(pts)
    }

    /// |predicted/actual − 1| for each grid point and each ground truth.
    pub fn compare_field(&self, grid: &[C], truths: &[&GroundTruth]) -> Result<Vec<FieldRow>> {
        let per_point: Vec<Result<Vec<FieldRow>>> = grid
            .par_iter()
            .map(|&z| {
                self.check_margin(z)?;
                let br = self.first_sheet(z)?;
                let g = self.g_at(z)?;
                truths
                    .iter()
                    .map(|gt| {
                        let big_n = gt.params.big_n;
                        let r0 = gt.n - big_n as i64;
                        let pred = self.prefactor(&br, r0).ln() + g * big_n as f64;
                        let actual: C = gt.zeros.iter().map(|r| (z - r).ln()).sum();
                        let err = ((pred - actual).exp() - 1.0).norm();
                        Ok(FieldRow { re: z.re, im: z.im, big_n, n: gt.n, abs_ratio_err: err })
                    })
                    .collect()
            })
            .collect();
        let mut rows = Vec::new();
        for r in per_point {
            rows.extend(r?);
        }
        Ok(rows)
    }

    /// Zero statistics against μ0: distances to Γ0, Cauchy transform gap at
    /// the |u| = 0.5 probes and the CDF sup-difference of projected zeros.
    pub fn zero_measure_compare(&self, gt: &GroundTruth) -> Result<ZeroSummary> {
        let body = &self.pd.body;
        let zs = &gt.zeros;
        if zs.is_empty() {
            return Err(Error::Domain("no zeros to compare".into()));
        }
        let count = zs.len();
        let dists: Vec<f64> = zs.iter().map(|z| body.distance_to_gamma0(*z)).collect();
        let max_distance = dists.iter().cloned().fold(0.0, f64::max);
        let mean_distance = dists.iter().sum::<f64>() / count as f64;
        let cv = &body.curve;
        let mut cauchy_discrepancy: f64 = 0.0;
        for k in 0..10 {
            let z = cv.map.f(C::from_polar(0.5, 2.0 * PI * (k as f64 + 0.5) / 10.0))?;
            let c_mu = self.pd.cauchy_mu0(z)?;
            let c_zeros: C = zs.iter().map(|r| (z - r).inv()).sum::<C>() / count as f64;
            cauchy_discrepancy = cauchy_discrepancy.max((c_zeros - c_mu).norm() / c_mu.norm());
        }
        let mut cdf: Vec<f64> = zs.iter().map(|z| body.cdf_at(*z)).collect();
        cdf.sort_by(f64::total_cmp);
        let nf = count as f64;
        let ks = cdf.iter().enumerate().map(|(i, x)| ((i + 1) as f64 / nf - x).max(x - i as f64 / nf)).fold(0.0, f64::max);
        Ok(ZeroSummary { big_n: gt.params.big_n, n: gt.n, count, max_distance, mean_distance, cauchy_discrepancy, ks })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pick_follows_previous_value() {
        let prev = C::new(0.0, -1.0);
        assert!((pick(C::new(-1.0, 0.01), prev) - prev).norm() < 0.01);
    }
}
