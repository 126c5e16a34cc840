//! Potentials of μ0 and of the droplet measure ν0.
//!
//! g is the complex log potential ∫log(z−s)dμ0(s) with the logarithm cut
//! along Γ0 ∪ Γ1 ∪ [c0, ∞): for each node s the cut of log(z−s) runs back
//! along Γ0 to z1, then along Γ1 and the real axis. Numerically the value at
//! the first node is fixed by a region test and the remaining nodes are
//! unwrapped in order along the arc. With this convention log z itself has
//! argument in (0, 2π) at infinity.
//!
//! The droplet side works in the disk coordinate u = F1(z): the primitive of
//! S1 pulled back by f is rational in u, so 𝒰 and ℓ_2D reduce to path
//! integrals inside the unit disk with an explicit logarithmic tail at u = 0.

use std::f64::consts::{PI, TAU};

use num_complex::Complex;

use crate::curve::SpectralCurve;
use crate::error::{Error, Result};
use crate::model::{log_potential_deriv, log_potential_re};
use crate::motherbody::{polyline_distance, MotherBody};
use crate::quad::{self, Rule};

type C = Complex<f64>;

const NEAR_CUT: f64 = 1e-6;
const PATH_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct PotentialData {
    pub body: MotherBody,
    pub ell0: f64,
    /// Largest deviation of the Frostman constant over ten further Γ0 probes.
    pub ell0_spread: f64,
    pub ell2d: f64,
    /// Boundary anchor f(1).
    pub z0: C,
    rule: Rule,
    scale: f64,
}

fn segments_cross(a: C, b: C, c: C, d: C) -> bool {
    let cross = |o: C, p: C, q: C| ((p - o) * (q - o).conj()).im;
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

/// log z with argument in (0, 2π].
pub fn log_slit_positive(z: C) -> C {
    let mut l = z.ln();
    if l.im <= 0.0 {
        l.im += TAU;
    }
    l
}

impl PotentialData {
    pub fn new(body: MotherBody) -> Result<Self> {
        let rule = quad::gauss_legendre(16)?;
        let cv = &body.curve;
        let scale = cv.c0.max(1.0 / cv.params.w).max(cv.z1.norm());
        let z0 = cv.map.f(C::new(1.0, 0.0))?;
        let mut pd = PotentialData { body, ell0: 0.0, ell0_spread: 0.0, ell2d: 0.0, z0, rule, scale };
        let xhat = pd.body.real_crossing;
        pd.ell0 = -pd.frostman_sum(0.5)?;
        let mut spread: f64 = 0.0;
        for k in 0..10 {
            let t = (k as f64 + 0.5) / 10.0;
            spread = spread.max((-pd.frostman_sum(t)? - pd.ell0).abs());
        }
        pd.ell0_spread = spread;
        if spread > 1e-7 {
            return Err(Error::Consistency(format!("Frostman constant varies by {spread:.3e} along the mother body (x̂ = {xhat})")));
        }
        pd.ell2d = pd.compute_ell2d()?;
        Ok(pd)
    }

    fn params(&self) -> &crate::model::ModelParams<f64> {
        &self.body.curve.params
    }

    /// 2U^{μ0} + Re 𝒱 at s(t) ∈ Γ0.
    fn frostman_sum(&self, t: f64) -> Result<f64> {
        let s = self.body.point_at(t)?;
        Ok(2.0 * self.u_on_gamma0(t)? + log_potential_re(self.params(), s))
    }

    /// U^{μ0}(s(t)) by subtracting the log singularity in the t variable.
    pub fn u_on_gamma0(&self, t0: f64) -> Result<f64> {
        if !(t0 > 0.0 && t0 < 1.0) {
            return Err(Error::Domain("Frostman probe must be interior to the mother body".into()));
        }
        let s0 = self.body.point_at(t0)?;
        let mu = &self.body.mu;
        let mut acc = 0.0;
        for j in 0..mu.s.len() {
            let dt = t0 - mu.t[j];
            if dt == 0.0 {
                return Err(Error::Domain("Frostman probe coincides with a quadrature node".into()));
            }
            acc += mu.weight[j] * ((s0 - mu.s[j]).norm() / dt.abs()).ln();
        }
        let closed = t0 * t0.ln() + (1.0 - t0) * (1.0 - t0).ln() - 1.0;
        Ok(-(acc + closed))
    }

    /// U^{μ0}(z) = −∫log|z−s|dμ0 by the plain node rule (accurate away from Γ0).
    pub fn u_mu0(&self, z: C) -> f64 {
        -self.body.integrate(|s| C::new((z - s).norm().ln(), 0.0)).re
    }

    /// 2U^{μ0} + Re 𝒱 + ℓ0; zero on Γ0 and positive on the rest of Γ.
    pub fn frostman_residual(&self, z: C) -> f64 {
        2.0 * self.u_mu0(z) + log_potential_re(self.params(), z) + self.ell0
    }

    fn check_cut(&self, z: C) -> Result<()> {
        let b = &self.body;
        if b.distance_to_gamma0(z) < NEAR_CUT * self.scale {
            return Err(Error::Branch(format!("{z} is on or next to the mother body")));
        }
        if polyline_distance(&b.gamma1.points, z) < 1e-12 * self.scale {
            return Err(Error::Branch(format!("{z} lies on the ascent path")));
        }
        if z.im == 0.0 && z.re >= b.curve.c0 {
            return Err(Error::Branch(format!("{z} lies on [c0, inf)")));
        }
        Ok(())
    }

    /// Parity of crossings of the upward vertical ray from `z` with the
    /// leftward ray from z1, Γ1 and [c0, ∞).
    fn below_cut(&self, z: C) -> bool {
        let b = &self.body;
        let z1 = b.curve.z1;
        let mut odd = false;
        if z.re < z1.re && z.im < z1.im {
            odd = !odd;
        }
        if z.re > b.curve.c0 && z.im < 0.0 {
            odd = !odd;
        }
        for s in b.gamma1.points.windows(2) {
            let (p, q) = (s[0], s[1]);
            if (p.re <= z.re) != (q.re <= z.re) {
                let y = p.im + (z.re - p.re) * (q.im - p.im) / (q.re - p.re);
                if y > z.im {
                    odd = !odd;
                }
            }
        }
        odd
    }

    /// g(z) = ∫ log(z−s) dμ0(s).
    pub fn eval_g(&self, z: C) -> Result<C> {
        self.check_cut(z)?;
        let mu = &self.body.mu;
        let mut l = (z - mu.s[0]).ln();
        if self.below_cut(z) {
            l.im += TAU;
        }
        let mut acc = l * mu.weight[0];
        for j in 1..mu.s.len() {
            l += ((z - mu.s[j]) / (z - mu.s[j - 1])).ln();
            acc += l * mu.weight[j];
        }
        Ok(acc)
    }

    /// C^{μ0}(z) = ∫ dμ0(s)/(z−s). Close to Γ0 the Cauchy singularity is
    /// subtracted against ∫_{Γ0} ds/(z−s).
    pub fn cauchy_mu0(&self, z: C) -> Result<C> {
        let b = &self.body;
        let d = b.distance_to_gamma0(z);
        if d < NEAR_CUT * self.scale {
            return Err(Error::Branch(format!("{z} is within {NEAR_CUT:e} of the mother body")));
        }
        self.cauchy_mu0_unchecked(z, d)
    }

    fn cauchy_mu0_unchecked(&self, z: C, dist: f64) -> Result<C> {
        let b = &self.body;
        if dist > 0.05 * self.scale {
            return Ok(b.integrate(|s| (z - s).inv()));
        }
        // foot point on Γ0 refined from the polyline projection
        let mut t = b.cdf_at(z).clamp(1e-12, 1.0 - 1e-12);
        for _ in 0..8 {
            let (s, sp) = b.frame_at(t)?;
            let dt = ((s - z) * sp.conj()).re / sp.norm_sqr();
            t = (t - dt).clamp(1e-12, 1.0 - 1e-12);
            if dt.abs() < 1e-15 {
                break;
            }
        }
        self.cauchy_near(z, t)
    }

    /// Cauchy transform at `z` close to s(t0). The density dt/ds is continued
    /// analytically from s(t0) to z and subtracted there, which leaves an
    /// integrand analytic along the whole arc.
    fn cauchy_near(&self, z: C, t0: f64) -> Result<C> {
        let b = &self.body;
        let mu = &b.mu;
        let (s0, sp0) = b.frame_at(t0)?;
        let scale = C::new(0.0, -b.orientation / TAU);
        let candidate = b.curve.sqrt_r0(z)? * scale;
        let rho_z = if (candidate * sp0).re < 0.0 { -candidate } else { candidate };
        let mut acc = C::new(0.0, 0.0);
        for j in 0..mu.s.len() {
            acc += (C::new(1.0, 0.0) - rho_z * mu.dsdt[j]) / (z - mu.s[j]) * mu.weight[j];
        }
        // ∫_{Γ0} ds/(z−s) = −2πi·wind(L, z) − ∫_{closure} ds/(z−s), where L closes Γ0
        // through a box far to the right; the winding number is read off at a
        // point pushed slightly off the arc on z's side
        let (z1, z2) = (b.curve.z1, b.curve.z2);
        let far = b.curve.c0 + self.scale;
        let closure = [z2, C::new(far, z2.im), C::new(far, z1.im), z1];
        let mut loop_pts = b.gamma0.points.clone();
        loop_pts.extend_from_slice(&closure[1..3]);
        let n = C::new(0.0, 1.0) * sp0 / sp0.norm();
        let side = if ((z - s0) * n.conj()).re >= 0.0 { 1.0 } else { -1.0 };
        let probe = s0 + n * (side * 0.005 * self.scale);
        let wind = crate::motherbody::winding_number(&loop_pts, probe) as f64;
        let mut lg = C::new(0.0, -TAU * wind);
        for seg in closure.windows(2) {
            lg -= ((z - seg[0]) / (z - seg[1])).ln();
        }
        Ok(acc + lg * rho_z)
    }

    /// Normal derivatives of 2U^{μ0} + Re 𝒱 at s(t) from both sides of Γ0,
    /// each taken along the outward normal of its side.
    pub fn s_property(&self, t: f64, delta: f64) -> Result<(f64, f64)> {
        let (s0, sp) = self.body.frame_at(t)?;
        let n = C::new(0.0, 1.0) * sp / sp.norm();
        let p = self.params();
        let grad = |z: C, dir: C| -> Result<f64> {
            let c = self.cauchy_near(z, t)?;
            Ok(2.0 * (dir * (log_potential_deriv(p, z) * 0.5 - c)).re)
        };
        Ok((grad(s0 + n * delta, n)?, grad(s0 - n * delta, -n)?))
    }

    /// φ(z) = ∫_{z1}^{z} √R0 along Γ1 to c0 and then a polygonal route that
    /// avoids Γ0 and the poles. Re φ is route independent; Im φ is fixed by
    /// the first admissible route in a fixed search order.
    pub fn eval_phi(&self, z: C) -> Result<C> {
        self.check_cut(z)?;
        let b = &self.body;
        let cv = &b.curve;
        let w = cv.params.w;
        let poles = [C::new(0.0, 0.0), C::new(w, 0.0), C::new(-1.0 / w, 0.0)];
        if poles.iter().any(|p| (z - p).norm() < 1e-12) {
            return Err(Error::Pole(format!("phi has a logarithmic pole at {z}")));
        }
        let c0 = C::new(cv.c0, 0.0);
        let route = self
            .route_from(c0, z, &poles, 1e-3 * self.scale)
            .ok_or_else(|| Error::Branch(format!("no admissible integration route to {z}")))?;
        let mut acc = *b.gamma1.phi.last().unwrap();
        let mut err = None;
        let mut f = |x: C| match cv.sqrt_r0(x) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                C::new(0.0, 0.0)
            }
        };
        for s in route.windows(2) {
            acc += quad::adaptive_segment(&self.rule, s[0], s[1], PATH_TOL, &mut f)?;
        }
        if let Some(e) = err {
            return Err(e);
        }
        Ok(acc)
    }

    /// First polygonal route from the real point `start` (right of c0) to `z`
    /// in a fixed search order that crosses no Γ0 chord and keeps `gap`
    /// away from each point of `avoid`.
    pub fn route_from(&self, start: C, z: C, avoid: &[C], gap: f64) -> Option<Vec<C>> {
        let sc = self.scale;
        let big_h = z.im.abs() + 2.0 * sc;
        let far_x = start.re.max(z.re) + sc;
        let mut routes: Vec<Vec<C>> = vec![
            vec![start, start + C::new(0.0, big_h), C::new(z.re, big_h), z],
            vec![start, start - C::new(0.0, big_h), C::new(z.re, -big_h), z],
        ];
        for k in [0.0, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0] {
            let h = z.im + k * 0.05 * sc;
            routes.push(vec![start, C::new(far_x, 0.0), C::new(far_x, h), C::new(z.re, h), z]);
        }
        let g0 = &self.body.gamma0.points;
        routes.into_iter().find(|r| {
            r.windows(2).all(|s| {
                let hits_cut = g0.windows(2).any(|g| segments_cross(s[0], s[1], g[0], g[1]));
                let near = avoid.iter().any(|p| polyline_distance(s, *p) < gap);
                !hits_cut && !near
            })
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// S1(f(u)) f′(u), the pull-back of the Schwarz function to the disk.
    fn pulled_schwarz(&self, u: C) -> Result<C> {
        let m = &self.body.curve.map;
        let fu = m.f(u)?;
        let fi = m.f(u.inv())?;
        Ok(fi / (C::new(1.0, 0.0) + fu * fi) * m.f_prime(u)?)
    }

    fn disk_route(&self, target: C) -> Vec<C> {
        let v0 = C::new(self.body.curve.map.v0, 0.0);
        let one = C::new(1.0, 0.0);
        let mid = (one + target) * 0.5;
        let cands = [vec![one, target], vec![one, mid + C::new(0.0, 0.3), target], vec![one, mid - C::new(0.0, 0.3), target]];
        let score = |r: &Vec<C>| {
            let inside = r.iter().all(|p| p.norm() <= 1.0 + 1e-12);
            let d = polyline_distance(r, v0).min(if target.norm() > 0.05 { polyline_distance(r, C::new(0.0, 0.0)) } else { 1.0 });
            if inside {
                d
            } else {
                -1.0
            }
        };
        cands.into_iter().max_by(|a, b| score(a).total_cmp(&score(b))).unwrap()
    }

    fn disk_integral(&self, route: &[C], regular: bool) -> Result<C> {
        let p = self.params();
        let tail = (1.0 + p.q1) / p.total();
        let mut err = None;
        let mut f = |u: C| match self.pulled_schwarz(u) {
            Ok(v) => {
                if regular {
                    v + u.inv() * tail
                } else {
                    v
                }
            }
            Err(e) => {
                err = Some(e);
                C::new(0.0, 0.0)
            }
        };
        let mut acc = C::new(0.0, 0.0);
        for s in route.windows(2) {
            acc += quad::adaptive_segment(&self.rule, s[0], s[1], PATH_TOL, &mut f)?;
        }
        match err {
            Some(e) => Err(e),
            None => Ok(acc),
        }
    }

    /// True when `z` lies strictly outside the droplet.
    pub fn is_exterior(&self, z: C) -> bool {
        exterior_coordinate(&self.body.curve, z).is_some()
    }

    /// 𝒰(z) = log(1+|z|²) − log(1+|z0|²) − 2 Re∫_{z0}^{z} S1, for z outside or on ∂Ω.
    pub fn u_planar(&self, z: C) -> Result<f64> {
        let cv = &self.body.curve;
        let u = cv.inverse(z, 1)?;
        if u.norm() > 1.0 + 1e-9 {
            return Err(Error::Domain(format!("{z} is inside the droplet")));
        }
        let route = self.disk_route(u);
        let integral = self.disk_integral(&route, false)?;
        Ok((1.0 + z.norm_sqr()).ln() - (1.0 + self.z0.norm_sqr()).ln() - 2.0 * integral.re)
    }

    /// (1+Q0+Q1)·𝒰(z).
    pub fn u2d(&self, z: C) -> Result<f64> {
        Ok(self.params().total() * self.u_planar(z)?)
    }

    /// ℓ_2D with the logarithmic tail at u = 0 taken in closed form.
    fn compute_ell2d(&self) -> Result<f64> {
        let p = self.params();
        let s = p.total();
        let rho = self.body.curve.map.rho;
        let route = [C::new(1.0, 0.0), C::new(0.5, 0.5), C::new(0.0, 0.0)];
        let reg = self.disk_integral(&route, true)?;
        Ok(2.0 * (s - p.q0) * rho.ln() - s * (1.0 + self.z0.norm_sqr()).ln() - 2.0 * s * reg.re)
    }

    /// ℓ_2D by linear extrapolation in 1/|z| from |z| ∈ {1e3, 1e4, 1e5}; returns (value, spread).
    pub fn ell2d_extrapolated(&self) -> Result<(f64, f64)> {
        let p = self.params();
        let dir = C::from_polar(1.0, PI / 3.0);
        let mut vals = Vec::new();
        for r in [1e3, 1e4, 1e5] {
            vals.push((r, self.u2d(dir * r)? - 2.0 * p.q0 * f64::ln(r)));
        }
        let extrap = |(r1, f1): (f64, f64), (r2, f2): (f64, f64)| {
            let (x1, x2) = (1.0 / r1, 1.0 / r2);
            f2 - (f1 - f2) / (x1 - x2) * x2
        };
        let a = extrap(vals[0], vals[1]);
        let b = extrap(vals[1], vals[2]);
        Ok((b, (a - b).abs()))
    }

    /// ℓ0 − [ℓ_2D + (1+Q0)log w + Re g(0) − (1+Q1)log(1+Q1) − Q0 log Q0 + S log S].
    pub fn ell_relation_residual(&self) -> Result<f64> {
        let p = self.params();
        let s = p.total();
        let g0 = self.eval_g(C::new(0.0, 0.0))?.re;
        let q0_term = if p.q0 > 0.0 { p.q0 * p.q0.ln() } else { 0.0 };
        let rhs = self.ell2d + (1.0 + p.q0) * p.w.ln() + g0 - (1.0 + p.q1) * (1.0 + p.q1).ln() - q0_term + s * s.ln();
        Ok(self.ell0 - rhs)
    }
}

/// u = F1(z) when z is strictly exterior to the droplet.
fn exterior_coordinate(curve: &SpectralCurve<f64>, z: C) -> Option<C> {
    let u = curve.inverse(z, 1).ok()?;
    (u.norm() < 1.0 - 1e-12).then_some(u)
}

/// ∫_Ω dν0(u)/(z−u) as a boundary integral over u = f(e^{iθ}), trapezoid rule with `m` nodes.
pub fn cauchy_nu0_boundary(curve: &SpectralCurve<f64>, z: C, m: usize) -> Result<C> {
    if exterior_coordinate(curve, z).is_none() {
        return Err(Error::Domain(format!("{z} is not exterior to the droplet")));
    }
    let map = &curve.map;
    let s = curve.params.total();
    let mut acc = C::new(0.0, 0.0);
    for j in 0..m {
        let e = C::from_polar(1.0, TAU * j as f64 / m as f64);
        let u = map.f(e)?;
        let ub = map.f(e.conj())?;
        let du = map.f_prime(e)? * C::new(0.0, 1.0) * e;
        acc += ub / ((C::new(1.0, 0.0) + u * ub) * (z - u)) * du;
    }
    // the unit circle maps to ∂Ω with the droplet on the right
    let h = TAU / m as f64;
    Ok(-acc * h * s / (PI * C::new(0.0, 2.0)))
}
