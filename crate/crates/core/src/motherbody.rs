//! Critical and steepest-ascent trajectories of R(z)dz², the closed contour Γ,
//! and the measure μ0 on Γ0.
//!
//! Trajectories are integrated with an adaptive Dormand–Prince pair on the
//! unit-speed field m·conj(√R0)/|√R0|. The root of R0 is continued step by
//! step (nearest root to the previous one) and, after every accepted step, the
//! point is projected back onto the level set Re ψ = 0 (critical) or
//! Im ψ = 0 (ascent), where ψ is the running integral of √R0 from the start.
//! The projection keeps endpoint approaches exact: without it a path that
//! should hit z2 or the saddle c0 passes it at a distance that grows like a
//! fractional power of the accumulated drift.
//!
//! μ0 is parametrized by its own distribution function t ∈ [0, 1]: the point
//! s(t) ∈ Γ0 solves (σ/2πi)∫_{z1}^{s}√R0 = t by Newton, and integrals against
//! μ0 use Gauss–Legendre in u with t = smoothstep(u).

use std::f64::consts::{PI, TAU};

use num_complex::Complex;
use serde::Serialize;

use crate::curve::SpectralCurve;
use crate::error::{Error, Result};
use crate::quad::{self, Rule};

type C = Complex<f64>;

const I: C = C { re: 0.0, im: 1.0 };
const CHORD_ORDER: usize = 10;
const LOCAL_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrajectoryKind {
    CriticalLeft,
    CriticalMiddle,
    CriticalRight,
    SteepestAscent,
    Loop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Endpoint {
    Z1,
    Z2,
    C0,
    Open,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub points: Vec<C>,
    pub arclen: Vec<f64>,
    /// Running ∫√R0 from the start point along the path.
    pub phi: Vec<C>,
    /// √R0 at each point, root continued along the path.
    pub sqrt_r0: Vec<C>,
    /// Unit tangents in the direction of travel.
    pub tangents: Vec<C>,
    pub kind: TrajectoryKind,
    pub start: Endpoint,
    pub end: Endpoint,
}

impl Trajectory {
    fn new(raw: Raw, kind: TrajectoryKind, start: Endpoint) -> Self {
        let mut arclen = Vec::with_capacity(raw.points.len());
        let mut acc = 0.0;
        for (i, z) in raw.points.iter().enumerate() {
            if i > 0 {
                acc += (z - raw.points[i - 1]).norm();
            }
            arclen.push(acc);
        }
        let n = raw.points.len();
        let rot = if kind == TrajectoryKind::SteepestAscent { C::new(1.0, 0.0) } else { I };
        let tangents = (0..n)
            .map(|k| {
                let chord = if k + 1 < n { raw.points[k + 1] - raw.points[k] } else { raw.points[k] - raw.points[k - 1] };
                let chord = chord / chord.norm();
                let sq = raw.sqrt[k];
                if sq.norm() == 0.0 {
                    return chord;
                }
                let v = rot * sq.conj() / sq.norm();
                if (v * chord.conj()).re < 0.0 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        Trajectory { points: raw.points, arclen, phi: raw.phi, sqrt_r0: raw.sqrt, tangents, kind, start, end: raw.end }
    }

    pub fn length(&self) -> f64 {
        *self.arclen.last().unwrap_or(&0.0)
    }

    pub fn conj(&self) -> Self {
        let flip = |e: Endpoint| match e {
            Endpoint::Z1 => Endpoint::Z2,
            Endpoint::Z2 => Endpoint::Z1,
            x => x,
        };
        Trajectory {
            points: self.points.iter().map(|z| z.conj()).collect(),
            arclen: self.arclen.clone(),
            phi: self.phi.iter().map(|z| z.conj()).collect(),
            sqrt_r0: self.sqrt_r0.iter().map(|z| z.conj()).collect(),
            tangents: self.tangents.iter().map(|z| z.conj()).collect(),
            kind: self.kind,
            start: flip(self.start),
            end: flip(self.end),
        }
    }

    /// Distance from `z` to the curve, refined on a cubic Hermite interpolant
    /// of the three nearest chords.
    pub fn distance(&self, z: C) -> f64 {
        let pts = &self.points;
        if pts.len() < 2 {
            return polyline_distance(pts, z);
        }
        let mut near: Vec<(f64, usize)> = pts.windows(2).enumerate().map(|(k, s)| (polyline_distance(s, z), k)).collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::INFINITY;
        for &(_, k) in near.iter().take(3) {
            let (a, b) = (pts[k], pts[k + 1]);
            let l = (b - a).norm();
            let (ta, tb) = (self.tangents[k] * l, self.tangents[k + 1] * l);
            let sub: Vec<C> = (0..=64)
                .map(|j| {
                    let u = j as f64 / 64.0;
                    let (u2, u3) = (u * u, u * u * u);
                    a * (2.0 * u3 - 3.0 * u2 + 1.0) + ta * (u3 - 2.0 * u2 + u) + b * (-2.0 * u3 + 3.0 * u2) + tb * (u3 - u2)
                })
                .collect();
            best = best.min(polyline_distance(&sub, z));
        }
        best
    }

    /// Symmetric Hausdorff distance between the vertex sets and the other polyline.
    pub fn hausdorff(&self, other: &Trajectory) -> f64 {
        let a = self.points.iter().map(|z| other.distance(*z)).fold(0.0, f64::max);
        let b = other.points.iter().map(|z| self.distance(*z)).fold(0.0, f64::max);
        a.max(b)
    }

    /// Abscissas where the polyline crosses the real axis.
    pub fn real_crossings(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for s in self.points.windows(2) {
            let (a, b) = (s[0], s[1]);
            if a.im != 0.0 && b.im != 0.0 && (a.im > 0.0) != (b.im > 0.0) {
                out.push(a.re + (b.re - a.re) * a.im / (a.im - b.im));
            }
        }
        out
    }
}

pub fn polyline_distance(points: &[C], z: C) -> f64 {
    let mut best = f64::INFINITY;
    for s in points.windows(2) {
        let d = s[1] - s[0];
        let l2 = d.norm_sqr();
        let t = if l2 > 0.0 { (((z - s[0]) * d.conj()).re / l2).clamp(0.0, 1.0) } else { 0.0 };
        best = best.min((s[0] + d * t - z).norm());
    }
    if points.len() == 1 {
        best = (points[0] - z).norm();
    }
    best
}

/// Winding number of the closed polygon `poly` (first point repeated or not) about `p`.
pub fn winding_number(poly: &[C], p: C) -> i64 {
    let n = poly.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = poly[i] - p;
        let b = poly[(i + 1) % n] - p;
        if a.norm() == 0.0 || b.norm() == 0.0 {
            continue;
        }
        total += (b / a).arg();
    }
    (total / TAU).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Local error tolerance of the embedded pair.
    pub tol: f64,
    /// Launch offset relative to |z1 − z2|.
    pub launch: f64,
    /// Terminal snapping radius.
    pub end_tol: f64,
    /// Escape radius relative to the problem scale.
    pub escape: f64,
    /// Arclength budget relative to the problem scale.
    pub max_arclength: f64,
    pub max_steps: usize,
    /// Gauss–Legendre nodes of the μ0 rule.
    pub mu_nodes: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { tol: 1e-10, launch: 1e-6, end_tol: 1e-9, escape: 1e3, max_arclength: 1e3, max_steps: 200_000, mu_nodes: 320 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Critical,
    Ascent,
}

struct Raw {
    points: Vec<C>,
    phi: Vec<C>,
    sqrt: Vec<C>,
    end: Endpoint,
}

// Dormand–Prince 5(4)
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

fn nearest_root(s: C, reference: C) -> C {
    if (s * reference.conj()).re < 0.0 {
        -s
    } else {
        s
    }
}

struct Tracer<'a> {
    curve: &'a SpectralCurve<f64>,
    opts: TraceOptions,
    scale: f64,
    zeros: [C; 3],
    poles: [C; 3],
    chord: Rule,
}

impl<'a> Tracer<'a> {
    fn new(curve: &'a SpectralCurve<f64>, opts: TraceOptions) -> Result<Self> {
        let w = curve.params.w;
        let scale = curve.c0.max(1.0 / w).max(curve.z1.norm());
        Ok(Tracer {
            curve,
            opts,
            scale,
            zeros: [curve.z1, curve.z2, C::new(curve.c0, 0.0)],
            poles: [C::new(0.0, 0.0), C::new(w, 0.0), C::new(-1.0 / w, 0.0)],
            chord: quad::gauss_legendre(CHORD_ORDER)?,
        })
    }

    fn tracked(&self, z: C, reference: C) -> Result<C> {
        Ok(nearest_root(self.curve.sqrt_r0(z)?, reference))
    }

    fn field(&self, z: C, reference: C, m: C) -> Result<(C, C)> {
        let sq = self.tracked(z, reference)?;
        let n = sq.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Trajectory(format!("direction field degenerate at {z}")));
        }
        Ok((m * sq.conj() / n, sq))
    }

    fn step_cap(&self, z: C) -> f64 {
        let d = self.zeros.iter().chain(self.poles.iter()).map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min);
        (0.25 * d).min(0.05 * self.scale)
    }

    fn pole_distance(&self, z: C) -> f64 {
        self.poles.iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min)
    }

    /// ∫√R0 from a zero `a` of R0 to `b`; `simple` selects the square-root substitution.
    fn from_zero(&self, a: C, b: C, simple: bool, reference: C) -> Result<C> {
        let mut err = None;
        let f = |z: C| match self.tracked(z, reference) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                C::new(0.0, 0.0)
            }
        };
        let v = if simple { quad::segment_sqrt_start(&self.chord, a, b, f) } else { quad::segment(&self.chord, a, b, f) };
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    fn chord_integral(&self, a: C, b: C, reference: C) -> Result<C> {
        let mut err = None;
        let v = quad::segment(&self.chord, a, b, |z| match self.tracked(z, reference) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                C::new(0.0, 0.0)
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// Integrates from `launch` (near the zero `origin`) until a target, a pole, or escape.
    #[allow(clippy::too_many_arguments)]
    fn run(&self, origin: C, simple: bool, launch: C, sq0: C, m: C, mode: Mode, targets: &[(C, Endpoint)]) -> Result<Raw> {
        let o = &self.opts;
        let psi0 = self.from_zero(origin, launch, simple, sq0)?;
        let mut points = vec![origin, launch];
        let mut phi = vec![C::new(0.0, 0.0), psi0];
        let mut sqrt = vec![C::new(0.0, 0.0), sq0];
        let (mut z, mut sq, mut psi) = (launch, sq0, psi0);
        let mut h = (launch - origin).norm();
        let mut arclen = h;
        let mut armed: Vec<bool> = targets.iter().map(|(t, _)| (t - origin).norm() > 1e-12 * self.scale).collect();
        let mut prev_dist: Vec<f64> = targets.iter().map(|(t, _)| (t - z).norm()).collect();
        for _ in 0..o.max_steps {
            h = h.min(self.step_cap(z));
            let mut k = [C::new(0.0, 0.0); 7];
            k[0] = self.field(z, sq, m)?.0;
            for s in 1..7 {
                let mut zs = z;
                for (j, kj) in k.iter().enumerate().take(s) {
                    zs += *kj * (h * DP_A[s][j]);
                }
                k[s] = self.field(zs, sq, m)?.0;
            }
            let mut dz = C::new(0.0, 0.0);
            let mut de = C::new(0.0, 0.0);
            for s in 0..7 {
                dz += k[s] * DP_B5[s];
                de += k[s] * (DP_B5[s] - DP_B4[s]);
            }
            let err = h * de.norm();
            if err > o.tol && h > 1e-15 * self.scale {
                h *= (0.9 * (o.tol / err).powf(0.2)).max(0.2);
                continue;
            }
            let mut zn = z + dz * h;
            let mut sqn = self.tracked(zn, sq)?;
            let mut psin = psi + self.chord_integral(z, zn, sq)?;
            let resid = match mode {
                Mode::Critical => C::new(psin.re, 0.0),
                Mode::Ascent => C::new(0.0, psin.im),
            };
            if sqn.norm() > 0.0 {
                zn -= resid / sqn;
                psin -= resid;
                sqn = self.tracked(zn, sqn)?;
            }
            arclen += (zn - z).norm();
            z = zn;
            sq = sqn;
            psi = psin;
            points.push(z);
            phi.push(psi);
            sqrt.push(sq);
            let grow = if err > 0.0 { (0.9 * (o.tol / err).powf(0.2)).min(5.0) } else { 5.0 };
            h *= grow.max(1.0);

            if z.norm() > o.escape * self.scale || arclen > o.max_arclength * self.scale {
                return Ok(Raw { points, phi, sqrt, end: Endpoint::Open });
            }
            if self.pole_distance(z) < 1e-6 * self.scale {
                return Ok(Raw { points, phi, sqrt, end: Endpoint::Open });
            }
            for (i, (t, kind)) in targets.iter().enumerate() {
                let d = (t - z).norm();
                if !armed[i] {
                    if d > 1e-2 * self.scale {
                        armed[i] = true;
                    }
                    prev_dist[i] = d;
                    continue;
                }
                let passed = d > prev_dist[i] && prev_dist[i] < 1e-3 * self.scale;
                if d < o.end_tol * self.scale || passed {
                    if passed {
                        if prev_dist[i] > 1e-6 * self.scale {
                            return Err(Error::Trajectory(format!("trajectory passed {kind:?} at distance {:.3e}", prev_dist[i])));
                        }
                        points.pop();
                        phi.pop();
                        sqrt.pop();
                        z = *points.last().unwrap();
                        sq = *sqrt.last().unwrap();
                        psi = *phi.last().unwrap();
                    }
                    let simple = *kind != Endpoint::C0;
                    let tail = -self.from_zero(*t, z, simple, sq)?;
                    points.push(*t);
                    phi.push(psi + tail);
                    sqrt.push(C::new(0.0, 0.0));
                    return Ok(Raw { points, phi, sqrt, end: *kind });
                }
                prev_dist[i] = d;
            }
        }
        Err(Error::Trajectory(format!("step budget exhausted near {z}")))
    }

    /// Launch points of the given mode at the simple zero z1.
    fn z1_rays(&self, mode: Mode) -> Vec<C> {
        let c = self.curve;
        let p = &c.params;
        let (z1, z2) = (c.z1, c.z2);
        let den = z1 * (z1 - p.w) * (z1 + 1.0 / p.w);
        let dr0 = (z1 - z2) * (z1 - c.c0) * (z1 - c.c0) * (p.q0 * p.q0) / (den * den);
        let arg_k = dr0.arg() / 2.0;
        let base = match mode {
            Mode::Critical => PI / 2.0 - arg_k,
            Mode::Ascent => -arg_k,
        };
        (0..3).map(|k| C::from_polar(1.0, 2.0 / 3.0 * (base + k as f64 * PI))).collect()
    }
}

/// The three critical trajectories from z1, classified by their real-axis crossing.
pub fn trace_critical_trajectories(curve: &SpectralCurve<f64>, opts: TraceOptions) -> Result<[Trajectory; 3]> {
    let tr = Tracer::new(curve, opts)?;
    let w = curve.params.w;
    let eps = opts.launch * (curve.z1 - curve.z2).norm();
    let mut out: Vec<Trajectory> = Vec::new();
    for e in tr.z1_rays(Mode::Critical) {
        let z = curve.z1 + e * eps;
        let sq = curve.sqrt_r0(z)?;
        let m = if (I * sq.conj() * e.conj()).re > 0.0 { I } else { -I };
        let raw = tr.run(curve.z1, true, z, sq, m, Mode::Critical, &[(curve.z2, Endpoint::Z2)])?;
        if raw.end != Endpoint::Z2 {
            return Err(Error::Trajectory("critical trajectory from z1 did not reach z2 (phase violation?)".into()));
        }
        let t = Trajectory::new(raw, TrajectoryKind::CriticalMiddle, Endpoint::Z1);
        let xs = t.real_crossings();
        if xs.len() != 1 {
            return Err(Error::Trajectory(format!("critical trajectory crosses the real axis {} times", xs.len())));
        }
        let kind = if xs[0] < -1.0 / w {
            TrajectoryKind::CriticalLeft
        } else if xs[0] < 0.0 {
            TrajectoryKind::CriticalMiddle
        } else {
            TrajectoryKind::CriticalRight
        };
        out.push(Trajectory { kind, ..t });
    }
    let pick = |k: TrajectoryKind| -> Result<Trajectory> {
        let mut it = out.iter().filter(|t| t.kind == k);
        match (it.next(), it.next()) {
            (Some(t), None) => Ok(t.clone()),
            _ => Err(Error::Trajectory(format!("expected exactly one {k:?} trajectory"))),
        }
    };
    Ok([pick(TrajectoryKind::CriticalLeft)?, pick(TrajectoryKind::CriticalMiddle)?, pick(TrajectoryKind::CriticalRight)?])
}

/// Steepest ascent of Re φ from z1 to c0 and its conjugate. `curve` must carry the Γ0 cut.
pub fn steepest_ascent_paths(curve: &SpectralCurve<f64>, opts: TraceOptions) -> Result<(Trajectory, Trajectory)> {
    let tr = Tracer::new(curve, opts)?;
    let eps = opts.launch * (curve.z1 - curve.z2).norm();
    let c0 = C::new(curve.c0, 0.0);
    for e in tr.z1_rays(Mode::Ascent) {
        let z = curve.z1 + e * eps;
        let sq = curve.sqrt_r0(z)?;
        if (sq * e).re <= 0.0 {
            continue;
        }
        let raw = tr.run(curve.z1, true, z, sq, C::new(1.0, 0.0), Mode::Ascent, &[(c0, Endpoint::C0)])?;
        if raw.end == Endpoint::C0 {
            let g1 = Trajectory::new(raw, TrajectoryKind::SteepestAscent, Endpoint::Z1);
            let g2 = g1.conj();
            return Ok((g1, g2));
        }
    }
    Err(Error::Trajectory("no steepest-ascent path from z1 terminates at c0".into()))
}

/// The two critical loops through the double zero c0, ordered (inner, outer).
pub fn loops_from_c0(curve: &SpectralCurve<f64>, opts: TraceOptions) -> Result<(Trajectory, Trajectory)> {
    let tr = Tracer::new(curve, opts)?;
    let c0 = C::new(curve.c0, 0.0);
    let eps = opts.launch * tr.scale;
    let probe = c0 + eps;
    let k = curve.sqrt_r0(probe)? / eps;
    let base = (PI / 2.0 - k.arg()) / 2.0;
    let mut loops = Vec::new();
    for j in 0..4 {
        let e = C::from_polar(1.0, base + j as f64 * PI / 2.0);
        if e.im <= 0.0 {
            continue;
        }
        let z = c0 + e * eps;
        let sq = curve.sqrt_r0(z)?;
        let m = if (I * sq.conj() * e.conj()).re > 0.0 { I } else { -I };
        let raw = tr.run(c0, false, z, sq, m, Mode::Critical, &[(c0, Endpoint::C0)])?;
        if raw.end != Endpoint::C0 {
            return Err(Error::Trajectory("critical trajectory from c0 did not close".into()));
        }
        loops.push(Trajectory::new(raw, TrajectoryKind::Loop, Endpoint::C0));
    }
    if loops.len() != 2 {
        return Err(Error::Trajectory(format!("expected two loops at c0, found {}", loops.len())));
    }
    let encloses_zero = |t: &Trajectory| winding_number(&t.points, C::new(0.0, 0.0)) != 0;
    loops.sort_by_key(encloses_zero);
    let outer = loops.pop().unwrap();
    let inner = loops.pop().unwrap();
    Ok((inner, outer))
}

/// Quadrature rule for μ0: ∫F dμ0 ≈ Σ weight_j F(s_j).
#[derive(Debug, Clone, Serialize)]
pub struct MuRule {
    pub t: Vec<f64>,
    pub weight: Vec<f64>,
    pub s: Vec<C>,
    /// ds/dt at the nodes.
    pub dsdt: Vec<C>,
}

#[derive(Debug, Clone)]
pub struct MotherBody {
    /// Spectral curve with its square-root cut bound to Γ0.
    pub curve: SpectralCurve<f64>,
    pub left: Trajectory,
    pub gamma0: Trajectory,
    pub right: Trajectory,
    pub gamma1: Trajectory,
    pub gamma2: Trajectory,
    /// Closed, positively oriented polygon c0 → z1 → x̂ → z2 → c0.
    pub gamma: Vec<C>,
    /// μ0 density per unit arclength at the Γ0 vertices.
    pub density: Vec<f64>,
    pub real_crossing: f64,
    /// ±1 making (σ/2πi)√R0 ds positive along Γ0 from z1 to z2.
    pub orientation: f64,
    /// Total mass by Gauss–Legendre over the traced polyline.
    pub mass: f64,
    /// Distribution function at the Γ0 vertices (complex; imaginary part is drift).
    pub cdf: Vec<C>,
    pub mu: MuRule,
    pub opts: TraceOptions,
    local: Rule,
}

impl MotherBody {
    pub fn build(curve: &SpectralCurve<f64>, opts: TraceOptions) -> Result<Self> {
        let straight = curve.straight();
        let [left, gamma0, right] = trace_critical_trajectories(&straight, opts)?;
        let cut = straight.with_cut(gamma0.points.clone());
        let (gamma1, gamma2) = steepest_ascent_paths(&cut, opts)?;
        let local = quad::gauss_legendre(LOCAL_ORDER)?;

        // mass and distribution function by chordwise quadrature with endpoint substitution
        let pts = &gamma0.points;
        let n = pts.len();
        let mut cum = vec![C::new(0.0, 0.0); n];
        for k in 0..n - 1 {
            let (a, b) = (pts[k], pts[k + 1]);
            let reference = if k == 0 { gamma0.sqrt_r0[1] } else { gamma0.sqrt_r0[k] };
            let f = |z: C| nearest_root(cut.sqrt_r0(z).unwrap_or(C::new(0.0, 0.0)), reference);
            let piece = if k == 0 {
                quad::segment_sqrt_start(&local, a, b, f)
            } else if k == n - 2 {
                -quad::segment_sqrt_start(&local, b, a, f)
            } else {
                quad::segment(&local, a, b, f)
            };
            cum[k + 1] = cum[k] + piece;
        }
        let raw_mass = cum[n - 1] / (TAU * I);
        let orientation = if raw_mass.re >= 0.0 { 1.0 } else { -1.0 };
        let cdf: Vec<C> = cum.iter().map(|p| p * orientation / (TAU * I)).collect();
        let mass = cdf[n - 1].re;
        if !((mass - 1.0).abs() < 1e-6) {
            return Err(Error::Consistency(format!("total mass of the mother body is {mass}")));
        }
        let density: Vec<f64> = gamma0.sqrt_r0.iter().map(|s| s.norm() / TAU).collect();

        let mut gamma: Vec<C> = gamma1.points.iter().rev().copied().collect();
        gamma.extend_from_slice(&gamma0.points[1..]);
        gamma.extend_from_slice(&gamma2.points[1..]);
        gamma.pop();

        let mut body = MotherBody {
            curve: cut,
            left,
            gamma0,
            right,
            gamma1,
            gamma2,
            gamma,
            density,
            real_crossing: 0.0,
            orientation,
            mass,
            cdf,
            mu: MuRule { t: vec![], weight: vec![], s: vec![], dsdt: vec![] },
            opts,
            local,
        };
        let x = body.point_at(0.5)?;
        body.real_crossing = x.re;
        let w = body.curve.params.w;
        if x.im.abs() > 1e-8 || !(x.re > -1.0 / w && x.re < 0.0) {
            return Err(Error::Trajectory(format!("median of mu0 at {x} is not a real point in (-1/w, 0)")));
        }
        let wn = body.windings();
        if wn != [1, 1, 0] {
            return Err(Error::Trajectory(format!("contour winding numbers about (w, 0, -1/w) are {wn:?}")));
        }
        body.mu = body.mu_rule(opts.mu_nodes)?;
        Ok(body)
    }

    /// Winding numbers of Γ about w, 0 and −1/w.
    pub fn windings(&self) -> [i64; 3] {
        let w = self.curve.params.w;
        [C::new(w, 0.0), C::new(0.0, 0.0), C::new(-1.0 / w, 0.0)].map(|p| winding_number(&self.gamma, p))
    }

    /// σ√R0 continued from `reference`.
    fn signed_sqrt(&self, z: C, reference: C) -> Result<C> {
        Ok(nearest_root(self.curve.sqrt_r0(z)?, reference))
    }

    /// (t(s), dt/ds) from vertex `k` of Γ0 to a nearby point `s`.
    fn local_cdf(&self, k: usize, s: C) -> Result<(C, C)> {
        let g = &self.gamma0;
        let last = g.points.len() - 1;
        let reference = if k == 0 {
            g.sqrt_r0[1]
        } else if k == last {
            g.sqrt_r0[last - 1]
        } else {
            g.sqrt_r0[k]
        };
        let mut err = None;
        let f = |z: C| match self.signed_sqrt(z, reference) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                C::new(0.0, 0.0)
            }
        };
        let a = g.points[k];
        let piece = if k == 0 || k == last { quad::segment_sqrt_start(&self.local, a, s, f) } else { quad::segment(&self.local, a, s, f) };
        if let Some(e) = err {
            return Err(e);
        }
        let scale = self.orientation / (TAU * I);
        let d = self.signed_sqrt(s, reference)? * scale;
        Ok((self.cdf[k] + piece * scale, d))
    }

    /// Point of Γ0 where the μ0 distribution function equals `t`.
    pub fn point_at(&self, t: f64) -> Result<C> {
        let pts = &self.gamma0.points;
        let last = pts.len() - 1;
        if t <= 0.0 {
            return Ok(pts[0]);
        }
        if t >= 1.0 {
            return Ok(pts[last]);
        }
        let k = self.cdf.partition_point(|c| c.re <= t).clamp(1, last) - 1;
        let (t0, t1) = (self.cdf[k].re, self.cdf[k + 1].re);
        let frac = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let mut s = if k == 0 {
            pts[0] + (pts[1] - pts[0]) * frac.powf(2.0 / 3.0)
        } else if k + 1 == last {
            pts[last] + (pts[last - 1] - pts[last]) * (1.0 - frac).powf(2.0 / 3.0)
        } else {
            pts[k] + (pts[k + 1] - pts[k]) * frac
        };
        let anchor = if frac < 0.5 { k } else { k + 1 };
        let scale = (pts[k + 1] - pts[k]).norm();
        for _ in 0..60 {
            let (tc, d) = self.local_cdf(anchor, s)?;
            if d.norm() == 0.0 {
                break;
            }
            let step = (tc - t) / d;
            s -= step;
            if step.norm() < 1e-15 * scale.max(1e-300) + 1e-17 {
                return Ok(s);
            }
        }
        let (tc, _) = self.local_cdf(anchor, s)?;
        if (tc - t).norm() < 1e-13 {
            Ok(s)
        } else {
            Err(Error::Trajectory(format!("projection onto the mother body stalled at t = {t}")))
        }
    }

    fn mu_rule(&self, m: usize) -> Result<MuRule> {
        let r = quad::gauss_legendre(m)?;
        let mut out = MuRule { t: vec![], weight: vec![], s: vec![], dsdt: vec![] };
        for (u, wu) in r.x.iter().zip(&r.w) {
            let (t, dt) = quad::smoothstep(*u);
            let (s, d) = self.frame_at(t)?;
            out.t.push(t);
            out.weight.push(dt * wu);
            out.s.push(s);
            out.dsdt.push(d);
        }
        Ok(out)
    }

    /// s(t) together with ds/dt, for 0 < t < 1.
    pub fn frame_at(&self, t: f64) -> Result<(C, C)> {
        let s = self.point_at(t)?;
        let pts = &self.gamma0.points;
        let k = (0..pts.len()).min_by(|&i, &j| (pts[i] - s).norm().total_cmp(&(pts[j] - s).norm())).unwrap_or(0);
        let (_, d) = self.local_cdf(k, s)?;
        Ok((s, d.inv()))
    }

    /// ∫ F dμ0 with the precomputed node rule.
    pub fn integrate(&self, mut f: impl FnMut(C) -> C) -> C {
        self.mu.s.iter().zip(&self.mu.weight).map(|(s, w)| f(*s) * *w).sum()
    }

    pub fn distance_to_gamma0(&self, z: C) -> f64 {
        self.gamma0.distance(z)
    }

    /// μ0-distribution value of the point of Γ0 nearest to `z`.
    pub fn cdf_at(&self, z: C) -> f64 {
        let pts = &self.gamma0.points;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..pts.len() - 1 {
            let d = pts[k + 1] - pts[k];
            let l2 = d.norm_sqr();
            let a = if l2 > 0.0 { (((z - pts[k]) * d.conj()).re / l2).clamp(0.0, 1.0) } else { 0.0 };
            let dist = (pts[k] + d * a - z).norm();
            if dist < best.0 {
                best = (dist, self.cdf[k].re + a * (self.cdf[k + 1].re - self.cdf[k].re));
            }
        }
        best.1
    }

    /// Largest |Re ψ| over the Γ0 vertices.
    pub fn level_drift(&self) -> f64 {
        self.cdf.iter().map(|c| c.im.abs() * TAU).fold(0.0, f64::max)
    }

    /// Rows (arclength, Re z, Im z, density) of Γ0.
    pub fn density_samples(&self) -> Vec<[f64; 4]> {
        self.gamma0.points.iter().zip(&self.gamma0.arclen).zip(&self.density).map(|((z, s), d)| [*s, z.re, z.im, *d]).collect()
    }
}
