//! Acceptance checks shared by the `acceptance` test target and the
//! `verify` command. Each check returns one record; a check that errors is
//! recorded as failed with the error text.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::Parametrix;
use crate::curve::solve_curve;
use crate::error::{Error, Result};
use crate::model::{classify_phase, log_potential_re, ModelParams, PhaseTag};
use crate::motherbody::{loops_from_c0, winding_number, TraceOptions, Trajectory};
use crate::orthopoly::{
    duality_contour, duality_contour_on, gamma_constant, ground_truth, planar_moment, policy_digits, Circle, GroundTruth, MomentOptions,
    PlanarFamily,
};
use crate::potential::cauchy_nu0_boundary;

type C = Complex<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub q0: f64,
    pub q1: f64,
    pub ws: Vec<f64>,
    /// N values of the field comparison and the zero statistics.
    pub field_ns: Vec<u32>,
    /// Base N of the N → 2N norm ratio pairs.
    pub norm_ns: Vec<u32>,
    pub r0s: Vec<i64>,
    pub duality_ns: Vec<u32>,
    pub partition_ns: Vec<u32>,
    /// Fixed working digits for the ground truth; None uses 40 + 3n.
    pub digits: Option<u32>,
    pub precision_bump: u32,
    pub ratio_band: [f64; 2],
    /// Fraction of probe points that must pass the field rate test.
    pub point_fraction: f64,
    /// Multiplies ρ before the curve invariants are evaluated (1 = no perturbation).
    pub rho_factor: f64,
    /// Criteria to run; empty runs all of them.
    pub only: Vec<u32>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            q0: 1.0,
            q1: 1.0,
            ws: vec![0.5, 1.0, 2.0],
            field_ns: vec![10, 20, 40],
            norm_ns: vec![10, 20],
            r0s: vec![0, 1],
            duality_ns: vec![2, 3, 4],
            partition_ns: vec![4, 8],
            digits: None,
            precision_bump: 20,
            ratio_band: [1.4, 2.6],
            point_fraction: 0.8,
            rho_factor: 1.0,
            only: Vec::new(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ws.is_empty() || self.field_ns.is_empty() || self.norm_ns.is_empty() {
            return Err(Error::Domain("w list and N lists must be non-empty".into()));
        }
        for &w in &self.ws {
            ModelParams::geometry(self.q0, self.q1, w)?;
        }
        if self.field_ns.contains(&0) || self.norm_ns.contains(&0) {
            return Err(Error::Domain("N must be at least 1".into()));
        }
        if !(self.ratio_band[0] < self.ratio_band[1]) {
            return Err(Error::Domain("ratio band must be increasing".into()));
        }
        Ok(())
    }

    fn selected(&self, id: u32) -> bool {
        self.only.is_empty() || self.only.contains(&id)
    }

    fn in_band(&self, x: f64) -> bool {
        x >= self.ratio_band[0] && x <= self.ratio_band[1]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: u32,
    pub title: String,
    pub anchor: String,
    pub measured: f64,
    pub expected: String,
    pub tolerance: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckRecord {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: measured {:.3e}, expected {} (tol {}) {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.measured,
            self.expected,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: SuiteConfig,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

struct Outcome {
    measured: f64,
    pass: bool,
    detail: String,
}

struct Meta {
    id: u32,
    title: &'static str,
    anchor: &'static str,
    expected: &'static str,
    tolerance: &'static str,
}

const META: [Meta; 11] = [
    Meta {
        id: 1,
        title: "duality identity",
        anchor: "planar pairing equals G-scaled contour pairing",
        expected: "max rel error",
        tolerance: "1e-7",
    },
    Meta {
        id: 2,
        title: "vanishing-w harness",
        anchor: "circle moments reduce to 2πi δ_jk",
        expected: "max abs error",
        tolerance: "1e-12",
    },
    Meta {
        id: 3,
        title: "curve invariants",
        anchor: "conformal map constants, node, branch points, residue at w",
        expected: "max error/tolerance ≤ 1",
        tolerance: "1e-12, 1e-10, 1e-10, 1e-8",
    },
    Meta {
        id: 4,
        title: "mother body",
        anchor: "unit mass, positive density, Cauchy and Frostman identities",
        expected: "max error/tolerance ≤ 1",
        tolerance: "mass 1e-8, Cauchy 1e-6, Frostman 1e-7",
    },
    Meta {
        id: 5,
        title: "trajectory topology",
        anchor: "left/middle/right critical trajectories and node loops",
        expected: "topology violations",
        tolerance: "0",
    },
    Meta {
        id: 6,
        title: "constant relation",
        anchor: "six-term relation between ℓ0, ℓ_2D and g(0)",
        expected: "max abs residual",
        tolerance: "1e-6",
    },
    Meta {
        id: 7,
        title: "strong asymptotics",
        anchor: "P_{n,N} ratio error is O(1/N) off Γ0",
        expected: "min fraction of points with N→2N ratios in band",
        tolerance: "≥ 0.8",
    },
    Meta {
        id: 8,
        title: "norm asymptotics",
        anchor: "h and ĥ relative errors halve from N to 2N",
        expected: "number of ratios outside band",
        tolerance: "0",
    },
    Meta {
        id: 9,
        title: "zero distribution",
        anchor: "zeros approach Γ0 and equidistribute by μ0",
        expected: "number of non-decreasing steps",
        tolerance: "0",
    },
    Meta {
        id: 10,
        title: "precision robustness",
        anchor: "criteria 7-9 at p+20 digits",
        expected: "max rel change",
        tolerance: "1e-10, runtime ≤ 2× baseline",
    },
    Meta {
        id: 11,
        title: "partition function trend",
        anchor: "(1/N²) log Q_N approaches ℓ_2D − log ρ",
        expected: "number of non-decreasing gaps",
        tolerance: "0",
    },
];

type TruthKey = (usize, u32, i64);

/// Shared state for the asymptotic checks.
struct Rates {
    pxs: Vec<Parametrix>,
    truths: BTreeMap<TruthKey, GroundTruth>,
    seconds: f64,
}

fn truth_keys(cfg: &SuiteConfig) -> Vec<TruthKey> {
    let mut ns: Vec<u32> = cfg.field_ns.clone();
    for &n in &cfg.norm_ns {
        ns.push(n);
        ns.push(2 * n);
    }
    ns.sort_unstable();
    ns.dedup();
    let mut keys = Vec::new();
    for wi in 0..cfg.ws.len() {
        for &n in &ns {
            for &r0 in &cfg.r0s {
                keys.push((wi, n, r0));
            }
        }
    }
    keys
}

fn compute_truths(cfg: &SuiteConfig, bump: u32) -> Result<BTreeMap<TruthKey, GroundTruth>> {
    let keys = truth_keys(cfg);
    let out: Vec<Result<(TruthKey, GroundTruth)>> = keys
        .par_iter()
        .map(|&(wi, nn, r0)| {
            let n = nn as i64 + r0;
            let p = ModelParams::new(cfg.q0, cfg.q1, cfg.ws[wi], nn, n)?;
            let digits = cfg.digits.unwrap_or_else(|| policy_digits(n)) + bump;
            Ok(((wi, nn, r0), ground_truth(&p, n, Some(digits))?))
        })
        .collect();
    out.into_iter().collect()
}

fn geometry(cfg: &SuiteConfig, w: f64) -> Result<ModelParams<f64>> {
    ModelParams::geometry(cfg.q0, cfg.q1, w)
}

fn check_duality(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for &w in &cfg.ws {
        for &nn in &cfg.duality_ns {
            let p = ModelParams::new(cfg.q0, cfg.q1, w, nn, 0)?;
            for j in 0..nn as i64 {
                for k in 0..nn as i64 {
                    let pl = planar_moment(&p, j, k)?;
                    let g: f64 = gamma_constant(&p, k)?;
                    let co: C = duality_contour(&p, j, k, &MomentOptions::default())?;
                    let rhs = co * g / C::new(0.0, 2.0);
                    worst = worst.max((pl - rhs).norm() / rhs.norm());
                }
            }
        }
    }
    Ok(Outcome { measured: worst, pass: worst < 1e-7, detail: format!("N in {:?}", cfg.duality_ns) })
}

fn check_vanishing_w(cfg: &SuiteConfig) -> Result<Outcome> {
    let unit = Circle { center: 0.0, radius: 1.0 };
    let mut worst: f64 = 0.0;
    for nn in 1..=3u32 {
        let p = ModelParams::new(cfg.q0, cfg.q1, 1e-14, nn, 0)?;
        for j in 0..nn as i64 {
            for k in 0..nn as i64 {
                let v: C = duality_contour_on(&p, j, k, &unit, &MomentOptions::default())?;
                let e = if j == k { C::new(0.0, TAU) } else { C::new(0.0, 0.0) };
                worst = worst.max((v - e).norm());
            }
        }
    }
    Ok(Outcome { measured: worst, pass: worst < 1e-12, detail: "w = 1e-14, unit circle".into() })
}

fn check_curve(cfg: &SuiteConfig, pxs: &[Parametrix]) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    let mut phase_ok = true;
    for (px, &w) in pxs.iter().zip(&cfg.ws) {
        let p = geometry(cfg, w)?;
        phase_ok &= classify_phase(&p)?.tag == PhaseTag::PreCritical;
        let fresh = solve_curve(&p)?;
        // S1 is the sheet with its cut on Γ0
        let cv = &px.pd.body.curve;
        if (fresh.map.rho - cv.map.rho).abs() > 1e-14 * cv.map.rho {
            return Err(Error::Consistency("re-solved curve differs from the mother body's curve".into()));
        }
        let mut m = cv.map;
        m.rho *= cfg.rho_factor;
        let (rho, a, b) = (m.rho, m.a, m.b);
        let e_ratio = (b * rho * rho / a / ((1.0 + p.q1) / p.q0) - 1.0).abs();
        let e_node = (cv.c0 / ((1.0 + p.q1) / (p.q0 * rho * b)) - 1.0).abs();
        let z1 = C::new(2.0 * a - b, 2.0 * (a * (b - a)).sqrt()) * rho;
        let e_branch = (z1 - cv.z1).norm() / cv.z1.norm();
        // residue of S1 at w on a small circle clear of 0, c0 and Γ0
        let wz = C::new(w, 0.0);
        let r = 0.5 * w.min((w - cv.c0).abs()).min(px.pd.body.distance_to_gamma0(wz));
        let m_nodes = 256;
        let mut acc = C::new(0.0, 0.0);
        for j in 0..m_nodes {
            let e = C::from_polar(1.0, TAU * j as f64 / m_nodes as f64);
            acc += cv.schwarz(wz + e * r, 1)? * e * r;
        }
        let res = acc / m_nodes as f64;
        let e_res = (res / (p.q1 / p.total()) - 1.0).norm();
        let score = (e_ratio / 1e-12).max(e_node / 1e-10).max(e_branch / 1e-10).max(e_res / 1e-8);
        worst = worst.max(score);
        detail.push(format!("w={w}: {e_ratio:.1e}/{e_node:.1e}/{e_branch:.1e}/{e_res:.1e}"));
    }
    if !phase_ok {
        detail.push("not pre-critical".into());
    }
    Ok(Outcome { measured: worst, pass: worst <= 1.0 && phase_ok, detail: detail.join("; ") })
}

/// Least-squares slope of log density against log arclength distance to an endpoint.
fn endpoint_exponent(rows: &[[f64; 4]], from_end: bool) -> f64 {
    let total = rows.last().map(|r| r[0]).unwrap_or(0.0);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (if from_end { total - r[0] } else { r[0] }, r[3]))
        .filter(|(s, d)| *s > 1e-4 * total && *s < 0.02 * total && *d > 0.0)
        .map(|(s, d)| (s.ln(), d.ln()))
        .collect();
    let n = pts.len() as f64;
    if n < 3.0 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn check_mother_body(cfg: &SuiteConfig, pxs: &[Parametrix]) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut detail = Vec::new();
    for (px, &w) in pxs.iter().zip(&cfg.ws) {
        let pd = &px.pd;
        let body = &pd.body;
        let cv = &body.curve;
        let e_mass = (body.mass - 1.0).abs();
        let rows = body.density_samples();
        let min_density = rows.iter().map(|r| r[3]).fold(f64::INFINITY, f64::min);
        let slopes = [endpoint_exponent(&rows, false), endpoint_exponent(&rows, true)];
        let sqrt_edges = slopes.iter().all(|s| (s - 0.5).abs() < 0.05);
        let crossings = body.gamma0.real_crossings();
        let crossing_ok = crossings.len() == 1 && crossings[0] > -1.0 / w && crossings[0] < 0.0;
        let mut e_cauchy: f64 = 0.0;
        for k in 0..10 {
            let z = cv.map.f(C::from_polar(0.6, TAU * (k as f64 + 0.5) / 10.0))?;
            let a = pd.cauchy_mu0(z)?;
            let b = cauchy_nu0_boundary(cv, z, 2048)?;
            e_cauchy = e_cauchy.max((a - b).norm() / b.norm());
        }
        let mut e_frost: f64 = 0.0;
        for k in 0..20 {
            let t = (k as f64 + 0.5) / 20.0;
            let s = body.point_at(t)?;
            let v = 2.0 * pd.u_on_gamma0(t)? + log_potential_re(&cv.params, s) + pd.ell0;
            e_frost = e_frost.max(v.abs());
        }
        let mut min_off: f64 = f64::INFINITY;
        for tr in [&body.gamma1, &body.gamma2] {
            let len = tr.length();
            for (z, s) in tr.points.iter().zip(&tr.arclen).step_by(7) {
                if *s > 0.05 * len {
                    min_off = min_off.min(pd.frostman_residual(*z));
                }
            }
        }
        ok &= min_density >= 0.0 && sqrt_edges && crossing_ok && min_off > 0.0;
        worst = worst.max(e_mass / 1e-8).max(e_cauchy / 1e-6).max(e_frost / 1e-7);
        detail.push(format!(
            "w={w}: mass {e_mass:.1e}, min density {min_density:.1e}, edge exponents {:.3}/{:.3}, crossing {:?}, Cauchy {e_cauchy:.1e}, Frostman {e_frost:.1e}, off-support min {min_off:.3e}",
            slopes[0], slopes[1], crossings
        ));
    }
    Ok(Outcome { measured: worst, pass: ok && worst <= 1.0, detail: detail.join("; ") })
}

fn single_crossing(t: &Trajectory) -> Option<f64> {
    let c = t.real_crossings();
    (c.len() == 1).then(|| c[0])
}

fn check_topology(cfg: &SuiteConfig, pxs: &[Parametrix]) -> Result<Outcome> {
    let mut violations = 0usize;
    let mut detail = Vec::new();
    for (px, &w) in pxs.iter().zip(&cfg.ws) {
        let body = &px.pd.body;
        let xs = [single_crossing(&body.left), single_crossing(&body.gamma0), single_crossing(&body.right)];
        let ordered = match xs {
            [Some(l), Some(m), Some(r)] => l < m && m < r && m > -1.0 / w && m < 0.0,
            _ => false,
        };
        let (inner, outer) = loops_from_c0(&body.curve, TraceOptions::default())?;
        let wn = |t: &Trajectory, x: f64| winding_number(&t.points, C::new(x, 0.0)).abs();
        let loops_ok = (wn(&inner, w), wn(&inner, 0.0)) == (1, 0) && (wn(&outer, -1.0 / w), wn(&outer, 0.0), wn(&outer, w)) == (1, 1, 1);
        let u0 = body.gamma1.phi.last().map(|p| p.re).unwrap_or(f64::NAN);
        violations += [!ordered, !loops_ok, !(u0 > 0.0)].iter().filter(|b| **b).count();
        detail.push(format!("w={w}: crossings {xs:?}, loops {loops_ok}, U0(c0) {u0:.5}"));
    }
    Ok(Outcome { measured: violations as f64, pass: violations == 0, detail: detail.join("; ") })
}

fn check_constants(cfg: &SuiteConfig, pxs: &[Parametrix]) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (px, &w) in pxs.iter().zip(&cfg.ws) {
        let pd = &px.pd;
        let r = pd.ell_relation_residual()?.abs();
        let (ex, _) = pd.ell2d_extrapolated()?;
        let e_ex = (ex - pd.ell2d).abs();
        worst = worst.max(r).max(e_ex);
        detail.push(format!("w={w}: ℓ0 {:.10} ℓ_2D {:.10} residual {r:.1e} far-field ℓ_2D gap {e_ex:.1e}", pd.ell0, pd.ell2d));
    }
    Ok(Outcome { measured: worst, pass: worst < 1e-6, detail: detail.join("; ") })
}

/// Field errors per (w, r0): rows of errors per grid point over cfg.field_ns.
fn field_errors(cfg: &SuiteConfig, rates: &Rates, truths: &BTreeMap<TruthKey, GroundTruth>) -> Result<Vec<(usize, i64, Vec<Vec<f64>>)>> {
    let mut out = Vec::new();
    for (wi, px) in rates.pxs.iter().enumerate() {
        let grid = px.default_grid()?;
        for &r0 in &cfg.r0s {
            let gts: Vec<&GroundTruth> = cfg.field_ns.iter().map(|&n| &truths[&(wi, n, r0)]).collect();
            let rows = px.compare_field(&grid, &gts)?;
            let k = gts.len();
            let per_point = rows.chunks(k).map(|c| c.iter().map(|r| r.abs_ratio_err).collect()).collect();
            out.push((wi, r0, per_point));
        }
    }
    Ok(out)
}

fn check_field(cfg: &SuiteConfig, rates: &Rates) -> Result<Outcome> {
    let mut min_frac: f64 = 1.0;
    let mut detail = Vec::new();
    for (wi, r0, pts) in field_errors(cfg, rates, &rates.truths)? {
        let good = pts.iter().filter(|e| e.windows(2).all(|p| p[1] < p[0] && cfg.in_band(p[0] / p[1]))).count();
        let frac = good as f64 / pts.len() as f64;
        min_frac = min_frac.min(frac);
        detail.push(format!("w={} r0={r0}: {good}/{}", cfg.ws[wi], pts.len()));
    }
    detail.push(format!("ground truth {:.1}s", rates.seconds));
    Ok(Outcome { measured: min_frac, pass: min_frac >= cfg.point_fraction && cfg.field_ns.len() >= 2, detail: detail.join("; ") })
}

/// (w index, r0, base N, quantity, err(N), err(2N)) for each norm pair.
fn norm_errors(
    cfg: &SuiteConfig,
    rates: &Rates,
    truths: &BTreeMap<TruthKey, GroundTruth>,
) -> Vec<(usize, i64, u32, &'static str, f64, f64)> {
    let mut out = Vec::new();
    for (wi, px) in rates.pxs.iter().enumerate() {
        for &r0 in &cfg.r0s {
            for &nn in &cfg.norm_ns {
                let e = |n: u32| {
                    let gt = &truths[&(wi, n, r0)];
                    let eh = (gt.h / px.predict_h(r0, n) - 1.0).abs();
                    let ehat = (gt.h_hat / px.predict_hhat(r0, n) - 1.0).norm();
                    (eh, ehat)
                };
                let (a, b) = (e(nn), e(2 * nn));
                out.push((wi, r0, nn, "h", a.0, b.0));
                out.push((wi, r0, nn, "ĥ", a.1, b.1));
            }
        }
    }
    out
}

fn check_norms(cfg: &SuiteConfig, rates: &Rates) -> Result<Outcome> {
    let rows = norm_errors(cfg, rates, &rates.truths);
    let mut bad = Vec::new();
    for (wi, r0, nn, q, a, b) in &rows {
        let ratio = a / b;
        if !cfg.in_band(ratio) {
            bad.push(format!("w={} r0={r0} {q} N={nn}→{}: {a:.3e}/{b:.3e} = {ratio:.2}", cfg.ws[*wi], 2 * nn));
        }
    }
    let detail = if bad.is_empty() { format!("{} ratios in band", rows.len()) } else { format!("outside band: {}", bad.join("; ")) };
    Ok(Outcome { measured: bad.len() as f64, pass: bad.is_empty(), detail })
}

fn zero_stats(cfg: &SuiteConfig, rates: &Rates, truths: &BTreeMap<TruthKey, GroundTruth>) -> Result<Vec<(usize, i64, Vec<[f64; 2]>)>> {
    let mut out = Vec::new();
    for (wi, px) in rates.pxs.iter().enumerate() {
        for &r0 in &cfg.r0s {
            let mut v = Vec::new();
            for &n in &cfg.field_ns {
                let z = px.zero_measure_compare(&truths[&(wi, n, r0)])?;
                v.push([z.max_distance, z.ks]);
            }
            out.push((wi, r0, v));
        }
    }
    Ok(out)
}

fn check_zeros(cfg: &SuiteConfig, rates: &Rates) -> Result<Outcome> {
    let mut bad = 0usize;
    let mut detail = Vec::new();
    for (wi, r0, v) in zero_stats(cfg, rates, &rates.truths)? {
        for q in 0..2 {
            bad += v.windows(2).filter(|p| p[1][q] >= p[0][q]).count();
        }
        let fmt: Vec<String> = v.iter().map(|s| format!("{:.2e}/{:.3}", s[0], s[1])).collect();
        detail.push(format!("w={} r0={r0}: {}", cfg.ws[wi], fmt.join(" → ")));
    }
    Ok(Outcome { measured: bad as f64, pass: bad == 0, detail: detail.join("; ") })
}

fn reported_quantities(cfg: &SuiteConfig, rates: &Rates, truths: &BTreeMap<TruthKey, GroundTruth>) -> Result<Vec<f64>> {
    let mut q = Vec::new();
    for (_, _, pts) in field_errors(cfg, rates, truths)? {
        q.extend(pts.into_iter().flatten());
    }
    for (.., a, b) in norm_errors(cfg, rates, truths) {
        q.push(a);
        q.push(b);
    }
    for (_, _, v) in zero_stats(cfg, rates, truths)? {
        q.extend(v.into_iter().flatten());
    }
    Ok(q)
}

fn check_precision(cfg: &SuiteConfig, rates: &Rates) -> Result<Outcome> {
    let base = reported_quantities(cfg, rates, &rates.truths)?;
    let t0 = Instant::now();
    let bumped = compute_truths(cfg, cfg.precision_bump)?;
    let seconds = t0.elapsed().as_secs_f64();
    let again = reported_quantities(cfg, rates, &bumped)?;
    let worst = base.iter().zip(&again).map(|(a, b)| (a - b).abs() / b.abs().max(1e-300)).fold(0.0, f64::max);
    let time_ok = seconds <= 2.0 * rates.seconds;
    Ok(Outcome {
        measured: worst,
        pass: worst < 1e-10 && time_ok,
        detail: format!("{} quantities, rerun {seconds:.1}s vs baseline {:.1}s", base.len(), rates.seconds),
    })
}

fn check_partition(cfg: &SuiteConfig, pxs: &[Parametrix]) -> Result<Outcome> {
    let mut bad = 0usize;
    let mut detail = Vec::new();
    for (px, &w) in pxs.iter().zip(&cfg.ws) {
        let target = px.pd.ell2d - px.rho.ln();
        let mut gaps = Vec::new();
        for &nn in &cfg.partition_ns {
            let p = ModelParams::new(cfg.q0, cfg.q1, w, nn, 0)?;
            let fam = PlanarFamily::build(&p, cfg.digits)?;
            gaps.push((fam.log_partition() / (nn * nn) as f64 - target).abs());
        }
        bad += gaps.windows(2).filter(|g| g[1] >= g[0]).count();
        let fmt: Vec<String> = gaps.iter().map(|g| format!("{g:.4}")).collect();
        detail.push(format!("w={w}: {}", fmt.join(" → ")));
    }
    Ok(Outcome { measured: bad as f64, pass: bad == 0, detail: detail.join("; ") })
}

fn record(meta: &Meta, started: Instant, out: Result<Outcome>) -> CheckRecord {
    let seconds = started.elapsed().as_secs_f64();
    let (measured, pass, detail) = match out {
        Ok(o) => (o.measured, o.pass, o.detail),
        Err(e) => (f64::NAN, false, format!("error: {e}")),
    };
    CheckRecord {
        id: meta.id,
        title: meta.title.into(),
        anchor: meta.anchor.into(),
        measured,
        expected: meta.expected.into(),
        tolerance: meta.tolerance.into(),
        pass,
        detail,
        seconds,
    }
}

/// Runs the selected checks in order; `progress` sees each record as it completes.
pub fn run_suite(cfg: &SuiteConfig, mut progress: impl FnMut(&CheckRecord)) -> Result<Report> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let mut push = |meta: &Meta, started: Instant, out: Result<Outcome>| {
        let r = record(meta, started, out);
        progress(&r);
        checks.push(r);
    };
    for (meta, f) in [(&META[0], check_duality as fn(&SuiteConfig) -> Result<Outcome>), (&META[1], check_vanishing_w)] {
        if cfg.selected(meta.id) {
            let t = Instant::now();
            push(meta, t, f(cfg));
        }
    }
    let needs_geometry = (3..=11).any(|i| cfg.selected(i));
    let pxs: Vec<Parametrix> =
        if needs_geometry { cfg.ws.par_iter().map(|&w| Parametrix::build(&geometry(cfg, w)?)).collect::<Result<_>>()? } else { Vec::new() };
    type GeomCheck = fn(&SuiteConfig, &[Parametrix]) -> Result<Outcome>;
    for (meta, f) in
        [(&META[2], check_curve as GeomCheck), (&META[3], check_mother_body), (&META[4], check_topology), (&META[5], check_constants)]
    {
        if cfg.selected(meta.id) {
            let t = Instant::now();
            push(meta, t, f(cfg, &pxs));
        }
    }
    if (7..=10).any(|i| cfg.selected(i)) {
        let t = Instant::now();
        let truths = compute_truths(cfg, 0);
        let seconds = t.elapsed().as_secs_f64();
        match truths {
            Ok(truths) => {
                let rates = Rates { pxs, truths, seconds };
                type RateCheck = fn(&SuiteConfig, &Rates) -> Result<Outcome>;
                for (meta, f) in
                    [(&META[6], check_field as RateCheck), (&META[7], check_norms), (&META[8], check_zeros), (&META[9], check_precision)]
                {
                    if cfg.selected(meta.id) {
                        let t = Instant::now();
                        push(meta, t, f(cfg, &rates));
                    }
                }
                if cfg.selected(11) {
                    let t = Instant::now();
                    push(&META[10], t, check_partition(cfg, &rates.pxs));
                }
                return Ok(Report { config: cfg.clone(), checks });
            }
            Err(e) => {
                for meta in &META[6..10] {
                    if cfg.selected(meta.id) {
                        push(meta, t, Err(e.clone()));
                    }
                }
            }
        }
    }
    if cfg.selected(11) {
        let t = Instant::now();
        push(&META[10], t, check_partition(cfg, &pxs));
    }
    Ok(Report { config: cfg.clone(), checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_keys_cover_doubled_norm_sizes() {
        let cfg = SuiteConfig { ws: vec![1.0], field_ns: vec![10], norm_ns: vec![10], r0s: vec![0], ..Default::default() };
        assert_eq!(truth_keys(&cfg), vec![(0, 10, 0), (0, 20, 0)]);
    }

    #[test]
    fn band_is_closed() {
        let cfg = SuiteConfig::default();
        assert!(cfg.in_band(1.4) && cfg.in_band(2.6) && !cfg.in_band(2.61));
    }

    #[test]
    fn empty_lists_are_rejected() {
        let cfg = SuiteConfig { field_ns: vec![], ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
