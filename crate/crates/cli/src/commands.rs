use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use mothersolve::asymptotics::Parametrix;
use mothersolve::curve::solve_curve;
use mothersolve::model::{classify_phase, critical_w, ModelParams, PhaseTag};
use mothersolve::motherbody::{loops_from_c0, MotherBody, TraceOptions, Trajectory};
use mothersolve::mp::Precision;
use mothersolve::orthopoly::{ground_truth, ground_truth_checked, policy_digits, GroundTruth, MomentRecord, PolyRecord};
use mothersolve::potential::PotentialData;
use mothersolve::suite::{run_suite, CheckRecord};
use mothersolve::{MpMoments, Params, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Dec, RunConfig};
use crate::output::{dir, num, resample, resample_values, w_dir, write_json, write_rows, write_table, DecPoint, Row, SCHEMA_VERSION};
use crate::Failure;

fn params(cfg: &RunConfig, w: &Dec) -> Result<Params, Failure> {
    Ok(ModelParams::geometry(cfg.q0.value(), cfg.q1.value(), w.value())?)
}

fn geometry(cfg: &RunConfig, w: &Dec) -> Result<PotentialData, Failure> {
    let p = params(cfg, w)?;
    let curve = solve_curve(&p)?;
    Ok(PotentialData::new(MotherBody::build(&curve, TraceOptions::default())?)?)
}

/// Geometry for every configured w, solved in parallel and returned in config order.
fn geometries(cfg: &RunConfig) -> Result<Vec<PotentialData>, Failure> {
    cfg.w.par_iter().map(|w| geometry(cfg, w)).collect()
}

fn trajectory_rows(t: &Trajectory, m: usize) -> Vec<Row> {
    let phi: Vec<f64> = t.phi.iter().map(|p| p.re).collect();
    resample_values(&t.points, &phi, m).into_iter().map(|(s, z, value)| Row { s, z, value }).collect()
}

fn boundary_rows(pd: &PotentialData, m: usize) -> Result<Vec<Row>, Failure> {
    let total = pd.body.curve.params.total();
    let pts = pd.body.curve.map.boundary(m)?;
    Ok(pts
        .iter()
        .enumerate()
        .map(|(j, (z, _))| Row { s: 2.0 * PI * j as f64 / m as f64, z: *z, value: total / (PI * (1.0 + z.norm_sqr()).powi(2)) })
        .collect())
}

fn gamma0_rows(pd: &PotentialData, m: usize) -> Vec<Row> {
    let b = &pd.body;
    resample_values(&b.gamma0.points, &b.density, m).into_iter().map(|(s, z, value)| Row { s, z, value }).collect()
}

/// μ0 density per unit arclength at CDF midpoints t = (j + 1/2)/m.
fn density_rows(pd: &PotentialData, m: usize) -> Result<Vec<Row>, Failure> {
    let b = &pd.body;
    (0..m)
        .map(|j| {
            let t = (j as f64 + 0.5) / m as f64;
            let z = b.point_at(t)?;
            Ok(Row { s: t, z, value: b.curve.r0(z)?.norm().sqrt() / (2.0 * PI) })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveBundle {
    pub schema_version: u32,
    pub q0: String,
    pub q1: String,
    pub w: String,
    pub w_critical: String,
    pub phase: String,
    pub rho: String,
    pub a: String,
    pub b: String,
    pub c0: String,
    pub z1: DecPoint,
    pub z2: DecPoint,
    /// Zero of the first-sheet Schwarz function.
    pub f_b: String,
    pub origin_inside: bool,
    pub real_crossing: String,
    pub mass: String,
    pub ell0: String,
    pub ell2d: String,
    pub windings: [i64; 3],
    pub files: BTreeMap<String, usize>,
}

fn curve_bundle(cfg: &RunConfig, w: &Dec, pd: &PotentialData, files: BTreeMap<String, usize>) -> Result<CurveBundle, Failure> {
    let b = &pd.body;
    let cv = &b.curve;
    let p = params(cfg, w)?;
    Ok(CurveBundle {
        schema_version: SCHEMA_VERSION,
        q0: cfg.q0.text().into(),
        q1: cfg.q1.text().into(),
        w: w.text().into(),
        w_critical: num(critical_w(p.q0, p.q1)?),
        phase: format!("{:?}", classify_phase(&p)?.tag),
        rho: num(cv.map.rho),
        a: num(cv.map.a),
        b: num(cv.map.b),
        c0: num(cv.c0),
        z1: cv.z1.into(),
        z2: cv.z2.into(),
        f_b: num(cv.fb),
        origin_inside: cv.map.origin_inside(),
        real_crossing: num(b.real_crossing),
        mass: num(b.mass),
        ell0: num(pd.ell0),
        ell2d: num(pd.ell2d),
        windings: b.windings(),
        files,
    })
}

fn emit(base: &Path, name: &str, rows: &[Row], files: &mut BTreeMap<String, usize>) -> Result<(), Failure> {
    write_rows(&base.join(name), rows)?;
    files.insert(name.to_string(), rows.len());
    Ok(())
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let pds = geometries(cfg)?;
    let s = &cfg.samples;
    for (w, pd) in cfg.w.iter().zip(&pds) {
        let base = dir(out, &["solve", &w_dir(w.text())])?;
        let b = &pd.body;
        let mut files = BTreeMap::new();
        emit(&base, "boundary.csv", &boundary_rows(pd, s.boundary)?, &mut files)?;
        emit(&base, "gamma0.csv", &gamma0_rows(pd, s.trajectory), &mut files)?;
        emit(&base, "gamma1.csv", &trajectory_rows(&b.gamma1, s.trajectory), &mut files)?;
        emit(&base, "gamma2.csv", &trajectory_rows(&b.gamma2, s.trajectory), &mut files)?;
        emit(&base, "mu0_density.csv", &density_rows(pd, s.density)?, &mut files)?;
        write_json(&base.join("curve.json"), &curve_bundle(cfg, w, pd, files)?)?;
    }
    Ok(())
}

pub fn figures(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let pds = geometries(cfg)?;
    let s = &cfg.samples;
    let r0 = cfg.r0[0];
    for (w, pd) in cfg.w.iter().zip(&pds) {
        let base = dir(out, &["figures", &w_dir(w.text())])?;
        let b = &pd.body;
        let mut files = BTreeMap::new();
        emit(&base, "droplet.csv", &boundary_rows(pd, s.boundary)?, &mut files)?;
        emit(&base, "gamma0.csv", &gamma0_rows(pd, s.trajectory), &mut files)?;
        emit(&base, "left.csv", &trajectory_rows(&b.left, s.trajectory), &mut files)?;
        emit(&base, "right.csv", &trajectory_rows(&b.right, s.trajectory), &mut files)?;
        emit(&base, "gamma1.csv", &trajectory_rows(&b.gamma1, s.trajectory), &mut files)?;
        emit(&base, "gamma2.csv", &trajectory_rows(&b.gamma2, s.trajectory), &mut files)?;
        let contour: Vec<Row> = resample(&b.gamma, s.trajectory).into_iter().map(|(s, z)| Row { s, z, value: 0.0 }).collect();
        emit(&base, "contour.csv", &contour, &mut files)?;
        let (inner, outer) = loops_from_c0(&b.curve, TraceOptions::default())?;
        emit(&base, "loop_inner.csv", &trajectory_rows(&inner, s.trajectory), &mut files)?;
        emit(&base, "loop_outer.csv", &trajectory_rows(&outer, s.trajectory), &mut files)?;
        let truths = truths_for(cfg, w, &[r0], false)?;
        for gt in &truths {
            let name = format!("zeros_N{}.csv", gt.params.big_n);
            emit(&base, &name, &zero_rows(pd, gt), &mut files)?;
        }
        write_json(&base.join("curve.json"), &curve_bundle(cfg, w, pd, files)?)?;
    }
    Ok(())
}

fn zero_rows(pd: &PotentialData, gt: &GroundTruth) -> Vec<Row> {
    gt.zeros.iter().enumerate().map(|(k, z)| Row { s: k as f64, z: *z, value: pd.body.distance_to_gamma0(*z) }).collect()
}

/// Ground truths for every (N, r0), ordered by N then r0.
fn truths_for(cfg: &RunConfig, w: &Dec, r0s: &[i64], checked: bool) -> Result<Vec<GroundTruth>, Failure> {
    let base = params(cfg, w)?;
    let jobs: Vec<(u32, i64)> = cfg.n_list.iter().flat_map(|&nn| r0s.iter().map(move |&r| (nn, r))).collect();
    jobs.par_iter()
        .map(|&(nn, r0)| {
            let n = nn as i64 + r0;
            let p = base.with_sizes(nn, n)?;
            let gt =
                if checked { ground_truth_checked(&p, n, cfg.precision, cfg.precision_bump)? } else { ground_truth(&p, n, cfg.precision)? };
            Ok(gt)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Residuals {
    pub imaginary_part: String,
    pub orthogonality: String,
    pub roots: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyBundle {
    pub schema_version: u32,
    pub r0: i64,
    pub zero_count: usize,
    pub residuals: Residuals,
    pub moment_nodes: usize,
    pub polynomial: PolyRecord,
    pub moments: MomentRecord,
}

fn moment_record(gt: &GroundTruth) -> Result<MomentRecord, Failure> {
    let _g = Precision::digits(gt.digits);
    Ok(MpMoments::for_degree(&gt.params, gt.n)?.record())
}

/// Probe grid, displaced inside a disk of radius jitter·|z1 − z2| when seeded.
fn probe_grid(px: &Parametrix, jitter: f64, seed: Option<u64>) -> Result<Vec<C64>, Failure> {
    let grid = px.default_grid()?;
    let Some(seed) = seed else {
        return Ok(grid);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = jitter * px.pd.scale();
    Ok(grid
        .into_iter()
        .map(|z| {
            let rad = r * rng.gen::<f64>().sqrt();
            let th = 2.0 * PI * rng.gen::<f64>();
            let q = z + C64::from_polar(rad, th);
            if px.pd.body.distance_to_gamma0(q) >= px.margin {
                q
            } else {
                z
            }
        })
        .collect())
}

pub fn poly(cfg: &RunConfig, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    for w in &cfg.w {
        let px = Parametrix::new(geometry(cfg, w)?)?;
        let truths = truths_for(cfg, w, &cfg.r0, true)?;
        let moments: Vec<MomentRecord> = truths.par_iter().map(moment_record).collect::<Result<_, _>>()?;
        let base = dir(out, &["poly", &w_dir(w.text())])?;
        for (gt, mr) in truths.iter().zip(moments) {
            let nn = gt.params.big_n;
            let r0 = gt.n - nn as i64;
            let bundle = PolyBundle {
                schema_version: SCHEMA_VERSION,
                r0,
                zero_count: gt.zeros.len(),
                residuals: Residuals {
                    imaginary_part: num(gt.imag_residual),
                    orthogonality: num(gt.orthogonality_residual),
                    roots: num(gt.root_residual),
                },
                moment_nodes: gt.moment_nodes,
                polynomial: gt.record.clone(),
                moments: mr,
            };
            write_json(&base.join(format!("N{nn}_r{r0}.json")), &bundle)?;
            write_rows(&base.join(format!("zeros_N{nn}_r{r0}.csv")), &zero_rows(&px.pd, gt))?;
        }
        let grid = probe_grid(&px, cfg.jitter.value(), seed)?;
        let refs: Vec<&GroundTruth> = truths.iter().collect();
        let rows: Vec<Vec<String>> = px
            .compare_field(&grid, &refs)?
            .into_iter()
            .map(|r| vec![num(r.re), num(r.im), r.big_n.to_string(), r.n.to_string(), num(r.abs_ratio_err)])
            .collect();
        write_table(&base.join("field_errors.csv"), &["re", "im", "N", "n", "abs_ratio_err"], &rows)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub package: &'static str,
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub threads: usize,
    pub unix_time: u64,
    pub elapsed_seconds: String,
    /// Working digits of the polynomial layer at the largest configured degree.
    pub digits: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub id: u32,
    pub title: String,
    pub anchor: String,
    pub measured: String,
    pub expected: String,
    pub tolerance: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: String,
}

impl From<&CheckRecord> for CheckRow {
    fn from(c: &CheckRecord) -> Self {
        CheckRow {
            id: c.id,
            title: c.title.clone(),
            anchor: c.anchor.clone(),
            measured: num(c.measured),
            expected: c.expected.clone(),
            tolerance: c.tolerance.clone(),
            pass: c.pass,
            detail: c.detail.clone(),
            seconds: format!("{:.3}", c.seconds),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub all_pass: bool,
    pub failures: Vec<u32>,
    pub checks: Vec<CheckRow>,
    pub environment: Environment,
    pub config: RunConfig,
}

pub fn verify(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let suite = cfg.suite()?;
    let started = Instant::now();
    let report = run_suite(&suite, |r| println!("{}", r.line()))?;
    let max_n = cfg.n_list.iter().max().copied().unwrap_or(0) as i64 + cfg.r0.iter().max().copied().unwrap_or(0) + 1;
    let env = Environment {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        os: std::env::consts::OS,
        arch: std::env::consts::ARCH,
        threads: rayon::current_num_threads(),
        unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        elapsed_seconds: format!("{:.3}", started.elapsed().as_secs_f64()),
        digits: cfg.precision.unwrap_or_else(|| policy_digits(max_n)),
    };
    let failures: Vec<u32> = report.failures().iter().map(|c| c.id).collect();
    let doc = VerifyReport {
        schema_version: SCHEMA_VERSION,
        all_pass: report.all_pass(),
        failures: failures.clone(),
        checks: report.checks.iter().map(CheckRow::from).collect(),
        environment: env,
        config: cfg.clone(),
    };
    let base = dir(out, &["verify"])?;
    write_json(&base.join("report.json"), &doc)?;
    let mut text: String = report.checks.iter().map(|c| c.line() + "\n").collect();
    text.push_str(&format!("{} of {} checks passed\n", report.checks.len() - failures.len(), report.checks.len()));
    std::fs::write(base.join("report.txt"), text).map_err(|e| Failure::Io(e.to_string()))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks(failures))
    }
}

/// Refuses critical and post-critical input before any output is written.
pub fn require_precritical_all(cfg: &RunConfig) -> Result<(), Failure> {
    for w in &cfg.w {
        let p = params(cfg, w)?;
        let phase = classify_phase(&p)?;
        if phase.tag != PhaseTag::PreCritical {
            return Err(Failure::PostCritical(format!(
                "w = {w} is {:?}; the droplet construction needs w > w_cri = {}",
                phase.tag,
                num(critical_w(p.q0, p.q1)?)
            )));
        }
    }
    Ok(())
}
