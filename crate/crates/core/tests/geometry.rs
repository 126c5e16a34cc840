use mothersolve::curve::{solve_curve, SpectralCurve};
use mothersolve::model::{
    classify_phase, contour_weight, critical_w, gamma_ratio, log_potential, log_potential_re, planar_potential, ModelParams, PhaseTag,
    PotentialValue,
};
use mothersolve::motherbody::{MotherBody, TraceOptions};
use mothersolve::potential::PotentialData;
use mothersolve::{Error, Params, Params32};
use num_complex::Complex;
use proptest::prelude::*;

type C = Complex<f64>;

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm()
}

/// Independent closed form for the critical insertion point.
fn critical_oracle(q0: f64, q1: f64) -> f64 {
    (2.0 * q0 * q1 + q0 + q1 + 2.0 * (q0 * q1 * (1.0 + q0) * (1.0 + q1)).sqrt()).powf(-0.5)
}

fn solve(q0: f64, q1: f64, w: f64) -> SpectralCurve<f64> {
    solve_curve(&Params::geometry(q0, q1, w).unwrap()).unwrap()
}

#[test]
fn baseline_critical_point() {
    assert!((critical_w(1.0, 1.0).unwrap() - 8f64.powf(-0.5)).abs() < 1e-15);
    let wc = critical_w(1.0f32, 1.0).unwrap();
    assert!((wc - 8f32.powf(-0.5)).abs() < 1e-6);
    let p32 = Params32::geometry(1.0, 1.0, 1.0).unwrap();
    assert_eq!(classify_phase(&p32).unwrap().tag, PhaseTag::PreCritical);
}

#[test]
fn phases_around_critical_point() {
    let wc = critical_w(1.0, 1.0).unwrap();
    let tag = |w: f64| classify_phase(&Params::geometry(1.0, 1.0, w).unwrap()).unwrap().tag;
    assert_eq!(tag(wc * 1.01), PhaseTag::PreCritical);
    assert_eq!(tag(wc * 0.99), PhaseTag::PostCritical);
    assert_eq!(tag(wc * (1.0 + 1e-14)), PhaseTag::Critical);
    let err = solve_curve(&Params::geometry(1.0, 1.0, wc * 0.9).unwrap()).unwrap_err();
    assert!(matches!(err, Error::PostCritical { .. }));
}

#[test]
fn gamma_constant_small_values() {
    let p = Params::new(1.0, 1.0, 1.0, 1, 0).unwrap();
    assert!((gamma_ratio(&p, 0).unwrap() * 6.0 - 1.0).abs() < 1e-13);
    assert!((gamma_ratio(&p, 1).unwrap() * 3.0 - 1.0).abs() < 1e-13);
}

#[test]
fn baseline_node_is_closed_form() {
    for w in [0.5f64, 1.0, 2.0] {
        let cv = solve(1.0, 1.0, w);
        assert!((cv.c0 - (w + (1.0 + w * w).sqrt())).abs() < 1e-10 * cv.c0);
    }
}

#[test]
fn planar_potential_has_sentinel_at_insertion() {
    let p = Params::new(1.0, 1.0, 0.7, 4, 4).unwrap();
    assert!(planar_potential(&p, C::new(0.7, 0.0)).finite().is_none());
    match planar_potential(&p, C::new(0.1, 0.3)) {
        PotentialValue::Finite(v) => {
            let z: C = C::new(0.1, 0.3);
            let expect = (1.0 + 0.25 + 2.0) * (1.0 + z.norm_sqr()).ln() - 2.0 * (z - 0.7).norm().ln();
            assert!((v - expect).abs() < 1e-14);
        }
        other => panic!("unexpected {other:?}"),
    }
}

prop_compose! {
    fn precritical()(q0 in 0.4f64..3.0, q1 in 0.4f64..3.0, lift in 1.15f64..4.0) -> (f64, f64, f64) {
        (q0, q1, critical_oracle(q0, q1) * lift)
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn critical_point_matches_oracle(q0 in 0.05f64..10.0, q1 in 0.05f64..10.0) {
        let a = critical_w(q0, q1).unwrap();
        prop_assert!((a / critical_oracle(q0, q1) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gamma_constant_recursion(big_n in 1u32..40, k in 0i64..20) {
        prop_assume!(k + 1 < 2 * big_n as i64);
        let p = Params::new(1.0, 2.0, 1.0, big_n, 0).unwrap();
        let g0 = gamma_ratio(&p, k).unwrap();
        let g1 = gamma_ratio(&p, k + 1).unwrap();
        let nf = big_n as f64;
        let kf = k as f64;
        let expect = (1.0 + kf + 2.0 * nf) / (2.0 * nf - kf - 1.0);
        prop_assert!((g1 / g0 / expect - 1.0).abs() < 1e-11);
    }

    #[test]
    fn contour_weight_is_exponential_of_field(big_n in 1u32..12, r0 in -2i64..3, re in -3.0f64..3.0, im in 0.05f64..3.0) {
        prop_assume!(big_n as i64 + r0 >= 0);
        let p = Params::new(1.0, 1.0, 0.8, big_n, big_n as i64 + r0).unwrap();
        let z = C::new(re, if re < 0.8 { im } else { -im });
        let lhs = contour_weight(&p, z).unwrap();
        let rhs = z.powi(-(r0 as i32)) * (-log_potential(&p, z).unwrap() * big_n as f64).exp();
        prop_assert!(rel(lhs, rhs) < 1e-10, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn curve_invariants_hold((q0, q1, w) in precritical()) {
        let cv = solve(q0, q1, w);
        let m = cv.map;
        prop_assert!((m.b * m.rho * m.rho / m.a / ((1.0 + q1) / q0) - 1.0).abs() < 1e-12);
        prop_assert!((cv.c0 / ((1.0 + q1) / (q0 * m.rho * m.b)) - 1.0).abs() < 1e-10);
        let z1 = C::new(2.0 * m.a - m.b, 2.0 * (m.a * (m.b - m.a)).sqrt()) * m.rho;
        prop_assert!(rel(cv.z1, z1) < 1e-10);
        prop_assert!(rel(cv.z2, z1.conj()) < 1e-10);
        prop_assert!(cv.c0 > w);
        prop_assert!(0.0 < m.a && m.a < 1.0 && m.a < m.b);
        // f maps the pair (v0, 1/v0) onto (w, −1/w)
        // smaller root of a·w·v² − (w + ρb)·v + ρ = 0
        let (qa, qb) = (m.a * w, w + m.rho * m.b);
        let v0 = (qb - (qb * qb - 4.0 * qa * m.rho).sqrt()) / (2.0 * qa);
        prop_assert!(v0 > 0.0 && v0 < 1.0);
        prop_assert!((m.f(C::new(1.0 / v0, 0.0)).unwrap() + 1.0 / w).norm() < 1e-8 * (1.0 + 1.0 / w));
    }

    #[test]
    fn sheets_invert_the_map((q0, q1, w) in precritical(), re in -4.0f64..4.0, im in 0.1f64..4.0) {
        let cv = solve(q0, q1, w);
        let z = C::new(re, im);
        let f1 = cv.inverse(z, 1).unwrap();
        let f2 = cv.inverse(z, 2).unwrap();
        prop_assert!(rel(cv.map.f(f1).unwrap(), z) < 1e-10);
        prop_assert!(rel(cv.map.f(f2).unwrap(), z) < 1e-10);
        prop_assert!(rel(cv.map.deck(f1).unwrap(), f2) < 1e-9);
    }

    #[test]
    fn schwarz_sheets_solve_the_curve((q0, q1, w) in precritical(), re in -4.0f64..4.0, im in 0.1f64..4.0) {
        let cv = solve(q0, q1, w);
        let z = C::new(re, im);
        let s1 = cv.schwarz_via_map(z, 1).unwrap();
        let s2 = cv.schwarz_via_map(z, 2).unwrap();
        let p1 = cv.p1(z);
        let p2 = cv.p2(z);
        prop_assert!((s1 + s2 - p1).norm() < 1e-9 * (1.0 + p1.norm()));
        prop_assert!((s1 * s2 - p2).norm() < 1e-9 * (1.0 + p2.norm()));
        let d = cv.r(z).unwrap();
        prop_assert!(((s2 - s1) * (s2 - s1) - d).norm() < 1e-8 * (1.0 + d.norm()));
    }

    #[test]
    fn schwarz_is_real_symmetric((q0, q1, w) in precritical(), re in -4.0f64..4.0, im in 0.1f64..4.0) {
        let cv = solve(q0, q1, w);
        let z = C::new(re, im);
        for sheet in [1, 2] {
            let a = cv.schwarz_via_map(z, sheet).unwrap();
            let b = cv.schwarz_via_map(z.conj(), sheet).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn boundary_satisfies_schwarz_relation((q0, q1, w) in precritical(), th in 0.0f64..6.283) {
        // on ∂Ω one sheet of the curve takes the value z̄/(1+|z|²)
        let cv = solve(q0, q1, w);
        let u = C::from_polar(1.0, th);
        let z = cv.map.f(u).unwrap();
        let expect = z.conj() / (1.0 + z.norm_sqr());
        let best = [1, 2].map(|k| (cv.schwarz(z, k).unwrap() - expect).norm()).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(best < 1e-9 * (1.0 + expect.norm()), "miss {}", best);
    }
}

fn body(q0: f64, q1: f64, w: f64) -> PotentialData {
    let cv = solve(q0, q1, w);
    PotentialData::new(MotherBody::build(&cv, TraceOptions::default()).unwrap()).unwrap()
}

#[test]
fn mother_body_off_baseline() {
    for (q0, q1, w) in [(2.0, 0.5, 1.3), (0.5, 3.0, 0.9), (1.5, 1.5, 0.6)] {
        let pd = body(q0, q1, w);
        let b = &pd.body;
        let tag = format!("q0={q0} q1={q1} w={w}");
        assert!((b.mass - 1.0).abs() < 1e-8, "{tag}: mass {}", b.mass);
        assert_eq!(b.windings(), [1, 1, 0], "{tag}");
        assert!(b.real_crossing > -1.0 / w && b.real_crossing < 0.0, "{tag}: crossing {}", b.real_crossing);
        assert!(b.gamma0.hausdorff(&b.gamma0.conj()) < 1e-6, "{tag}");
        let c0 = C::new(b.curve.c0, 0.0);
        assert!((b.gamma1.points.last().unwrap() - c0).norm() < 1e-8, "{tag}");
        for t in [0.1, 0.35, 0.6, 0.9] {
            let z = b.point_at(t).unwrap();
            let r = 2.0 * pd.u_on_gamma0(t).unwrap() + log_potential_re(&b.curve.params, z) + pd.ell0;
            assert!(r.abs() < 1e-7, "{tag}: Frostman at t={t}: {r:e}, spread {:e}", pd.ell0_spread);
        }
        let inner = b.gamma1.points.len() / 2;
        assert!(pd.frostman_residual(b.gamma1.points[inner]) > 0.0, "{tag}");
        assert!(pd.ell_relation_residual().unwrap().abs() < 1e-6, "{tag}");
    }
}

#[test]
fn ell_constants_at_baseline() {
    // frozen outputs of the exact-tail evaluation
    for (w, ell0, ell2d) in [(0.5, -1.6402660353, -1.8522013908), (1.0, -0.1467953308, -1.3448632855), (2.0, 1.6708756260, -0.3512248016)] {
        let pd = body(1.0, 1.0, w);
        assert!((pd.ell0 - ell0).abs() < 1e-8, "w={w}: {}", pd.ell0);
        assert!((pd.ell2d - ell2d).abs() < 1e-8, "w={w}: {}", pd.ell2d);
    }
}

#[test]
fn f32_parameters_follow_f64() {
    let p32 = Params32::new(1.0, 2.0, 0.9, 8, 9).unwrap();
    let p64 = ModelParams::new(1.0, 2.0, 0.9, 8, 9).unwrap();
    assert_eq!(p32.r0(), p64.r0());
    let g32 = gamma_ratio(&p32, 3).unwrap() as f64;
    let g64 = gamma_ratio(&p64, 3).unwrap();
    assert!((g32 / g64 - 1.0).abs() < 1e-5);
}
