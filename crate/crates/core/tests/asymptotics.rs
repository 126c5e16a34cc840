use std::sync::OnceLock;

use mothersolve::asymptotics::Parametrix;
use mothersolve::model::{ln_gamma_ratio, ModelParams};
use mothersolve::Error;
use num_complex::Complex;
use proptest::prelude::*;

type C = Complex<f64>;

const WS: [f64; 3] = [0.5, 1.0, 2.0];

fn params(w: f64) -> ModelParams<f64> {
    ModelParams::geometry(1.0, 1.0, w).unwrap()
}

fn parametrices() -> &'static [Parametrix] {
    static CELL: OnceLock<Vec<Parametrix>> = OnceLock::new();
    CELL.get_or_init(|| WS.iter().map(|&w| Parametrix::build(&params(w)).unwrap()).collect())
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm()
}

fn det(m: [[C; 2]; 2]) -> C {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

#[test]
fn jump_relation_holds_on_gamma0() {
    for px in parametrices() {
        for t in [0.15, 0.5, 0.85] {
            let js = px.jump_sample(t).unwrap();
            assert!(rel(js.plus.f1, js.minus.f2) < 1e-9, "F1+ vs F2- at t={t}");
            let dd = px.d(js.plus.f1) * px.d(js.minus.f1);
            assert!(rel(dd, js.z) < 1e-6, "D+D- = z at t={t}: {dd} vs {}", js.z);
            for r0 in [0, 1] {
                let r = px.jump_residual(&js, r0);
                assert!(r < 1e-5, "jump residual {r:.2e} at t={t}, r0={r0}");
            }
        }
    }
}

#[test]
fn parametrix_is_unimodular_and_normalized() {
    for px in parametrices() {
        for z in px.default_grid().unwrap().into_iter().take(12) {
            let br = px.branches(z).unwrap();
            for r0 in [0, 1] {
                let d = det(px.m_matrix(&br, r0));
                assert!((d - 1.0).norm() < 1e-10, "det M = {d} at {z}");
            }
        }
        // M·z^{−r0σ3} → I
        let zf = C::new(3e5, 2e5);
        let far = px.branches(zf).unwrap();
        for r0 in [0, 1] {
            let m = px.m_matrix(&far, r0);
            let zp = zf.powi(r0 as i32);
            assert!((m[0][0] / zp - 1.0).norm() < 1e-4);
            assert!((m[1][1] * zp - 1.0).norm() < 1e-4);
            assert!((m[0][1] * zp).norm() < 1e-4 && (m[1][0] / zp).norm() < 1e-4);
        }
    }
}

#[test]
fn exterior_form_matches_parametrix_entry() {
    for px in parametrices() {
        for z in px.default_grid().unwrap() {
            for r0 in [0, 1] {
                let a = px.predict_p(z, r0, 10).unwrap();
                let b = px.predict_p_exterior_form(z, r0, 10).unwrap();
                assert!(rel(a, b) < 1e-10, "{z}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn prefactor_grows_like_z_power() {
    for px in parametrices() {
        for z in [C::new(1e6, 0.0), C::new(-3e5, 8e5), C::new(0.0, -1e6)] {
            let br = px.first_sheet(z).unwrap();
            for r0 in [0, 1] {
                let p = px.prefactor(&br, r0) / z.powi(r0 as i32);
                assert!((p - 1.0).norm() < 1e-4, "prefactor {p} at {z}");
            }
        }
    }
}

#[test]
fn szego_factor_grows_like_z() {
    for px in parametrices() {
        let z = C::new(1e7, 1e7);
        let br = px.first_sheet(z).unwrap();
        let ratio = px.d(br.f1) / z;
        assert!((ratio - px.d_inf).norm() < 1e-5 * px.d_inf);
    }
}

#[test]
fn norm_prediction_scales_by_rho_squared_per_degree() {
    for px in parametrices() {
        for big_n in [10, 20, 40] {
            let q = px.predict_h(1, big_n) / px.predict_h(0, big_n);
            assert!((q / (px.rho * px.rho) - 1.0).abs() < 1e-12);
            let qh = px.predict_hhat(1, big_n) / px.predict_hhat(0, big_n);
            assert!(rel(qh, C::new(px.rho * px.a, 0.0)) < 1e-12);
        }
    }
}

#[test]
fn norm_chain_closes_on_predictions() {
    for px in parametrices() {
        for big_n in [10, 20, 40] {
            for r0 in [0, 1] {
                let chain = px.predict_h_via_chain(r0, big_n).unwrap();
                let h = px.predict_h(r0, big_n);
                assert!(rel(chain, C::new(h, 0.0)) < 1e-8, "w={} N={big_n} r0={r0}: {chain} vs {h}", px.pd.body.curve.params.w);
            }
        }
    }
}

#[test]
fn stirling_error_is_first_order() {
    let px = &parametrices()[1];
    for r0 in [0, 1] {
        let err = |big_n: u32| {
            let p = params(1.0).with_sizes(big_n, big_n as i64 + r0).unwrap();
            (px.stirling_gamma_log(r0, big_n) - ln_gamma_ratio(&p, p.n).unwrap()).abs()
        };
        let (e1, e2, e3) = (err(20), err(40), err(80));
        assert!(e1 < 0.1, "{e1} {e2} {e3}");
        assert!((e1 / e2 - 2.0).abs() < 0.2 && (e2 / e3 - 2.0).abs() < 0.1, "{e1} {e2} {e3}");
    }
}

#[test]
fn predictions_refuse_points_near_gamma0() {
    for px in parametrices() {
        let z = px.pd.body.point_at(0.5).unwrap();
        assert!(matches!(px.predict_p(z, 0, 10), Err(Error::Domain(_))));
        let near = z + C::new(0.0, 0.2 * px.margin);
        assert!(matches!(px.predict_p(near, 1, 10), Err(Error::Domain(_))));
    }
}

#[test]
fn empty_grid_gives_empty_table() {
    let px = &parametrices()[0];
    assert!(px.compare_field(&[], &[]).unwrap().is_empty());
}

#[test]
fn grid_respects_margin() {
    for px in parametrices() {
        let grid = px.default_grid().unwrap();
        assert!(grid.len() >= 10);
        for z in grid {
            assert!(px.pd.body.distance_to_gamma0(z) >= px.margin);
        }
    }
}

fn ring_point(px: &Parametrix, r: f64, th: f64) -> Option<C> {
    let z = px.pd.body.curve.map.f(C::from_polar(r, th)).ok()?;
    (px.pd.body.distance_to_gamma0(z) > 2.0 * px.margin).then_some(z)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn prediction_is_conjugation_symmetric(wi in 0usize..3, r in 0.2f64..0.9, th in 0.05f64..3.09, r0 in 0i64..2) {
        let px = &parametrices()[wi];
        if let Some(z) = ring_point(px, r, th) {
            let a = px.predict_p_log(z, r0, 16).unwrap();
            let b = px.predict_p_log(z.conj(), r0, 16).unwrap();
            prop_assert!((a.re - b.re).abs() < 1e-9);
            let phase = (a.im + b.im).rem_euclid(2.0 * std::f64::consts::PI);
            prop_assert!(phase.min(2.0 * std::f64::consts::PI - phase) < 1e-8, "phase mismatch {}", phase);
        }
    }

    #[test]
    fn log_prediction_is_linear_in_n(wi in 0usize..3, r in 0.2f64..0.9, th in 0.05f64..6.2) {
        let px = &parametrices()[wi];
        if let Some(z) = ring_point(px, r, th) {
            let a = px.predict_p_log(z, 0, 10).unwrap().re;
            let b = px.predict_p_log(z, 0, 20).unwrap().re;
            let c = px.predict_p_log(z, 0, 30).unwrap().re;
            prop_assert!((c - 2.0 * b + a).abs() < 1e-9 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn parametrix_determinant_is_one(wi in 0usize..3, r in 0.2f64..0.9, th in 0.0f64..6.28, r0 in 0i64..3) {
        let px = &parametrices()[wi];
        if let Some(z) = ring_point(px, r, th) {
            let br = px.branches(z).unwrap();
            prop_assert!((det(px.m_matrix(&br, r0)) - 1.0).norm() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn jump_residual_is_small_anywhere_on_gamma0(wi in 0usize..3, t in 0.08f64..0.92) {
        let px = &parametrices()[wi];
        let js = px.jump_sample(t).unwrap();
        for r0 in [0, 1, 2] {
            prop_assert!(px.jump_residual(&js, r0) < 1e-5);
        }
    }
}
