use mothersolve::model::ModelParams;
use mothersolve::mp::{Mp, Precision};
use mothersolve::orthopoly::*;
use mothersolve::scalar::{c_to_f64, Real};
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

type C = Complex<f64>;

fn binom(n: i64, k: i64) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// [z^e] (z−w)^N (1+wz)^{−2N} for rational w: the residue at 0 of the
/// integer-exponent weight with Q0 = Q1 = 1, so m_k = 2πi · coef(N−1−k).
fn residue_coef(big_n: i64, w: &BigRational, e: i64) -> BigRational {
    if e < 0 {
        return BigRational::zero();
    }
    let mut acc = BigRational::zero();
    for j in 0..=big_n.min(e) {
        let a = BigRational::from(binom(big_n, j)) * num_traits::pow(-w.clone(), (big_n - j) as usize);
        let m = e - j;
        let sign = if m % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        let b = BigRational::from(sign * binom(2 * big_n + m - 1, m)) * num_traits::pow(w.clone(), m as usize);
        acc += a * b;
    }
    acc
}

fn rational_to_mp(r: &BigRational) -> Mp {
    let num = Mp::parse_decimal(&r.numer().abs().to_string()).unwrap();
    let den = Mp::parse_decimal(&r.denom().to_string()).unwrap();
    let v = num / den;
    if r.is_negative() {
        -v
    } else {
        v
    }
}

fn rel(a: &Complex<Mp>, b: &Complex<Mp>) -> f64 {
    let d = a - b;
    let num = (d.re.clone() * d.re.clone() + d.im.clone() * d.im.clone()).sqrt();
    let den = (b.re.clone() * b.re.clone() + b.im.clone() * b.im.clone()).sqrt();
    if den.is_zero() {
        num.to_f64()
    } else {
        (num / den).to_f64()
    }
}

#[test]
fn moments_match_exact_residues() {
    let _g = Precision::digits(60);
    for (w, wq) in [(0.5, BigRational::new(1.into(), 2.into())), (1.0, BigRational::one()), (2.0, BigRational::from_integer(2.into()))] {
        for big_n in 1..=3i64 {
            let n_max = 6 - big_n;
            let p = ModelParams::new(1.0, 1.0, w, big_n as u32, 0).unwrap();
            let t = MomentTable::<Mp>::compute(&p, -n_max, n_max, Circle::standard(w), &MomentOptions::default()).unwrap();
            for k in -n_max..=n_max {
                let c = residue_coef(big_n, &wq, big_n - 1 - k);
                let two_pi = Mp::pi() * Mp::from_i64(2);
                let exact = Complex::new(Mp::from_i64(0), two_pi * rational_to_mp(&c));
                let got = t.base(k).unwrap();
                if c.is_zero() {
                    assert!(c_to_f64(got).norm() < 1e-50 * t.scale[(k - t.kmin) as usize], "w={w} N={big_n} k={k}");
                } else {
                    assert!(rel(got, &exact) < 1e-50, "w={w} N={big_n} k={k}: {}", rel(got, &exact));
                }
            }
        }
    }
}

#[test]
fn moments_independent_of_contour() {
    {
        let _g = Precision::digits(60);
        let p = ModelParams::new(1.0, 1.0, 1.0, 5, 0).unwrap();
        let t = MomentTable::<Mp>::for_degree(&p, 6).unwrap();
        assert!(t.deformation_error(1.1).unwrap() < 1e-30);
    }
    // non-integer exponents take the principal-branch path
    let p = ModelParams::new(0.5, 1.5, 1.3, 3, 0).unwrap();
    assert!(p.integer_exponents().is_none());
    let t = MomentTable::<f64>::for_degree(&p, 3).unwrap();
    assert!(t.deformation_error(1.1).unwrap() < 1e-10);
}

#[test]
fn vanishing_w_reduces_to_monomial_loop_integrals() {
    let unit = Circle { center: 0.0, radius: 1.0 };
    for big_n in 1..=3u32 {
        let p = ModelParams::new(1.0, 1.0, 1e-14, big_n, 0).unwrap();
        for j in 0..big_n as i64 {
            for k in 0..big_n as i64 {
                let v: C = duality_contour_on(&p, j, k, &unit, &MomentOptions::default()).unwrap();
                let e = if j == k { C::new(0.0, 2.0 * std::f64::consts::PI) } else { C::new(0.0, 0.0) };
                assert!((v - e).norm() < 1e-12, "N={big_n} j={j} k={k} {v}");
            }
        }
    }
}

#[test]
fn duality_with_non_integer_exponents() {
    let p = ModelParams::new(0.75, 1.25, 1.2, 2, 0).unwrap();
    assert!(p.integer_exponents().is_none());
    for j in 0..2 {
        for k in 0..2 {
            let pl = planar_moment(&p, j, k).unwrap();
            let g: f64 = gamma_constant(&p, k).unwrap();
            let co: C = duality_contour(&p, j, k, &MomentOptions::default()).unwrap();
            let rhs = co * g / C::new(0.0, 2.0);
            assert!((pl - rhs).norm() / rhs.norm() < 1e-7, "j={j} k={k} {pl} {rhs}");
        }
    }
}

#[test]
fn planar_hermitian_symmetry() {
    let p = ModelParams::new(1.0, 1.0, 0.8, 3, 3).unwrap();
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let a = planar_gram(&p, i, j).unwrap();
        let b = planar_gram(&p, j, i).unwrap();
        assert!((a - b.conj()).norm() < 1e-13 * a.norm().max(1e-300));
    }
}

#[test]
fn hankel_solution_invariants() {
    let n = 8i64;
    let digits = policy_digits(n);
    let _g = Precision::digits(digits);
    let p = ModelParams::new(1.0, 1.0, 1.0, 8, n).unwrap();
    let t = MomentTable::<Mp>::for_degree(&p, n + 1).unwrap();
    let s = build_monic_op(&t, n).unwrap();
    assert!(s.coeffs[n as usize] == Complex::new(Mp::from_i64(1), Mp::from_i64(0)));
    assert!(s.orthogonality_residual < 10f64.powf(-(digits as f64) / 3.0));
    // the z^0 pairing vanishes together with j = 1..n−1
    let j0 = c_to_f64(&s.pairing(&t, 0).unwrap()).norm();
    let scale: f64 = s.coeffs.iter().enumerate().map(|(i, c)| c_to_f64(c).norm() * c_to_f64(t.nu(n, i as i64).unwrap()).norm()).sum();
    assert!(j0 < 10f64.powf(-(digits as f64) / 3.0) * scale);
    let ratio = hankel_det_ratio(&t, n).unwrap();
    assert!(rel(&ratio, &s.h_tilde) < 10f64.powf(-(digits as f64) / 3.0));
    // real data: monic coefficients are real
    for c in &s.coeffs {
        assert!(c.im.abs().to_f64() <= 1e-40 * c.re.abs().to_f64().max(1e-300));
    }
}

#[test]
fn norm_chain_matches_planar_gram_determinant() {
    let p = ModelParams::new(1.0, 1.0, 1.0, 2, 2).unwrap();
    let g = ground_truth(&p, 2, None).unwrap();
    let det = |m: usize| -> C {
        let mut a = vec![vec![C::new(0.0, 0.0); m]; m];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = planar_gram(&p, i as i64, j as i64).unwrap();
            }
        }
        match m {
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            3 => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
            _ => unreachable!(),
        }
    };
    let h_gram = det(3) / det(2);
    assert!((g.h / h_gram.re - 1.0).abs() < 1e-6, "{} vs {}", g.h, h_gram);
    assert!(g.h > 0.0 && g.imag_residual < 1e-20);
    // ĥ/h̃ = w^{N+NQ0} = 1 at w = 1
    assert!((g.h_hat - g.h_tilde).norm() <= 1e-15 * g.h_tilde.norm());
}

#[test]
fn h_hat_scaling_is_exact() {
    let _g = Precision::digits(60);
    let p = ModelParams::new(1.0, 1.0, 2.0, 4, 4).unwrap();
    let d = solve_degree::<Mp>(&p, 4).unwrap();
    let scale = Complex::new(Mp::from_i64(2).powi(8), Mp::from_i64(0));
    assert!(d.norms.h_hat == &d.norms.h_tilde * scale);
}

#[test]
fn precision_escalation_is_stable() {
    let p = ModelParams::new(1.0, 1.0, 1.0, 10, 10).unwrap();
    let a = ground_truth(&p, 10, None).unwrap();
    let b = ground_truth(&p, 10, Some(policy_digits(10) + 20)).unwrap();
    assert!((a.h_tilde - b.h_tilde).norm() < 1e-10 * b.h_tilde.norm());
    let cn: f64 = b.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
        assert!((x - y).norm() < 1e-10 * cn);
    }
}

#[test]
fn zeros_are_conjugation_symmetric() {
    let p = ModelParams::new(1.0, 1.0, 0.5, 12, 12).unwrap();
    let g = ground_truth(&p, 12, None).unwrap();
    assert_eq!(g.zeros.len(), 12);
    for z in &g.zeros {
        let d = g.zeros.iter().map(|y| (y - z.conj()).norm()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-10);
    }
    let rec = &g.record;
    assert_eq!(rec.zeros.len(), 12);
    let json = serde_json::to_string(rec).unwrap();
    let back: PolyRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(&back, rec);
}

#[test]
fn kernel_reproduces_particle_number() {
    for big_n in 1..=4u32 {
        let p = ModelParams::new(1.0, 1.0, 1.0, big_n, 0).unwrap();
        let fam = PlanarFamily::build(&p, None).unwrap();
        let mass = planar_integral(&p, |z| fam.kernel(z, z) / planar_weight(&p, z), &PlanarOptions::default()).unwrap();
        assert!((mass.re / big_n as f64 - 1.0).abs() < 1e-4, "N={big_n}: {mass}");
        let (x, y) = (C::new(0.3, -0.4), C::new(-1.1, 0.7));
        assert!((fam.kernel(x, y) - fam.kernel(y, x).conj()).norm() < 1e-13);
        for re in [-2.0, -0.5, 0.0, 0.7, 1.5] {
            for im in [-1.0, 0.0, 0.4, 2.0] {
                assert!(fam.kernel(C::new(re, im), C::new(re, im)).re >= 0.0);
            }
        }
    }
    let p = ModelParams::new(1.0, 1.0, 1.0, 3, 0).unwrap();
    let fam = PlanarFamily::build(&p, None).unwrap();
    let short = PlanarFamily::from_parts(&p, fam.polys[..2].to_vec(), fam.h[..2].to_vec());
    assert!(short.is_err());
}

#[test]
fn partition_single_particle_is_planar_mass() {
    for w in [0.5, 1.0, 2.0] {
        let p = ModelParams::new(1.0, 1.0, w, 1, 0).unwrap();
        let fam = PlanarFamily::build(&p, None).unwrap();
        let mass = planar_moment(&p, 0, 0).unwrap().re;
        assert!((fam.log_partition().exp() / mass - 1.0).abs() < 1e-6);
    }
}

#[test]
fn singular_hankel_asks_for_more_precision() {
    // at double precision the degree-30 Hankel system is hopeless
    let p = ModelParams::new(1.0, 1.0, 1.0, 30, 30).unwrap();
    let t = MomentTable::<f64>::for_degree(&p, 30).unwrap();
    match build_monic_op(&t, 30) {
        Err(mothersolve::error::Error::Precision(_)) => {}
        Ok(s) => assert!(s.orthogonality_residual > 1e-8, "unexpectedly accurate"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn escalation_accepts_policy_and_rejects_starved_precision() {
    let p = ModelParams::new(1.0, 1.0, 1.0, 10, 10).unwrap();
    let gt = ground_truth_checked(&p, 10, None, 20).unwrap();
    assert_eq!(gt.digits, policy_digits(10));
    assert_eq!(gt.zeros.len(), 10);
    let p = ModelParams::new(1.0, 1.0, 2.0, 30, 30).unwrap();
    match ground_truth_checked(&p, 30, Some(24), 20) {
        Err(mothersolve::Error::Precision(_)) => {}
        other => panic!("expected a precision failure, got {:?}", other.map(|g| g.h)),
    }
}
