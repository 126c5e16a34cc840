//! Ground truth for the planar orthogonal polynomials: contour moments,
//! Hankel solve, the three norm constants, zeros, kernel and partition function.

pub mod linalg;
pub mod moments;
pub mod planar;
pub mod roots;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

pub use moments::{duality_contour, duality_contour_on, Circle, DecimalComplex, MomentOptions, MomentRecord, MomentTable};
pub use planar::{planar_gram, planar_integral, planar_moment, planar_weight, PlanarOptions};

use crate::error::{Error, Result};
use crate::model::{ln_gamma_ratio, ModelParams};
use crate::mp::{Mp, Precision};
use crate::scalar::{c_abs, c_to_f64, Real};
use moments::log10_abs;

type C64 = Complex<f64>;

/// Largest relative change tolerated when the working precision is raised.
pub const ESCALATION_TOL: f64 = 1e-10;

/// Working precision p = 40 + 3n decimal digits.
pub fn policy_digits(n: i64) -> u32 {
    40 + 3 * n.max(0) as u32
}

#[derive(Debug, Clone)]
pub struct PolySolution<T> {
    pub n: i64,
    pub big_n: u32,
    /// Ascending monic coefficients; `coeffs[n]` is exactly one.
    pub coeffs: Vec<Complex<T>>,
    /// ⟨P, z^n⟩_co.
    pub h_tilde: Complex<T>,
    /// max_j |⟨P, z^j⟩_co| / Σ_i |c_i ν_{i+j}| over j = 0..n−1.
    pub orthogonality_residual: f64,
    pub log10_pivot_ratio: f64,
    pub digits: u32,
}

impl<T: Real> PolySolution<T> {
    pub fn eval(&self, z: &Complex<T>) -> Complex<T> {
        let mut p = Complex::<T>::zero();
        for a in self.coeffs.iter().rev() {
            p = &p * z + a;
        }
        p
    }

    pub fn at_zero(&self) -> &Complex<T> {
        &self.coeffs[0]
    }

    pub fn coeffs_f64(&self) -> Vec<C64> {
        self.coeffs.iter().map(c_to_f64).collect()
    }

    /// ⟨P, z^j⟩_co for the degree-n pairing.
    pub fn pairing(&self, table: &MomentTable<T>, j: i64) -> Result<Complex<T>> {
        let mut acc = Complex::<T>::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            acc = acc + c * table.nu(self.n, i as i64 + j)?;
        }
        Ok(acc)
    }
}

/// Monic P_{n,N} from the Hankel system [ν_{i+j}] c = −[ν_{j+n}], j = 0..n−1.
pub fn build_monic_op<T: Real>(table: &MomentTable<T>, n: i64) -> Result<PolySolution<T>> {
    table.params.with_sizes(table.params.big_n, n)?;
    let nu = |i: i64| table.nu(n, i).cloned();
    let mut coeffs: Vec<Complex<T>> = Vec::with_capacity(n as usize + 1);
    let mut pivot = 0.0;
    if n > 0 {
        let mut h = Vec::with_capacity(n as usize);
        let mut rhs = Vec::with_capacity(n as usize);
        for j in 0..n {
            h.push((0..n).map(|k| nu(j + k)).collect::<Result<Vec<_>>>()?);
            rhs.push(-nu(j + n)?);
        }
        let f = linalg::lu(h).map_err(|e| match e {
            Error::Precision(m) => Error::Precision(format!("Hankel matrix for n = {n}: {m}")),
            other => other,
        })?;
        pivot = f.log10_pivot_ratio;
        coeffs = f.solve(&rhs);
    }
    coeffs.push(Complex::one());
    let mut sol = PolySolution {
        n,
        big_n: table.params.big_n,
        coeffs,
        h_tilde: Complex::zero(),
        orthogonality_residual: 0.0,
        log10_pivot_ratio: pivot,
        digits: T::digits(),
    };
    let mut worst = f64::NEG_INFINITY;
    for j in 0..n {
        let v = sol.pairing(table, j)?;
        let mut scale = T::zero();
        for (i, c) in sol.coeffs.iter().enumerate() {
            scale = scale + c_abs(c) * c_abs(table.nu(n, i as i64 + j)?);
        }
        worst = worst.max(log10_abs(&v) - scale.ln().to_f64() / std::f64::consts::LN_10);
    }
    sol.orthogonality_residual = if n > 0 { 10f64.powf(worst) } else { 0.0 };
    sol.h_tilde = sol.pairing(table, n)?;
    Ok(sol)
}

/// det[ν_{i+j}]_{0..n} / det[ν_{i+j}]_{0..n−1} for the degree-n pairing.
pub fn hankel_det_ratio<T: Real>(table: &MomentTable<T>, n: i64) -> Result<Complex<T>> {
    let det = |m: i64| -> Result<Complex<T>> {
        if m == 0 {
            return Ok(Complex::one());
        }
        let mut h = Vec::new();
        for j in 0..m {
            h.push((0..m).map(|k| table.nu(n, j + k).cloned()).collect::<Result<Vec<_>>>()?);
        }
        Ok(linalg::lu(h)?.det())
    };
    Ok(det(n + 1)? / det(n)?)
}

/// G_{k,N} = Γ(N+NQ0−k) Γ(1+k+NQ1) / Γ(N(1+Q0+Q1)+1); exact for integer exponents.
pub fn gamma_constant<T: Real>(p: &ModelParams<f64>, k: i64) -> Result<T> {
    if let Some((a1, b0)) = p.integer_exponents() {
        let nn = p.big_n as i64;
        let a = nn + b0 - k;
        let b = 1 + k + a1;
        if a <= 0 || b <= 0 {
            return Err(Error::Domain(format!("Gamma argument non-positive for k = {k}")));
        }
        // (a−1)!(b−1)!/(a+b−1)! = 1 / ((a+b−1) C(a+b−2, a−1))
        let mut g = T::one() / T::from_i64(a + b - 1);
        for i in 1..a {
            g = g * T::from_i64(i) / T::from_i64(b - 1 + i);
        }
        return Ok(g);
    }
    Ok(T::from_f64(ln_gamma_ratio(p, k)?.exp()))
}

fn w_power<T: Real>(p: &ModelParams<f64>) -> T {
    let w = T::from_f64(p.w);
    match p.integer_exponents() {
        Some((_, b0)) => w.powi(p.big_n as i64 + b0),
        None => (w.ln() * T::from_f64(p.big_n as f64 * (1.0 + p.q0))).exp(),
    }
}

#[derive(Debug, Clone)]
pub struct Norms<T> {
    pub n: i64,
    pub h_tilde: Complex<T>,
    /// h̃ · w^{N+NQ0}.
    pub h_hat: Complex<T>,
    /// Planar squared norm −G_{n,N} h̃ / (2i P_{n+1,N}(0)).
    pub h: T,
    pub p_next_at_zero: Complex<T>,
    pub g_constant: T,
    /// |Im h| / |h| before the imaginary part is discarded.
    pub imag_residual: f64,
}

/// Norm chain from the degree-n and degree-(n+1) solutions (each with its own weight).
pub fn norm_chain<T: Real>(p: &ModelParams<f64>, sol: &PolySolution<T>, next: &PolySolution<T>) -> Result<Norms<T>> {
    if next.n != sol.n + 1 || next.big_n != sol.big_n {
        return Err(Error::Dependency("norm chain needs P_{n+1,N} with the same N".into()));
    }
    let p0 = next.at_zero().clone();
    let lp0 = log10_abs(&p0);
    if lp0 < log10_abs(&sol.h_tilde) - T::digits() as f64 + 5.0 || lp0 == f64::NEG_INFINITY {
        return Err(Error::Degenerate("P_{n+1,N}(0) vanishes".into()));
    }
    let pn = p.with_sizes(sol.big_n, sol.n)?;
    let g = gamma_constant::<T>(&pn, sol.n)?;
    let two_i = Complex::new(T::zero(), T::from_i64(2));
    let hc = -(&sol.h_tilde * Complex::new(g.clone(), T::zero())) / (two_i * &p0);
    let imag_residual = (c_abs(&Complex::new(T::zero(), hc.im.clone())) / c_abs(&hc)).to_f64();
    if !(hc.re > T::zero()) {
        return Err(Error::Consistency(format!("planar norm not positive for n = {}", sol.n)));
    }
    Ok(Norms {
        n: sol.n,
        h_hat: &sol.h_tilde * Complex::new(w_power::<T>(p), T::zero()),
        h_tilde: sol.h_tilde.clone(),
        h: hc.re,
        p_next_at_zero: p0,
        g_constant: g,
        imag_residual,
    })
}

/// Zeros of P_{n,N}, polished at the working precision; returns the worst scaled residual too.
pub fn poly_zeros<T: Real>(sol: &PolySolution<T>) -> Result<(Vec<Complex<T>>, f64)> {
    let (z, res) = roots::roots(&sol.coeffs, 500)?;
    let bound = -(sol.digits as f64) / 3.0;
    if res.log10() > bound {
        return Err(Error::Root(format!("root residual {res:.3e} above 1e{bound:.0}")));
    }
    Ok((z, res))
}

/// Everything computed for one (N, n) at one precision.
#[derive(Debug, Clone)]
pub struct DegreeData<T> {
    pub table: MomentTable<T>,
    pub sol: PolySolution<T>,
    pub next: PolySolution<T>,
    pub norms: Norms<T>,
    pub zeros: Vec<Complex<T>>,
    pub root_residual: f64,
}

/// Full degree-n pipeline at the current working precision.
pub fn solve_degree<T: Real>(p: &ModelParams<f64>, n: i64) -> Result<DegreeData<T>> {
    let pn = p.with_sizes(p.big_n, n)?;
    let table = MomentTable::<T>::for_degree(&pn, n + 1)?;
    let sol = build_monic_op(&table, n)?;
    let next = build_monic_op(&table, n + 1)?;
    let norms = norm_chain(&pn, &sol, &next)?;
    let (zeros, root_residual) = poly_zeros(&sol)?;
    Ok(DegreeData { table, sol, next, norms, zeros, root_residual })
}

/// Decimal-string record of one polynomial solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyRecord {
    #[serde(with = "moments::decimal_f64")]
    pub q0: f64,
    #[serde(with = "moments::decimal_f64")]
    pub q1: f64,
    #[serde(with = "moments::decimal_f64")]
    pub w: f64,
    pub big_n: u32,
    pub n: i64,
    pub digits: u32,
    pub coefficients: Vec<DecimalComplex>,
    pub h_tilde: DecimalComplex,
    pub h_hat: DecimalComplex,
    pub h: String,
    pub p_next_at_zero: DecimalComplex,
    pub zeros: Vec<DecimalComplex>,
}

/// Double-precision view of an extended-precision degree solve.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub params: ModelParams<f64>,
    pub n: i64,
    pub digits: u32,
    pub coeffs: Vec<C64>,
    pub zeros: Vec<C64>,
    pub h_tilde: C64,
    pub h_hat: C64,
    pub h: f64,
    pub p_next_at_zero: C64,
    pub imag_residual: f64,
    pub orthogonality_residual: f64,
    pub root_residual: f64,
    pub moment_nodes: usize,
    pub record: PolyRecord,
}

impl GroundTruth {
    /// P_{n,N}(z) as the product over the zeros (stable off the zero set).
    pub fn eval(&self, z: C64) -> C64 {
        self.zeros.iter().fold(C64::new(1.0, 0.0), |acc, r| acc * (z - r))
    }
}

/// Extended-precision solve at `digits` (default: the policy p = 40 + 3n).
pub fn ground_truth(p: &ModelParams<f64>, n: i64, digits: Option<u32>) -> Result<GroundTruth> {
    let digits = digits.unwrap_or_else(|| policy_digits(n));
    let _g = Precision::digits(digits);
    let d = solve_degree::<Mp>(p, n)?;
    let dd = digits as usize;
    let record = PolyRecord {
        q0: p.q0,
        q1: p.q1,
        w: p.w,
        big_n: p.big_n,
        n,
        digits,
        coefficients: d.sol.coeffs.iter().map(|c| DecimalComplex::new(c, dd)).collect(),
        h_tilde: DecimalComplex::new(&d.norms.h_tilde, dd),
        h_hat: DecimalComplex::new(&d.norms.h_hat, dd),
        h: d.norms.h.to_decimal(dd),
        p_next_at_zero: DecimalComplex::new(&d.norms.p_next_at_zero, dd),
        zeros: d.zeros.iter().map(|c| DecimalComplex::new(c, dd)).collect(),
    };
    Ok(GroundTruth {
        params: p.with_sizes(p.big_n, n)?,
        n,
        digits,
        coeffs: d.sol.coeffs_f64(),
        zeros: d.zeros.iter().map(c_to_f64).collect(),
        h_tilde: c_to_f64(&d.norms.h_tilde),
        h_hat: c_to_f64(&d.norms.h_hat),
        h: d.norms.h.to_f64(),
        p_next_at_zero: c_to_f64(&d.norms.p_next_at_zero),
        imag_residual: d.norms.imag_residual,
        orthogonality_residual: d.sol.orthogonality_residual,
        root_residual: d.root_residual,
        moment_nodes: d.table.nodes,
        record,
    })
}

/// Relative change of h̃ and of the coefficient vector between two solves.
pub fn escalation_change(a: &GroundTruth, b: &GroundTruth) -> f64 {
    let rel = |x: C64, y: C64| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE);
    let mut worst = rel(a.h_tilde, b.h_tilde);
    let num: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.coeffs.iter().map(|y| y.norm_sqr()).sum();
    if den > 0.0 {
        worst = worst.max((num / den).sqrt());
    }
    worst
}

/// Ground truth at `digits`, confirmed by a rerun at `digits + bump`.
pub fn ground_truth_checked(p: &ModelParams<f64>, n: i64, digits: Option<u32>, bump: u32) -> Result<GroundTruth> {
    let base = digits.unwrap_or_else(|| policy_digits(n));
    let gt = ground_truth(p, n, Some(base))?;
    let hi = ground_truth(p, n, Some(base + bump))?;
    let change = escalation_change(&gt, &hi);
    if !(change < ESCALATION_TOL) {
        return Err(Error::Precision(format!("N = {}, n = {n}: {base} vs {} digits differ by {change:.2e}", p.big_n, base + bump)));
    }
    Ok(gt)
}

/// P_{l,N} and h_{l,N} for l = 0..N−1.
#[derive(Debug, Clone)]
pub struct PlanarFamily {
    pub params: ModelParams<f64>,
    pub polys: Vec<Vec<C64>>,
    pub h: Vec<f64>,
}

impl PlanarFamily {
    pub fn build(p: &ModelParams<f64>, digits: Option<u32>) -> Result<Self> {
        let nn = p.big_n as i64;
        let digits = digits.unwrap_or_else(|| policy_digits(nn));
        let _g = Precision::digits(digits);
        let table = MomentTable::<Mp>::for_degree(p, nn)?;
        let mut sols = Vec::with_capacity(nn as usize + 1);
        for l in 0..=nn {
            sols.push(build_monic_op(&table, l)?);
        }
        let mut h = Vec::with_capacity(nn as usize);
        for l in 0..nn as usize {
            let pl = p.with_sizes(p.big_n, l as i64)?;
            h.push(norm_chain(&pl, &sols[l], &sols[l + 1])?.h.to_f64());
        }
        sols.pop();
        Ok(PlanarFamily { params: *p, polys: sols.iter().map(|s| s.coeffs_f64()).collect(), h })
    }

    pub fn from_parts(p: &ModelParams<f64>, polys: Vec<Vec<C64>>, h: Vec<f64>) -> Result<Self> {
        let nn = p.big_n as usize;
        if polys.len() != nn || h.len() != nn {
            return Err(Error::Dependency(format!("kernel needs {nn} polynomials and norms")));
        }
        Ok(PlanarFamily { params: *p, polys, h })
    }

    fn eval_poly(c: &[C64], z: C64) -> C64 {
        c.iter().rev().fold(C64::new(0.0, 0.0), |acc, a| acc * z + a)
    }

    /// K_N(x, y) = e^{−N(V(x)+V(y))/2} Σ_l P_l(x) conj(P_l(y)) / h_l.
    pub fn kernel(&self, x: C64, y: C64) -> C64 {
        let wx = planar_weight(&self.params, x).sqrt();
        let wy = planar_weight(&self.params, y).sqrt();
        let s: C64 = self.polys.iter().zip(&self.h).map(|(c, h)| Self::eval_poly(c, x) * Self::eval_poly(c, y).conj() / h).sum();
        s * (wx * wy)
    }

    /// log Q_N = log N! + Σ_l log h_{l,N}.
    pub fn log_partition(&self) -> f64 {
        ln_factorial(self.params.big_n as u64) + self.h.iter().map(|h| h.ln()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_one_by_direct_elimination() {
        let p = ModelParams::new(1.0, 1.0, 0.8, 2, 1).unwrap();
        let t = MomentTable::<f64>::for_degree(&p, 2).unwrap();
        let s = build_monic_op(&t, 1).unwrap();
        // ⟨z + c, 1⟩ = 0 ⇒ c = −ν_1/ν_0
        let c = -t.nu(1, 1).unwrap() / t.nu(1, 0).unwrap();
        assert!((s.coeffs[0] - c).norm() < 1e-13 * c.norm());
        assert_eq!(s.coeffs[1], C64::new(1.0, 0.0));
    }

    #[test]
    fn gamma_constant_exact_matches_log_gamma() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 7, 7).unwrap();
        for k in 0..7 {
            let a: f64 = gamma_constant(&p, k).unwrap();
            let b = ln_gamma_ratio(&p, k).unwrap().exp();
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }
}
