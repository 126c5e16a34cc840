//! Droplet geometry, mother-body measure and planar orthogonal polynomials for
//! the spherical ensemble with two point insertions.
//!
//! The geometry layers (`model`, `curve`) are generic over `num_traits::Float`;
//! the polynomial layer is generic over [`scalar::Real`] so it can run in
//! extended precision through [`mp::Mp`]. Trajectories, potentials and the
//! asymptotic predictions are f64.

pub mod asymptotics;
pub mod curve;
pub mod error;
pub mod model;
pub mod motherbody;
pub mod mp;
pub mod orthopoly;
pub mod potential;
pub mod quad;
pub mod scalar;
pub mod suite;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex<f64>;
pub type CMp = num_complex::Complex<mp::Mp>;

pub type Params = model::ModelParams<f64>;
pub type Params32 = model::ModelParams<f32>;
pub type Map = curve::ConformalMap<f64>;
pub type Curve = curve::SpectralCurve<f64>;

pub type MpMoments = orthopoly::MomentTable<mp::Mp>;
pub type Moments = orthopoly::MomentTable<f64>;
pub type MpPoly = orthopoly::PolySolution<mp::Mp>;
pub type Poly = orthopoly::PolySolution<f64>;
