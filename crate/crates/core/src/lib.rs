//! Certification of ergodicity and set-point tracking for unimolecular
//! reaction networks under antithetic integral feedback.
//!
//! Networks are written in a small `.crn` language ([`netdsl`]), lowered to
//! moment matrices ([`netmodel`]) and checked in one of three regimes
//! ([`ergodicity`]): point rates, interval rates, or sign patterns. Every
//! verdict comes with a certificate or a refutation witness and is
//! cross-checked by independent routes. [`ssa`] simulates the closed loop.
//!
//! The numerical core is generic over [`Scalar`]; `f64`, `f32` and exact
//! [`Rational`] arithmetic are supported.

pub mod ergodicity;
pub mod linalg;
pub mod lpsolve;
pub mod netdsl;
pub mod netmodel;
pub mod report;
pub mod scalar;
pub mod sgraph;
pub mod ssa;

pub use scalar::Scalar;

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type MatrixQ = linalg::Matrix<Rational>;

pub type LinearProgram64 = lpsolve::LinearProgram<f64>;
pub type LinearProgramQ = lpsolve::LinearProgram<Rational>;

pub type CharacteristicSystem64 = netmodel::CharacteristicSystem<f64>;
pub type CharacteristicSystemQ = netmodel::CharacteristicSystem<Rational>;
