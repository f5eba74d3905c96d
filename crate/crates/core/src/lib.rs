//! Spectral networks of complete GMN quadratic differentials on the Riemann
//! sphere, and GMN non-abelianization of almost-flat rank-1 local systems.

pub mod charges;
pub mod geometry;
pub mod groupoid;
pub mod mat2;
pub mod network;
pub mod nonabelianize;
mod ode;
pub mod qdiff;
pub mod scalar;
pub mod trajectory;

pub use scalar::{Field, Real};

/// Quadratic differential over `f64`.
pub type QuadDiff = qdiff::RationalQd<f64>;

/// Spectral network over `f64`.
pub type Network = network::SpectralNetwork<f64>;

/// Groupoid chart over `f64`.
pub type Chart = groupoid::GroupoidChart<f64>;

/// Local system with complex `f64` values.
pub type Cochain = nonabelianize::LocalSystemCochain<num_complex::Complex64>;

/// Local system with exact complex rational values.
pub type ExactCochain = nonabelianize::LocalSystemCochain<scalar::ExactComplex>;
