//! Numerical toolkit for Toeplitz operators on the Bergman space of the unit
//! disc: box and disc averages, BMO-type oscillation functionals, Berezin
//! transforms, finite sections, spectra and index computations.
//!
//! Area measure is normalized, `dA = (1/pi) rho drho dphi`, so the disc has
//! area one. Points are stored in polar form with angles in `[0, 2pi)`.

pub mod anchors;
pub mod check;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod matrix;
pub mod operator;
pub mod oscillation;
pub mod profile;
pub mod quadrature;
pub mod spectra;
pub mod study;
pub mod symbols;
pub mod thresholds;

pub use error::{Error, Result, Warning};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
