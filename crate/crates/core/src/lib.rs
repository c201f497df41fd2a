//! Symbol calculus for singular integral operators `aP + bQ` with
//! piecewise-continuous coefficients on weighted variable-exponent Lebesgue
//! spaces over Carleson curves.

pub mod circle_engine;
pub mod dilation;
pub mod error;
pub mod fredholm;
pub mod geometry;
pub mod numeric;
pub mod symbols;
pub mod vlebesgue;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
