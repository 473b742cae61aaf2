//! Local stable manifolds of fractional-order (Caputo) systems near a
//! hyperbolic equilibrium, and the matrix Mittag-Leffler machinery they need.

mod dd;
pub mod error;
pub mod fode_sim;
pub mod manifold;
pub mod matrix_ml;
pub mod mittag_leffler;
pub mod quadrature;
pub mod special;
pub mod spectral;
pub mod systems;

pub use error::{Error, Result};
pub use mittag_leffler::{FracOrder, MlParams};
pub use num_complex::Complex64;
