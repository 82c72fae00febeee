//! Second-order Riesz transform kernels on the integer lattice and their
//! continuous counterparts: theta-function machinery, kernel tables, lattice
//! convolution, torus Fourier multipliers and operator-norm probes.

pub mod error;
pub mod fft;
pub mod kernels;
pub mod lattice;
pub mod mc;
pub mod multiplier;
pub mod norms;
pub mod quad;
pub mod real;
pub mod spline;
pub mod theta;
pub mod ufunc;

pub use error::{Error, Result};
