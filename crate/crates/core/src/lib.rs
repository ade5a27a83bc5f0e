//! Spherical Fourier analysis on harmonic manifold models and the dynamics of
//! radial L^p multipliers.

pub mod chaos;
pub mod convolution;
pub mod eigen;
pub mod error;
pub mod io;
pub mod model;
pub mod multiplier;
pub mod quadrature;
pub mod scalar;
pub mod spline;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
