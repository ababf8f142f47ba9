//! Numerical laboratory for the stochastic heat equation
//! `∂u/∂t = ½Δu + u Ẇ` driven by Gaussian noise that is colored in time and space.

pub mod chaos;
pub mod error;
pub mod estimate;
pub mod fk;
pub mod kernels;
pub mod noise;
pub mod paths;
pub mod presets;
pub mod quad;
pub mod simplex;

pub use error::{Error, Result};
