//! Spectral toolkit for two-dimensional hydroelastic waves on deep water.
//!
//! The crate covers linear theory ([`dispersion`]), resonant triads
//! ([`resonance`]), the cubic Birkhoff normal form ([`normalform`]), the
//! Dysthe and NLS envelope models ([`envelope`]), the full Euler solver
//! ([`euler`]), Benjamin-Feir predictions ([`stability`]) and the model
//! comparison driver ([`harness`]). All quantities are dimensionless with
//! g = 𝒟 = 1 unless stated otherwise.

pub mod dispersion;
pub mod envelope;
pub mod error;
pub mod euler;
pub mod harness;
pub mod model;
pub mod normalform;
pub mod resonance;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
pub use num_complex::Complex64;
