//! Fractional Hamiltonian monodromy of m:-n resonant integrable systems.
//!
//! The crate evaluates period integrals on the hyperelliptic family
//! `y^2 = Q(x; h, j)`, tracks branch points along complex parameter paths,
//! assembles monodromy matrices and builds semiclassical joint spectra.

pub mod config;
pub mod discriminant;
pub mod error;
pub mod extrapolate;
pub mod integrals;
pub mod monodromy;
pub mod poly;
pub mod quad;
pub mod ratmat;
pub mod resonance;
pub mod roots;
pub mod spectrum;
pub mod transport;

pub use error::{Error, Result};
pub use num_complex::Complex64;
