//! Deterministic solver and verification harness for the space-homogeneous
//! Boltzmann equation with the angle-potential concentrated kernel
//!
//! ```text
//! g_eps(|u|^gamma, mu) = 4/(pi eps) * delta(1 - mu - min{2, eps |u|^gamma})
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: velocity lattice, distributions, moments and snapshots.
//! * [`kernel`]: the concentration location, scattering angle and the closed
//!   form angular moments `beta_k`.
//! * [`geometry`]: scattering frames and pre/post collision maps.
//! * [`collision`]: gain/loss operators on the lattice and the weak form.
//! * [`landau`]: the weak Landau functional and the grazing-limit harness.
//! * [`bounds`]: randomized checks of the operator inequalities.
//! * [`integrator`]: positivity preserving time stepping with monitors.

pub mod bounds;
pub mod collision;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod integrator;
pub mod kernel;
pub mod landau;
pub mod test_functions;

pub use error::{Error, Result};

/// Velocity-space vector.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 real matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;
