//! Local discontinuous Galerkin schemes with generalized alternating fluxes for
//! `u_t + u_x - u_xx = 0` on `[0, L]`, together with the correction-function
//! interpolants and error functionals used to observe their superconvergence.

pub mod analysis;
pub mod basis;
pub mod corrections;
pub mod error;
pub mod exact;
pub mod field;
pub mod mesh;
pub mod projections;
pub mod solver;
pub mod study;

pub use error::{LdgError, Result};
pub use field::Field;
pub use mesh::Mesh;
