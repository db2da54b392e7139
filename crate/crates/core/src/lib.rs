//! Fractional powers of second-order elliptic operators with Dirichlet,
//! Neumann and Robin boundary conditions, computed through the heat semigroup
//! and a P1 finite-element discretization.

pub mod cli;
pub mod error;
pub mod fem;
pub mod fracop;
pub mod fracquad;
pub mod harness;
pub mod heat;
pub mod linalg;
pub mod mesh;
pub mod pme;
pub mod spectral_oracle;

pub use error::{Error, Result};
