//! Numerical laboratory for comparison geometry on contact sub-Riemannian
//! manifolds: model spaces, geodesics, matrix Riccati comparison, volume
//! and diameter checks, and tensor-identity verification.

pub mod comparison;
pub mod error;
pub mod identities;
pub mod geodesics;
pub mod manifolds;
pub mod numerics;
pub mod riccati;

pub use error::{Error, Result};
pub use manifolds::{Manifold, Model};
