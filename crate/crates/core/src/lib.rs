//! Exact computations on relative hemisystems of the Hermitian quadrangle H(3,q²), q even.

pub mod classify;
pub mod collineation;
pub mod error;
pub mod galois;
pub mod groups;
pub mod hemisystem;
pub mod permgroup;
pub mod polar;
pub mod projective;
pub mod quadric;

pub use error::{Error, Result};
