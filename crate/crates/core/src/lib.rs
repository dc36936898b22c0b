//! Random purification channels for *-algebra symmetries, with fermionic and
//! truncated bosonic Gaussian applications.
//!
//! Conventions used throughout:
//! - tensor indices are row-major mixed-radix, leftmost factor most significant;
//! - purification outputs are ordered as (system factors, reference factors);
//! - randomness flows only through [`linalg::RngStream`].

pub mod algebra;
pub mod boson;
pub mod error;
pub mod fermion;
pub mod linalg;
pub mod purification;
pub mod suites;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{DenseOperator, RngStream, StateVector};
