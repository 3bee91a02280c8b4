//! Joint measurability of quantum measurements and its CHSH dual.
//!
//! Two dichotomic measurements with effects `Q`, `P` are jointly measurable
//! iff they cannot be used to violate the CHSH inequality. This crate decides
//! joint measurability with a small semidefinite-programming solver ([`sdp`],
//! [`jm`]), computes the maximal CHSH value `1 + 2λ*` with a one-parameter
//! eigenvalue scan ([`chsh`]), and constructs the violating state and partner
//! observables.

pub mod chsh;
pub mod error;
pub mod jm;
pub mod linalg;
pub mod measurement;
pub mod nosignal;
pub mod sampling;
pub mod sdp;

pub use error::{Error, Result};
