//! Integrality certificates for s-distance sets.
//!
//! Given a finite point set whose pairwise distances take `s` distinct
//! values, the ratios
//!
//! ```text
//! k_i = prod_{j != i} a_j / (a_j - a_i)      (a_j = squared distances)
//! ```
//!
//! are forced to be integers once the set is large relative to the
//! dimension of a suitable polynomial space. This crate computes those
//! ratios (Euclidean, spherical and antipodal variants), checks the
//! rank and spectral facts that force integrality, inverts integer ratio
//! tuples back to squared distances, and enumerates the finite catalog of
//! admissible distance systems for given `(d, s)`.
//!
//! Modules:
//!
//! - [`pointset`]: loading, named constructions, distance/inner-product profiles.
//! - [`bounds`]: polynomial-space dimensions, cardinality thresholds, exact integer bounds.
//! - [`ratios`]: the ratio families and the per-set analysis report.
//! - [`certificate`]: indicator matrices, numeric rank and multiplicity checks.
//! - [`inverse`]: the normalized forward map, its Jacobian, and Newton inversion.
//! - [`embed`]: realizability of squared-distance and Gram matrices, congruence.
//! - [`search`]: exhaustive enumeration of admissible ratio tuples.

pub mod bounds;
pub mod certificate;
pub mod embed;
mod error;
pub mod inverse;
mod linalg;
pub mod pointset;
pub mod ratios;
pub mod search;

pub use error::{Error, Result};
