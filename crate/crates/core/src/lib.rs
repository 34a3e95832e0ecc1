//! Desk-scale quantum simulation of cluster separability for identical
//! particles and of measurement objectification.
//!
//! The crate is organised around three experiment families:
//!
//! - **Separability** ([`separability`]): the two disturbance experiments for
//!   a pair of identical particles, region-local observables on a discretised
//!   position grid ([`grid`]), and the separation-status predicate.
//! - **Measurement couplings** ([`bcl`]): the premeasurement unitary built
//!   from an observable's eigenstructure, conditional post-states and outcome
//!   probabilities, and the objectification check that the plain coupling
//!   fails on superposition inputs.
//! - **Registration** ([`registration`]): an array of detectors with disjoint
//!   separation statuses; the measured particle is absorbed into a detector's
//!   identical-particle bath and the resulting mixture carries a genuine
//!   preparation-level decomposition ([`gemenge`]), restoring
//!   objectification.
//!
//! Everything is finite-dimensional dense linear algebra ([`hilbert`],
//! [`identicals`]) over `Complex64`; values are immutable and operations are
//! pure functions, so the whole API is thread-safe without synchronisation.

pub mod bcl;
pub mod error;
pub mod gemenge;
pub mod grid;
pub mod hilbert;
pub mod identicals;
pub mod random;
pub mod registration;
pub mod separability;

pub use error::{Error, Result};

/// Tolerance for operator-level identities (Hermiticity, unitarity,
/// idempotence, trace conditions).
pub const TOL_OPERATOR: f64 = 1e-10;

/// Tolerance for vector-level identities (norms, orthogonality residuals).
pub const TOL_VECTOR: f64 = 1e-12;

/// Norms below this are treated as exact annihilation (e.g. fermionic
/// exclusion) rather than roundoff.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;
