//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by geometry, bound, and simulation routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Geometry parameters violate an invariant (zero counts, non-positive spacing).
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// Target state violates an invariant (range, angle out of domain).
    #[error("invalid target: {0}")]
    InvalidTarget(String),

    /// Requested (m, k) element index is not a member of the array index set.
    #[error("index (m={m}, k={k}) outside the array index set")]
    IndexOutOfSet { m: f64, k: f64 },

    /// Fisher information matrix is singular; bounds do not exist.
    ///
    /// The message names the violated existence condition
    /// `12 / (U^2 (K^2 - 1) + M^2 - 1) > (delta / r)^2`.
    #[error("singular Fisher matrix: {0}")]
    SingularFim(String),

    /// Transverse velocity carries no information at this angle (sin(theta) = 0).
    #[error("transverse velocity unobservable at theta = {theta} rad")]
    Unobservable { theta: f64 },

    /// No modular layout can satisfy the requested CRB-matching query.
    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),

    /// A function argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
