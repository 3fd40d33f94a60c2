//! Near-field velocity estimation bounds for modular linear arrays.
//!
//! This crate evaluates how well the radial and transverse velocity of a
//! point target can be estimated by a monostatic modular linear array
//! operating in its radiating near field, within a predictive-beamforming
//! echo model. It provides:
//!
//! * [`geometry`]: modular array layout, element positions, aperture,
//!   Fresnel distance;
//! * [`nearfield`]: spherical-wavefront per-element ranges, projection
//!   coefficients, and the time-indexed array response;
//! * [`link`]: point-scatterer link budget and the composite SNR factor;
//! * [`fisher`]: exact Fisher information and Cramér–Rao bounds next to
//!   their closed-form approximations for modular and collocated arrays;
//! * [`gain`]: beamforming gain under velocity mismatch, exact and as a
//!   product of Dirichlet kernels;
//! * [`simulate`]: echo synthesis, concentrated maximum-likelihood
//!   velocity estimation, and a seeded Monte Carlo harness;
//! * [`design`]: the antenna-saving rule matching a modular array's
//!   transverse bound to a larger collocated reference.

pub mod design;
pub mod error;
pub mod fisher;
pub mod gain;
pub mod geometry;
pub mod link;
pub mod nearfield;
pub mod simulate;

pub use error::{Error, Result};
pub use fisher::{CrbPair, FimMatrix};
pub use geometry::ArrayGeometry;
pub use link::{CpiConfig, LinkBudget};
pub use nearfield::TargetState;
