//! Subcommand implementations. Each writes metadata lines, a fixed header,
//! and data rows in deterministic order.

pub mod crb;
pub mod design;
pub mod gain;
pub mod mse;
