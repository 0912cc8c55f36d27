//! Exact enumeration of characters of quadratic extensions of `Q_p`, their local
//! ε-factors, and brute-force verification of twist counts in Weil representations.

pub mod cache;
pub mod census;
pub mod characters;
pub mod cli;
pub mod cyclotomic;
pub mod engine;
pub mod epsilon;
pub mod error;
pub mod groups;
pub mod identities;
pub mod padic;
pub mod phase;
pub mod report;

pub use error::{Error, Result};
