//! Reconstructing directed networks from the activation times of
//! synchronous cascades.
//!
//! The crate simulates cascades on a known network ([`cascade`]), infers
//! edges back from the recorded activation times ([`inference`]) and scores
//! the reconstruction against the truth ([`evaluation`]).

pub mod cascade;
pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod graph;
pub mod inference;

pub use error::{Error, Result};
pub use exec::Exec;
