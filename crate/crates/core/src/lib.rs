//! Harness for measuring how far per-domain generalizing planning policies
//! scale: size-controlled instance generation, bounded policy rollouts,
//! validation-based policy selection and statistical coverage curves.

pub mod csp;
pub mod domains;
pub mod error;
pub mod eval;
pub mod oracle;
pub mod planning;
pub mod policy;
pub mod report;
pub mod runner;
pub mod seeds;
pub mod selection;
pub mod stats;

pub use error::{Error, Result};
