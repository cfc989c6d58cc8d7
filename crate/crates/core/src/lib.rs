//! Exact-arithmetic constructions of point sets with many halving lines and
//! halving hyperplanes, together with brute-force oracles that certify every
//! structural property from coordinates alone.

pub mod artifact;
pub mod construction;
pub mod error;
pub mod exact;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod par;
pub mod report;

pub use error::{Error, Result};
