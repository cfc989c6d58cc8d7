//! Point-set constructions.

pub mod recursive;
pub mod blocks;
pub mod rosette;
pub mod highdim;
