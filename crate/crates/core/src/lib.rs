//! Executable machinery for random shifts of finite type on Z^d.

pub mod embedding;
pub mod error;
pub mod experiments;
pub mod factor_markers;
pub mod geometry;
pub mod gn;
pub mod lattice;
pub mod numeric;
pub mod pattern;
pub mod random_sft;

pub use error::{Error, Result};
