//! The full zip shift space: sequences over an alphabet pair (S, Z) related
//! by a surjection `tau`, the exact 2^(-M) metric, cylinder sets, and the
//! shift dynamics (periodic density, transitivity, expansivity).

mod cylinder;
mod dynamics;
mod metric;
mod sequence;
mod system;

pub use cylinder::{enumerate_cylinders, CylinderSpec};
pub use metric::{distance, separation_index, DyadicDistance};
pub use sequence::{ZipSequence, ZipSequenceRepr};
pub use system::{Letter, SSymbol, ZSymbol, ZipSystem, ZipSystemConfig};

use thiserror::Error;

/// Guard for the (#S)^n style enumerations.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum SymbolicError {
    #[error("invalid zip system: {0}")]
    InvalidSystem(String),
    #[error("symbol outside its alphabet: {0}")]
    AlphabetMismatch(String),
    #[error("invalid cylinder: {0}")]
    InvalidCylinder(String),
    #[error("tail words must be nonempty")]
    EmptyTail,
    #[error("enumeration of {required} items exceeds cap {cap}")]
    EnumerationCap { required: u64, cap: u64 },
}
