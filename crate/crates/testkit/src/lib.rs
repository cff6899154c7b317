//! Reference implementations for cross-checking `headqa-core`.
//!
//! Nothing here depends on the core crate. Each reference is written the
//! slow, obvious way so a disagreement points at the optimized code.

pub mod alpha;
pub mod bootstrap;
pub mod decompose;
pub mod fixtures;
pub mod gen;
pub mod segment;
pub mod stub;
