//! Toolkit for lifted natural-language / signal temporal logic (STL) pairs.
//!
//! * [`stl`]: formula syntax, validation, desugaring and structural equality.
//! * [`syntax`]: the four linear text formats, conversion and repair.
//! * [`synthesis`]: random generation of well-formed lifted formulas.
//! * [`lifting`]: atomic-proposition recognition, lifting and grounding.
//! * [`llm`]: prompt construction and completion backends (live and mock).
//! * [`pipeline`]: dataset generation loops, ingestion and annotation.
//! * [`eval`]: binary accuracy and corpus statistics.

pub mod eval;
pub mod lifting;
pub mod llm;
pub mod pipeline;
pub mod stl;
pub mod synthesis;
pub mod syntax;

pub use stl::{Atom, Bound, Formula, Interval, OpKind, Operator};
pub use syntax::FormatSpec;
