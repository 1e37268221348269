//! Solvers for multi-state hard-core models on Cayley trees.
//!
//! The crate computes boundary-field fixed points of the parent-from-children
//! compatibility recursion for constraint-graph hard-core models, classifies
//! translation-invariant, period-2 and path-indexed solutions for the four
//! fertile three-state graphs (wrench, wand, hinge, pipe), and validates
//! everything against an exact finite-tree enumeration oracle.
//!
//! The crate is `no_std` (with `alloc`); all floating-point transcendentals
//! go through `libm` so results are identical regardless of the host math
//! library. IO, file formats and the command-line surface live in the
//! companion `treegibbs-cli` crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]
// `!(x > 0.0)` rejects NaN along with nonpositive values; the suggested
// rewrites do not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the per-(vertex, state) tables they fill
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod envelope;
pub mod error;
pub mod field;
pub mod graph;
pub(crate) mod math;
pub mod oracle;
pub mod path_field;
pub mod period2;
pub mod recursion;
pub(crate) mod roots;
pub mod ti;
pub mod tree;

pub use error::{Error, Result};
pub use field::Field;
pub use graph::{ActivityVector, Builtin, ConstraintGraph};
pub use tree::{PathCode, SplitClass, TreeShape, VertexAddress};
