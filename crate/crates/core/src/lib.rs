//! Numerical toolkit for nonlinear instability of fixed points of maps on
//! normed spaces whose linearization has spectral radius above one.

// Negated float comparisons are deliberate: they reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha;
pub mod charsolver;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod io;
pub mod maps;
pub mod operators;
pub mod report;
pub mod spaces;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
