#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod analysis;
pub mod circuit;
pub mod error;
pub mod junction;
pub mod linalg;
pub mod numeric;
pub mod polaron;
pub mod reference;
pub mod scalar;
pub mod special;
pub mod verify;

pub use circuit::{Boundary, CircuitSpec};
pub use error::{Error, Result};
pub use linalg::SolverOptions;
pub use polaron::Cutoffs;
