#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod epr;
pub mod experiment;
pub mod error;
pub mod fock;
pub mod lattice;
pub mod spinwave;
pub mod sweep;
pub mod squeezed;

pub use error::{Error, Result};
