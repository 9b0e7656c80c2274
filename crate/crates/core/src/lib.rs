#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod funcspace;
pub mod operators;
pub mod quadrature;
pub mod series;
pub mod special;

pub use error::{Error, Result};
