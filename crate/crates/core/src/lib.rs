//! Numerical verification of entropy inequalities on gradient Ricci solitons.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod grid;
pub mod report;
pub mod transport;
pub mod volume;

pub use error::{Error, Result};
