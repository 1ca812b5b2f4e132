//! Hamiltonians that drive quantum states along prescribed trajectories.

// `!(x > 0.0)` is how inputs reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bohmian;
pub mod driving;
pub mod error;
pub mod evolve;
pub mod gauge;
pub mod ingest;
pub mod numeric;
pub mod output;
pub mod qsl;
pub mod reparam;
pub mod scenarios;
pub mod state;

pub use error::{Error, Result};
