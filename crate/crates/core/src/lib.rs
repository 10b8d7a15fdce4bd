//! Online variational inference over a mean-field Gaussian family.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod evaluation;
pub mod family;
pub mod learners;
pub mod losses;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
