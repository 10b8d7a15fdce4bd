//! Command-line front end: experiment configs, runs, bound checks and
//! gradient checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod error;
pub mod gen;
pub mod gradcheck;
pub mod run;
pub mod setup;
pub mod theory;
