// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod cli;
pub mod coho1;
pub mod config;
pub mod counterexample;
pub mod deformation;
pub mod error;
pub mod feasibility;
pub mod group;
pub mod limiting;
pub mod linalg;
pub mod point;
pub mod warped;

pub use error::{CheegerError, Result};
