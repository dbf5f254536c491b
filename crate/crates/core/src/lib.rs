//! Numerical laboratory for uncertainty principles on sets that are thin
//! with respect to a pair of radius functions.

pub mod cli;
pub mod contraction;
pub mod corpus;
pub mod counterexamples;
pub mod covering;
pub mod error;
pub mod mollifier;
pub mod operators;
pub mod quad;
pub mod radius;
pub mod report;
pub mod sets;
pub mod spectral;

pub use error::{Error, Result};
