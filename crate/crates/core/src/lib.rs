//! Chart-local construction and verification of metric f-structures with
//! parallelizable kernel, almost S-structures, their Hamiltonian and Jacobi
//! calculus, and their symplectization.
//!
//! Every geometric identity is checked the same way: both sides are built
//! as symbolic expressions over the chart coordinates and their difference
//! is sampled at seeded random points of the chart's box.

pub mod catalog;
pub mod cli;
pub mod document;
pub mod error;
pub mod fstruct;
pub mod hamjac;
pub mod symexpr;
pub mod sympl;
pub mod tensor;

pub use error::{Error, Result};
