//! Symbolic and numeric laboratory for the super generalized Broer-Kaup
//! hierarchy: exact supercommutative differential algebra, Lax matrices over
//! Laurent polynomials, hierarchy generation, conservation laws, binary
//! nonlinearization and Grassmann-valued numerical integration.

pub mod cli;
pub mod conservation;
pub mod constraint;
pub mod dynamics;
pub mod error;
pub mod hierarchy;
pub mod laxmatrix;
pub mod report;
pub mod superpoly;

pub use error::{Error, Result};
