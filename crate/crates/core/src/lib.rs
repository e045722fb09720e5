//! Dynamically defined measures, their decay properties, and brute-force
//! Diophantine approximation experiments.

pub mod cifs;
pub mod dioph;
pub mod error;
pub mod geometry;
pub mod measurelab;
pub mod symbolic;
pub mod sysfile;
pub mod thermo;
pub mod toral;
pub mod weights;

pub use error::{Error, Result};
