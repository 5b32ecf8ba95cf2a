#![no_std]
// With std linked, f64's inherent math shadows `num_traits::Float`.
#![cfg_attr(any(test, feature = "std"), allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod geometry;
pub mod green_gauge;
pub mod grid;
pub mod kernel_fd;
pub mod kernel_mc;
pub mod linalg;
pub mod potential;
pub mod profile_solver;
pub mod report;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{BoundaryShape, GraphDomain, Point};
pub use potential::{Potential, PotentialField, PotentialKind};
