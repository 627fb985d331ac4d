//! p-variation norms of partial sums of orthonormal systems.

pub mod decomp;
pub mod emit;
pub mod error;
pub mod experiment;
pub mod onsys;
pub mod orlicz;
pub mod rearrange;
pub mod seed;
pub mod variation;

pub use error::{Error, Result};
pub use num_complex::Complex64;
