//! crlab-core: numerical laboratory for multiplier norms on finite
//! restrictions of complete Pick kernels.

pub mod diagonal;
pub mod error;
pub mod factorization;
pub mod interpolation;
pub mod json;
pub mod kernels;
pub mod moebius;
pub mod multipliers;
pub mod linalg;

pub use error::{Error, Result};
