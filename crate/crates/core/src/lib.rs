//! Forward and inverse problems for D_t^rho u + A^sigma u = 0 by
//! eigenfunction expansion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forward;
pub mod inverse;
pub mod oracle;
pub mod specfun;
pub mod spectral;

pub use error::{Error, Result};
