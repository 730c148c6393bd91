//! Numerical laboratory for strongly coupled parabolic systems
//! `u_t = div(A(u)Du) + f(u)` and the harmonic-analysis quantities that
//! control their linearised Picard iteration.

// `!(x > 0.0)` rejects NaN along with the bad range; index loops mirror the stencils
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod scheme;

pub use error::{LabError, Result};
