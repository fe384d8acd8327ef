//! Loop-contour hypergeometric integrals attached to pairs of weights, the
//! duality exchanging their dimensions, and the identities around them.

pub mod asympt;
pub mod cli;
pub mod contour;
pub mod error;
pub mod glrep;
pub mod hyperint;
pub mod integrand;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod selberg;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;
