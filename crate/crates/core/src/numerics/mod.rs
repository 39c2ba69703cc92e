//! Numerical building blocks: adaptive quadrature, bracketed root finding and
//! log-space special functions.

pub mod quadrature;
pub mod root;
pub mod special;

pub use quadrature::{integrate, QuadConfig, QuadResult};
pub use root::{brent, RootConfig};
