//! Data-driven discovery of multiscale dynamical systems.
//!
//! Two families of methods live here:
//!
//! * sparse identification of governing equations from full-state
//!   measurements ([`sindy`]), with uniform and burst subsampling
//!   ([`sampling`]);
//! * linear time-delay models fitted by dynamic mode decomposition on Hankel
//!   matrices ([`havok`]), plus two strategies for signals that mix a fast
//!   and a slow time scale ([`multiscale`]).
//!
//! [`dynamics`] provides the benchmark systems and the integrator that
//! generates reference data; [`harness`] runs parameter sweeps over all of it.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod havok;
pub mod linalg;
pub mod multiscale;
pub(crate) mod par;
pub mod sampling;
pub mod sindy;

pub use error::{Error, Result};

/// Crate version embedded in every persisted artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
