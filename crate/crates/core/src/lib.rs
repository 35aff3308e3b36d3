//! Coupled random walks on dynamic random environments.
//!
//! The crate builds, at desk scale, every object a fluctuation lower-bound
//! argument of Russo-Seymour-Welsh type manipulates: lazy random
//! environments with decoupling rates, the graphical construction of
//! coalescing walks with wall reflection, box-crossing events and their
//! Monte Carlo estimators next to exact small-instance oracles, the
//! fluctuation scale `w(h)` with exponent fits, and exact high-precision
//! evaluation of the bootstrap constants.
//!
//! Everything is deterministic: all randomness is derived from a master
//! seed through counter-based keys ([`rng`]), so results are identical for
//! any worker count.

pub mod bigfloat;
pub mod confetti;
pub mod cross;
pub mod env;
pub mod kernel;
pub mod oracle;
pub mod rng;
pub mod scale;
pub mod stats;
pub mod theory;
pub mod walk;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
}

pub use env::{Environment, EnvKind, LatticeRect};
pub use kernel::Kernel;
pub use stats::Estimate;
