//! Reset-driven Floquet quantum channels built from spin-chain Hamiltonians.
//!
//! A system chain and a bath chain evolve jointly for a time `t`; the bath is
//! then projected back onto `|0...0>`. The resulting channel is studied
//! through its superoperator spectrum (exceptional points, circular-law
//! statistics, localisation, scar-related outliers) and through the decay of
//! observables under repeated application.

// `!(x < tol)` is used on purpose so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod ep_analysis;
pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod linalg;
pub mod plots;
pub mod presets;
pub mod random;
pub mod runner;
pub mod spectra;
pub mod spin_ops;

pub use error::{Error, Result};
pub use faer::c64;
