//! Rotational polaritons of a three-level rotor in a single-mode cavity:
//! dressed spectra, optimal orientation targets, closed-form pulse trains,
//! first-order Magnus wavefunctions and numerical propagation.

pub mod error;
pub mod magnus;
pub mod observables;
pub mod orientation;
pub mod pulse;
pub mod rotor_cavity;
pub mod tdse;
pub mod units;
pub mod workbench;

pub use error::{PolaritonError, Result};
