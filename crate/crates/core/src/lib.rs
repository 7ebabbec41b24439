//! Numerical toolkit for MABK Bell inequalities on GHZ states.
//!
//! * [`pauli`] and [`stabilizer`]: exact Pauli algebra and the GHZ stabilizer
//!   expansion.
//! * [`mabk`]: MABK Bell expressions with exact coefficients.
//! * [`correlators`]: GHZ correlators, MABK values and the analytic bounds.
//! * [`blochopt`]: multistart optimization over measurement directions.
//! * [`npa`] and [`sdp`]: NPA moment relaxation of the tripartite scenario
//!   and the interior-point solver that bounds it with a dual certificate.

pub mod blochopt;
pub mod correlators;
pub mod error;
pub mod mabk;
pub mod npa;
pub mod pauli;
pub mod sdp;
pub mod stabilizer;

pub use error::{Error, Result};
