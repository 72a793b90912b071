//! Numerical laboratory for twisted sums of Kloosterman sums.
//!
//! The crate covers exact-to-tolerance evaluation of `S(m, n; c)`, partial
//! sums over arithmetic progressions with an oscillating twist, the Bessel
//! transforms of a smoothed test function, closed-form bound evaluators and
//! a harness that ties them together into reproducible experiments.

pub mod arith;
pub mod bounds;
pub mod bessel;
pub mod error;
pub mod harness;
pub mod kloosterman;
pub mod quad;
pub mod reduce;
pub mod sums;
pub mod transforms;

pub use error::{Error, Result};

/// Shortest round-trippable scientific rendering used in every CSV output.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}
