//! Maximum-gain k-opt moves for the symmetric TSP.
//!
//! For every valid connection pattern and every bucket assignment of the
//! removed edges, the best embedding is found by dynamic programming over
//! a minimum-width nice tree decomposition of the dependence graph. The
//! crate also ships brute-force oracles, the exponent calculator for the
//! bucket size, and the negative-triangle gadget instances for 4-opt.

pub mod alpha;
pub mod buckets;
pub mod decomp;
pub mod dpengine;
pub mod error;
pub mod instance;
pub mod moves;
pub mod oracle;

pub use error::{Error, Result};

/// Exact rational used for bucket exponents and running-time exponents.
pub type Rational = num_rational::Ratio<i64>;
