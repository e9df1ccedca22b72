//! Optimal selling of two perfectly complementary goods to an agent with
//! private value and private input ratio.

// negated comparisons reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod curve;
pub mod dist;
pub mod error;
pub mod fmt;
pub mod mech;
pub mod quad;
pub mod solve;
pub mod verify;
pub mod virtual_value;

pub use config::Numerics;
pub use curve::ThresholdCurve;
pub use dist::{Distribution, Family, Marginal, Tabulated, TypePoint};
pub use error::{Error, Result};
pub use mech::{GridAllocation, GridMechanism, Mechanism, Mesh, Outcome, RawGridMechanism};
pub use solve::{solve, Solution, SolvePath};
pub use verify::{Check, VerificationReport};
