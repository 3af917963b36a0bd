//! Budgeted sampling and log-partition estimation for Gibbs densities
//! `p_f(x) = e^{f(x)} / Z_f` on the unit cube `[0,1]^d`.
//!
//! Every algorithm takes an explicit function-evaluation budget and a random
//! stream, and reports how many evaluations it actually used. Partition
//! arithmetic happens in log-space throughout.

pub mod budget;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod metrics;
pub mod numeric;
pub mod quadrature;
pub mod rect;
pub mod rng;
pub mod samplers;
pub mod target;

pub use budget::EvalBudget;
pub use error::{Error, Result};
pub use rect::Hyperrectangle;
pub use target::{FunctionId, TargetFunction};
