//! Online conversion with switching costs.

pub mod adversarial;
pub mod advice;
pub mod error;
pub mod evcharge;
pub mod lambert;
pub mod model;
pub mod offline;
pub mod optimize;
pub mod roro;
pub mod threshold;

pub use error::{OcsError, Result};
pub use model::{evaluate, Direction, Instance, PricingFunction, Schedule, SolutionReport};
pub use threshold::{alpha, omega, ThresholdParams};
