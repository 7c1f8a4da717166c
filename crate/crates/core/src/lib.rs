//! Achievable rate regions of the two-user Gaussian interference channel when
//! both receivers treat interference as noise.
//!
//! The crate evaluates pure proper and improper transmit strategies, their
//! convex hulls, and the coded time-sharing region (rates and powers averaged
//! over several strategies). The time-sharing boundary is computed on the
//! Lagrangian dual: a cutting-plane loop over the multipliers whose inner
//! problem is solved globally by monotonic branch-and-bound, followed by
//! primal recovery of the time-sharing weights.
//!
//! Modules:
//! - [`model`]: channel/strategy types and the rate expressions
//! - [`lp`]: dense simplex solver with dual prices
//! - [`inner`]: branch-and-bound for the inner dual problem
//! - [`outer`]: cutting plane and primal recovery
//! - [`regions`]: region sweeps, hulls and verification harnesses

pub mod error;
pub mod inner;
pub mod lp;
pub mod model;
pub mod outer;
pub mod regions;

pub use error::{Error, Result};
pub use inner::{BnbConfig, DualPoint, PowerBox};
pub use model::{ChannelRealization, PowerBudget, Powers, RatePair, RateProfile, TransmitStrategy};
pub use outer::{OuterConfig, TimeSharingSolution};
