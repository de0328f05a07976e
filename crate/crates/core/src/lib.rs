//! Broadcasting on trees with a binary state space.
//!
//! A value is broadcast from the root of the rooted `k`-ary tree to its
//! children through a 2x2 channel, and the question is whether the values
//! far down the tree still carry information about the root. This crate
//! provides
//!
//! * [`chain`]: the channel, its stationary law and the closed-form bounds,
//! * [`exact`]: density evolution of the conditional log-likelihood-ratio
//!   laws on atoms, the monotone coupling and finite-depth diagnostics,
//! * [`montecarlo`]: seeded broadcast sampling, belief propagation and
//!   population dynamics,
//! * [`hardcore`]: independent-set enumeration and Gibbs checks for the
//!   hard-core specialisation,
//! * [`threshold`]: decay decisions, threshold bisection and bound reports.

// Range checks are written as `!(lo <= x && x <= hi)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod exact;
pub mod ext;
pub mod hardcore;
pub mod montecarlo;
pub mod numfmt;
pub mod threshold;

pub use chain::{hardcore_channel, make_channel, BinaryChannel, HardCoreParams};
pub use error::{Error, Result};
pub use exact::{AtomicDistribution, ConditionalPair, Coupling, PruningPolicy};
pub use montecarlo::Population;
