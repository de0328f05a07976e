//! Seeded simulation: broadcast sampling, exact belief propagation on the
//! sampled leaves, and population dynamics for deep trees.

mod bp;
mod broadcast;
mod population;
pub mod rng;

pub use bp::{bp_log_ratio, bp_root_posterior};
pub use broadcast::{
    node_count, sample_broadcast, sample_broadcast_capped, BroadcastSample, RootSpec,
    DEFAULT_NODE_CAP,
};
pub use population::{
    estimate_diagnostics, population_evolve, Population, PopulationDiagnostics, JACKKNIFE_BLOCKS,
    MIN_POPULATION,
};
