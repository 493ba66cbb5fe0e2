//! Binary particle swarm optimization with V-shaped transfer functions and
//! velocity legacy correction, together with 0/1 knapsack benchmarks, exact
//! solvers, exploration metrics and a reproducible experiment harness.
//!
//! The pieces fit together as:
//!
//! * [`transfer`]: the four transfer functions and their corrections;
//! * [`engine`]: the swarm loop over any [`engine::Objective`];
//! * [`knapsack`]: instance generation, DP/brute-force optima, repaired fitness;
//! * [`metrics`]: `dist`, `dist_eff`, useless jump volume, convergence rounds;
//! * [`harness`]: config parsing, repeated runs and CSV outputs.

pub mod bits;
pub mod engine;
pub mod harness;
pub mod knapsack;
pub mod metrics;
pub mod rng;
pub mod transfer;

pub use bits::BitString;
pub use engine::{run, step_swarm, Objective, RunConfig, SwarmState, WSchedule};
pub use knapsack::{InstanceType, KnapsackInstance, KnapsackObjective};
pub use metrics::{MetricSeries, RunTrace};
pub use transfer::{correct, sigm, TransferKind};
