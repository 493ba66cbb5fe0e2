//! Shared fixtures for the criterion benchmarks.

use vbpso::knapsack::{generate, InstanceType, KnapsackInstance};
use vbpso::{RunConfig, TransferKind, WSchedule};

/// UCI instance with the protocol's `R = 1000`, `S = 0.5`.
pub fn uci(n: usize, seed: u64) -> KnapsackInstance {
    generate(InstanceType::Uci, n, 1000, 0.5, seed).expect("valid generation parameters")
}

/// Protocol configuration shortened to `iterations` steps.
pub fn config(kind: TransferKind, corrected: bool, dimensions: usize, iterations: usize) -> RunConfig {
    let w = if corrected {
        WSchedule::constant(1.0)
    } else {
        WSchedule::ramp(1.0, 0.4)
    };
    let mut c = RunConfig::standard(kind, corrected, w, dimensions);
    c.max_iterations = iterations;
    c
}
