//! Post-hoc analysis of run traces.
//!
//! For particle `i` at iteration `k ≥ 1`:
//!
//! * `dist` is the Hamming distance between its positions at `k-1` and `k`;
//! * `dist_eff` is the Hamming distance from its position at `k` to the
//!   nearest position it held at any of `0..k` (the initial position counts
//!   as visited);
//! * the useless jump volume over `[m, n]` sums `dist - dist_eff` over all
//!   particles and iterations in the range.
//!
//! Since the previous position is part of the history, `dist_eff ≤ dist`.

use thiserror::Error;

use crate::bits::{BitString, BitsError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Bits(#[from] BitsError),
    #[error("particle {particle} out of range (swarm of {swarm_size})")]
    ParticleOutOfRange { particle: usize, swarm_size: usize },
    #[error("iteration {k} out of range 1..={last}")]
    IterationOutOfRange { k: usize, last: usize },
    #[error("invalid iteration range [{m}, {n}] for a trace ending at {last}")]
    BadRange { m: usize, n: usize, last: usize },
    #[error("trace is empty")]
    EmptyTrace,
}

/// State of the swarm after one iteration (record 0 is the initial swarm).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub gbest_fitness: f64,
    pub positions: Vec<BitString>,
    /// Bits flipped by each particle during this iteration.
    pub flips: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub swarm_size: usize,
    pub dimensions: usize,
    pub records: Vec<IterationRecord>,
    /// Global best selection at the end of the run.
    pub best_position: BitString,
}

impl RunTrace {
    /// Index of the last record.
    pub fn last_iteration(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_gbest(&self) -> Option<f64> {
        self.records.last().map(|r| r.gbest_fitness)
    }

    pub fn position(&self, particle: usize, k: usize) -> &BitString {
        &self.records[k].positions[particle]
    }

    fn check_particle(&self, particle: usize) -> Result<(), MetricsError> {
        if particle < self.swarm_size {
            Ok(())
        } else {
            Err(MetricsError::ParticleOutOfRange {
                particle,
                swarm_size: self.swarm_size,
            })
        }
    }

    fn check_step(&self, k: usize) -> Result<(), MetricsError> {
        let last = self.last_iteration();
        if k >= 1 && k <= last && !self.records.is_empty() {
            Ok(())
        } else {
            Err(MetricsError::IterationOutOfRange { k, last })
        }
    }
}

pub fn hamming(a: &BitString, b: &BitString) -> Result<usize, MetricsError> {
    Ok(a.try_hamming(b)?)
}

pub fn dist_iteration(trace: &RunTrace, particle: usize, k: usize) -> Result<usize, MetricsError> {
    trace.check_particle(particle)?;
    trace.check_step(k)?;
    hamming(trace.position(particle, k - 1), trace.position(particle, k))
}

pub fn dist_eff_iteration(trace: &RunTrace, particle: usize, k: usize) -> Result<usize, MetricsError> {
    trace.check_particle(particle)?;
    trace.check_step(k)?;
    Ok(nearest_history_distance(trace, particle, k))
}

/// Scans records `k-1, k-2, ..., 0`, stopping early on an exact revisit.
fn nearest_history_distance(trace: &RunTrace, particle: usize, k: usize) -> usize {
    let current = trace.position(particle, k);
    let mut best = usize::MAX;
    for r in (0..k).rev() {
        let d = current.hamming(trace.position(particle, r));
        if d < best {
            best = d;
            if best == 0 {
                break;
            }
        }
    }
    best
}

/// Useless jump volume over iterations `m..=n`.
pub fn pujv(trace: &RunTrace, m: usize, n: usize) -> Result<u64, MetricsError> {
    let last = trace.last_iteration();
    if m < 1 || m > n || n > last {
        return Err(MetricsError::BadRange { m, n, last });
    }
    let mut total = 0u64;
    for particle in 0..trace.swarm_size {
        for k in m..=n {
            let dist = trace.position(particle, k - 1).hamming(trace.position(particle, k));
            total += (dist - nearest_history_distance(trace, particle, k)) as u64;
        }
    }
    Ok(total)
}

/// Last iteration at which the global best strictly improved (0 if never).
pub fn convergence_round(trace: &RunTrace) -> usize {
    trace
        .records
        .windows(2)
        .rposition(|w| w[1].gbest_fitness > w[0].gbest_fitness)
        .map_or(0, |i| trace.records[i + 1].iteration)
}

/// First iteration at which the global best reached its final value.
pub fn first_discovery_round(trace: &RunTrace) -> usize {
    let Some(last) = trace.final_gbest() else {
        return 0;
    };
    trace
        .records
        .iter()
        .find(|r| r.gbest_fitness == last)
        .map_or(0, |r| r.iteration)
}

/// `dist` and `dist_eff` for every particle and iteration `1..=last`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricSeries {
    pub swarm_size: usize,
    /// `dist[particle][k - 1]`
    pub dist: Vec<Vec<u32>>,
    pub dist_eff: Vec<Vec<u32>>,
}

impl MetricSeries {
    pub fn compute(trace: &RunTrace) -> Self {
        let last = trace.last_iteration();
        let mut dist = Vec::with_capacity(trace.swarm_size);
        let mut dist_eff = Vec::with_capacity(trace.swarm_size);
        for particle in 0..trace.swarm_size {
            let mut d = Vec::with_capacity(last);
            let mut e = Vec::with_capacity(last);
            for k in 1..=last {
                d.push(trace.position(particle, k - 1).hamming(trace.position(particle, k)) as u32);
                e.push(nearest_history_distance(trace, particle, k) as u32);
            }
            dist.push(d);
            dist_eff.push(e);
        }
        Self {
            swarm_size: trace.swarm_size,
            dist,
            dist_eff,
        }
    }

    pub fn iterations(&self) -> usize {
        self.dist.first().map_or(0, Vec::len)
    }

    pub fn pujv(&self, m: usize, n: usize) -> Result<u64, MetricsError> {
        let last = self.iterations();
        if m < 1 || m > n || n > last {
            return Err(MetricsError::BadRange { m, n, last });
        }
        let mut total = 0u64;
        for (d, e) in self.dist.iter().zip(&self.dist_eff) {
            total += d[m - 1..n]
                .iter()
                .zip(&e[m - 1..n])
                .map(|(a, b)| (a - b) as u64)
                .sum::<u64>();
        }
        Ok(total)
    }

    /// Full-run useless jump volume, 0 for a trace without steps.
    pub fn total_pujv(&self) -> u64 {
        match self.iterations() {
            0 => 0,
            n => self.pujv(1, n).expect("full range is valid"),
        }
    }

    /// Swarm means of `dist` and `dist_eff` at iteration `k` (1-based).
    pub fn means_at(&self, k: usize) -> (f64, f64) {
        let n = self.swarm_size as f64;
        let d: u64 = self.dist.iter().map(|v| v[k - 1] as u64).sum();
        let e: u64 = self.dist_eff.iter().map(|v| v[k - 1] as u64).sum();
        (d as f64 / n, e as f64 / n)
    }
}
