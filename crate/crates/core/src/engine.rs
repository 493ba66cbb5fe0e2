//! The binary PSO iteration loop.
//!
//! One step updates every bit of every particle before any fitness
//! evaluation (synchronous swarm). Per particle-dimension the order is:
//! velocity update with fresh `r1`, `r2`; clamp to `vmax` when correction is
//! off; jump draw; and, when correction is on and the bit flipped, immediate
//! replacement of the stored velocity by its corrected value. The stored
//! velocity is therefore always expressed relative to the current bit.

use thiserror::Error;

use crate::bits::BitString;
use crate::metrics::{IterationRecord, RunTrace};
use crate::rng::{SwarmRng, UniformSource};
use crate::transfer::{TransferKind, MAX_CORRECTED_SPEED};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("objective evaluation failed: {0}")]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("position has {got} bits, objective expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Other(String),
}

/// Result of evaluating one position.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    /// Selection actually scored, when the objective repaired the input.
    /// Personal and global bests record this instead of the raw position.
    pub repaired: Option<BitString>,
}

impl Evaluation {
    pub fn plain(fitness: f64) -> Self {
        Self {
            fitness,
            repaired: None,
        }
    }
}

/// Deterministic fitness over bit-vectors; larger is better.
pub trait Objective: Sync {
    fn dimensions(&self) -> usize;
    fn evaluate(&self, position: &BitString) -> Result<Evaluation, ObjectiveError>;
}

/// Adapts a closure `&BitString -> f64` into an [`Objective`].
pub struct FnObjective<F> {
    dimensions: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&BitString) -> f64 + Sync,
{
    pub fn new(dimensions: usize, f: F) -> Self {
        Self { dimensions, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&BitString) -> f64 + Sync,
{
    fn dimensions(&self) -> usize {
        self.dimensions
    }

    fn evaluate(&self, position: &BitString) -> Result<Evaluation, ObjectiveError> {
        if position.len() != self.dimensions {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.dimensions,
                got: position.len(),
            });
        }
        Ok(Evaluation::plain((self.f)(position)))
    }
}

/// Inertia weight ramp, written `start-end` (or a single value when constant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WSchedule {
    pub start: f64,
    pub end: f64,
}

impl WSchedule {
    pub fn constant(w: f64) -> Self {
        Self { start: w, end: w }
    }

    pub fn ramp(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn is_constant(&self) -> bool {
        self.start == self.end
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let ok = |w: f64| w.is_finite() && w > 0.0;
        if ok(self.start) && ok(self.end) {
            Ok(())
        } else {
            Err(EngineError::Config(format!(
                "inertia weights must be positive and finite, got {self}"
            )))
        }
    }
}

impl std::fmt::Display for WSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_constant() {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}-{}", self.start, self.end)
        }
    }
}

/// Inertia weight used for step `iteration` of a run of `max_iterations` steps.
pub fn w_at(schedule: WSchedule, iteration: usize, max_iterations: usize) -> Result<f64, EngineError> {
    if schedule.is_constant() {
        return Ok(schedule.start);
    }
    if max_iterations < 2 {
        return Err(EngineError::Config(format!(
            "a ramped schedule {schedule} needs at least 2 iterations, got {max_iterations}"
        )));
    }
    if iteration >= max_iterations {
        return Err(EngineError::Config(format!(
            "iteration {iteration} is past the last step {}",
            max_iterations - 1
        )));
    }
    let frac = iteration as f64 / (max_iterations - 1) as f64;
    Ok(schedule.start + (schedule.end - schedule.start) * frac)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: TransferKind,
    pub correction_enabled: bool,
    pub w: WSchedule,
    /// Velocity clamp; must be `None` exactly when correction is enabled.
    pub vmax: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    pub swarm_size: usize,
    pub dimensions: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl RunConfig {
    /// Protocol defaults: 20 particles, `c1 = c2 = 2`, 1000 iterations, and
    /// `vmax = 5` when the correction is off.
    pub fn standard(kind: TransferKind, correction_enabled: bool, w: WSchedule, dimensions: usize) -> Self {
        Self {
            kind,
            correction_enabled,
            w,
            vmax: if correction_enabled { None } else { Some(5.0) },
            c1: 2.0,
            c2: 2.0,
            swarm_size: 20,
            dimensions,
            max_iterations: 1000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        self.w.validate()?;
        match (self.correction_enabled, self.vmax) {
            (true, Some(v)) => {
                return Err(EngineError::Config(format!(
                    "vmax = {v} given with correction enabled; corrected runs are unclamped"
                )))
            }
            (false, None) => return Err(EngineError::Config("uncorrected runs need a vmax clamp".into())),
            (false, Some(v)) if !(v.is_finite() && v > 0.0) => {
                return Err(EngineError::Config(format!("vmax must be positive, got {v}")))
            }
            _ => {}
        }
        for (name, c) in [("c1", self.c1), ("c2", self.c2)] {
            if !(c.is_finite() && c >= 0.0) {
                return Err(EngineError::Config(format!("{name} must be >= 0, got {c}")));
            }
        }
        if self.swarm_size == 0 || self.dimensions == 0 {
            return Err(EngineError::Config("swarm size and dimensions must be positive".into()));
        }
        if !self.w.is_constant() && self.max_iterations == 1 {
            // max_iterations == 0 never evaluates w.
            w_at(self.w, 0, 1)?;
        }
        Ok(())
    }
}

/// Velocity update for one bit.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn update_velocity(
    v: f64,
    x: bool,
    pbest_bit: bool,
    gbest_bit: bool,
    w: f64,
    c1: f64,
    c2: f64,
    r1: f64,
    r2: f64,
) -> f64 {
    let x = x as i8 as f64;
    w * v + c1 * r1 * (pbest_bit as i8 as f64 - x) + c2 * r2 * (gbest_bit as i8 as f64 - x)
}

#[inline]
pub fn clamp_velocity(v: f64, vmax: Option<f64>) -> f64 {
    match vmax {
        Some(m) => v.clamp(-m, m),
        None => v,
    }
}

/// `true` means the bit flips.
#[inline]
pub fn decide_jump(kind: TransferKind, v: f64, r: f64) -> bool {
    r < kind.probability(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub positions: Vec<BitString>,
    /// Row-major `swarm_size × dimensions`.
    pub velocities: Vec<f64>,
    pub pbest_positions: Vec<BitString>,
    pub pbest_fitness: Vec<f64>,
    pub gbest_position: BitString,
    pub gbest_fitness: f64,
    pub iteration: usize,
}

impl SwarmState {
    /// Fair-coin positions, zero velocities, bests taken from the initial swarm.
    pub fn initialize<O, R>(config: &RunConfig, objective: &O, rng: &mut R) -> Result<Self, EngineError>
    where
        O: Objective + ?Sized,
        R: UniformSource,
    {
        let positions = (0..config.swarm_size)
            .map(|_| {
                let mut p = BitString::zeros(config.dimensions);
                for d in 0..config.dimensions {
                    if rng.next_bit() {
                        p.set(d, true);
                    }
                }
                p
            })
            .collect();
        Self::from_positions(config, objective, positions)
    }

    /// Builds a state from explicit positions with zero velocities.
    pub fn from_positions<O>(config: &RunConfig, objective: &O, positions: Vec<BitString>) -> Result<Self, EngineError>
    where
        O: Objective + ?Sized,
    {
        if positions.len() != config.swarm_size {
            return Err(EngineError::Config(format!(
                "{} positions for a swarm of {}",
                positions.len(),
                config.swarm_size
            )));
        }
        let mut pbest_positions = Vec::with_capacity(positions.len());
        let mut pbest_fitness = Vec::with_capacity(positions.len());
        for p in &positions {
            let eval = objective.evaluate(p)?;
            pbest_positions.push(eval.repaired.unwrap_or_else(|| p.clone()));
            pbest_fitness.push(eval.fitness);
        }
        let mut best = 0;
        for i in 1..pbest_fitness.len() {
            if pbest_fitness[i] > pbest_fitness[best] {
                best = i;
            }
        }
        Ok(Self {
            velocities: vec![0.0; config.swarm_size * config.dimensions],
            gbest_position: pbest_positions[best].clone(),
            gbest_fitness: pbest_fitness[best],
            positions,
            pbest_positions,
            pbest_fitness,
            iteration: 0,
        })
    }

    pub fn velocity(&self, particle: usize, dim: usize) -> f64 {
        let d = self.positions[particle].len();
        self.velocities[particle * d + dim]
    }
}

/// Advances the swarm by one iteration and returns per-particle flip counts.
pub fn step_swarm<O, R>(
    state: &mut SwarmState,
    config: &RunConfig,
    objective: &O,
    rng: &mut R,
) -> Result<Vec<u32>, EngineError>
where
    O: Objective + ?Sized,
    R: UniformSource,
{
    let w = w_at(config.w, state.iteration, config.max_iterations)?;
    let dims = config.dimensions;
    let mut flips = vec![0u32; config.swarm_size];

    for (i, flip_count) in flips.iter_mut().enumerate() {
        let position = &mut state.positions[i];
        let pbest = &state.pbest_positions[i];
        let velocities = &mut state.velocities[i * dims..(i + 1) * dims];
        for (d, slot) in velocities.iter_mut().enumerate() {
            let x = position.get(d);
            let r1 = rng.next_uniform();
            let r2 = rng.next_uniform();
            let mut v = update_velocity(
                *slot,
                x,
                pbest.get(d),
                state.gbest_position.get(d),
                w,
                config.c1,
                config.c2,
                r1,
                r2,
            );
            if config.correction_enabled {
                v = v.clamp(-MAX_CORRECTED_SPEED, MAX_CORRECTED_SPEED);
            } else {
                v = clamp_velocity(v, config.vmax);
            }
            let r = rng.next_uniform();
            if decide_jump(config.kind, v, r) {
                position.flip(d);
                *flip_count += 1;
                if config.correction_enabled {
                    // v != 0 here: a zero velocity has zero jump probability.
                    v = config.kind.corrected(v);
                }
            }
            *slot = v;
        }
    }

    for i in 0..config.swarm_size {
        let eval = objective.evaluate(&state.positions[i])?;
        if eval.fitness > state.pbest_fitness[i] {
            state.pbest_fitness[i] = eval.fitness;
            state.pbest_positions[i] = eval.repaired.unwrap_or_else(|| state.positions[i].clone());
        }
    }
    for i in 0..config.swarm_size {
        if state.pbest_fitness[i] > state.gbest_fitness {
            state.gbest_fitness = state.pbest_fitness[i];
            state.gbest_position = state.pbest_positions[i].clone();
        }
    }
    state.iteration += 1;
    Ok(flips)
}

/// Runs `config.max_iterations` steps from a seeded initialization and
/// records every iteration.
pub fn run<O>(config: &RunConfig, objective: &O) -> Result<RunTrace, EngineError>
where
    O: Objective + ?Sized,
{
    config.validate()?;
    if objective.dimensions() != config.dimensions {
        return Err(EngineError::Config(format!(
            "config has {} dimensions, objective has {}",
            config.dimensions,
            objective.dimensions()
        )));
    }
    let mut rng = SwarmRng::new(config.seed);
    let mut state = SwarmState::initialize(config, objective, &mut rng)?;
    let mut records = Vec::with_capacity(config.max_iterations + 1);
    records.push(IterationRecord {
        iteration: 0,
        gbest_fitness: state.gbest_fitness,
        positions: state.positions.clone(),
        flips: vec![0; config.swarm_size],
    });
    for _ in 0..config.max_iterations {
        let flips = step_swarm(&mut state, config, objective, &mut rng)?;
        records.push(IterationRecord {
            iteration: state.iteration,
            gbest_fitness: state.gbest_fitness,
            positions: state.positions.clone(),
            flips,
        });
    }
    Ok(RunTrace {
        swarm_size: config.swarm_size,
        dimensions: config.dimensions,
        records,
        best_position: state.gbest_position,
    })
}
