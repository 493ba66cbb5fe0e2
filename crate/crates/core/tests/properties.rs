use proptest::prelude::*;

use vbpso::engine::{run, step_swarm, FnObjective, RunConfig, SwarmState, WSchedule};
use vbpso::knapsack::{brute_force_optimal, dp_optimal, evaluate, generate, InstanceType, KnapsackObjective};
use vbpso::rng::{SwarmRng, UniformSource};
use vbpso::transfer::{correct, sigm, TransferKind};
use vbpso::BitString;

fn kind() -> impl Strategy<Value = TransferKind> {
    prop::sample::select(TransferKind::ALL.to_vec())
}

fn instance_type() -> impl Strategy<Value = InstanceType> {
    prop::sample::select(vec![InstanceType::Uci, InstanceType::Wci, InstanceType::Sci])
}

/// Signed velocity with log-uniform magnitude in [1e-6, 10^2.5]; beyond that
/// the exact VT3 correction is no longer a normal double.
fn velocity() -> impl Strategy<Value = f64> {
    (-6.0f64..2.5, any::<bool>()).prop_map(|(e, neg)| if neg { -(10f64.powf(e)) } else { 10f64.powf(e) })
}

proptest! {
    #[test]
    fn sigm_is_even_and_in_range(k in kind(), v in -1e6f64..1e6) {
        let p = sigm(k, v).unwrap();
        prop_assert_eq!(p, sigm(k, -v).unwrap());
        prop_assert!((0.0..1.0).contains(&p) || p == 1.0 && v.abs() > 10.0);
    }

    #[test]
    fn sigm_is_monotone_on_positive_half(k in kind(), a in 1e-6f64..20.0, b in 1e-6f64..20.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(sigm(k, lo).unwrap() <= sigm(k, hi).unwrap());
    }

    #[test]
    fn correction_swaps_jump_probability(k in kind(), v in velocity()) {
        let c = correct(k, v).unwrap();
        prop_assert_eq!(c.signum(), v.signum());
        let target = 1.0 - sigm(k, v).unwrap();
        prop_assert!((sigm(k, c).unwrap() - target).abs() <= 1e-10);
    }

    #[test]
    fn correction_is_an_involution(k in kind(), v in velocity()) {
        let back = correct(k, correct(k, v).unwrap()).unwrap();
        prop_assert!(((back - v) / v).abs() <= 1e-8, "{} -> {}", v, back);
    }

    #[test]
    fn dp_matches_brute_force(t in instance_type(), n in 1usize..=16, r in prop::sample::select(vec![10u64, 50, 1000]),
                              s in 0.05f64..0.95, seed in any::<u64>()) {
        let inst = generate(t, n, r, s, seed).unwrap();
        let dp = dp_optimal(&inst);
        prop_assert_eq!(dp.profit, brute_force_optimal(&inst).unwrap());
        let (w, p) = inst.totals(&dp.selection).unwrap();
        prop_assert!(w <= inst.capacity);
        prop_assert_eq!(p, dp.profit);
    }

    #[test]
    fn repaired_selection_is_feasible_and_bounded(t in instance_type(), n in 1usize..=30, seed in any::<u64>(),
                                                  bits in prop::collection::vec(any::<bool>(), 30)) {
        let inst = generate(t, n, 1000, 0.5, seed).unwrap();
        let sel = BitString::from_bools(&bits[..n]);
        let objective = KnapsackObjective::new(inst.clone());
        let (profit, repaired) = objective.repaired(&sel).unwrap();
        let kept = repaired.unwrap_or_else(|| sel.clone());
        let (w, p) = inst.totals(&kept).unwrap();
        prop_assert!(w <= inst.capacity);
        prop_assert_eq!(p, profit);
        prop_assert_eq!(evaluate(&inst, &sel).unwrap(), profit);
        // repair only drops items
        prop_assert!(kept.ones().all(|i| sel.get(i)));
        prop_assert!(profit <= dp_optimal(&inst).profit);
    }
}

/// Wraps a source and records every value it hands out.
struct Recording<R> {
    inner: R,
    draws: Vec<f64>,
}

impl<R: UniformSource> UniformSource for Recording<R> {
    fn next_uniform(&mut self) -> f64 {
        let u = self.inner.next_uniform();
        self.draws.push(u);
        u
    }
}

fn count_ones(dims: usize) -> FnObjective<impl Fn(&BitString) -> f64 + Sync> {
    FnObjective::new(dims, |b: &BitString| b.count_ones() as f64)
}

/// Replays one step from the recorded draws with the update written out by hand.
fn check_step_replay(kind: TransferKind, corrected: bool, w: f64, seed: u64) {
    let dims = 24;
    let objective = count_ones(dims);
    let mut config = RunConfig::standard(kind, corrected, WSchedule::constant(w), dims);
    config.swarm_size = 6;
    config.max_iterations = 30;
    let mut rng = SwarmRng::new(seed);
    let mut state = SwarmState::initialize(&config, &objective, &mut rng).unwrap();
    for _ in 0..config.max_iterations {
        let before = state.clone();
        let mut rec = Recording {
            inner: rng.clone(),
            draws: Vec::new(),
        };
        step_swarm(&mut state, &config, &objective, &mut rec).unwrap();
        rng = rec.inner;
        assert_eq!(rec.draws.len(), 3 * dims * config.swarm_size);
        let mut draws = rec.draws.iter();
        for i in 0..config.swarm_size {
            for d in 0..dims {
                let x = before.positions[i].get(d) as u8 as f64;
                let pb = before.pbest_positions[i].get(d) as u8 as f64;
                let gb = before.gbest_position.get(d) as u8 as f64;
                let (r1, r2, r) = (*draws.next().unwrap(), *draws.next().unwrap(), *draws.next().unwrap());
                let mut v = w * before.velocity(i, d) + 2.0 * r1 * (pb - x) + 2.0 * r2 * (gb - x);
                if !corrected {
                    v = v.clamp(-5.0, 5.0);
                }
                let jumped = r < sigm(kind, v).unwrap();
                assert_eq!(state.positions[i].get(d), before.positions[i].get(d) ^ jumped);
                if jumped && corrected {
                    v = correct(kind, v).unwrap();
                }
                assert_eq!(state.velocity(i, d), v, "particle {i} dim {d}");
            }
        }
        for i in 0..config.swarm_size {
            assert!(state.pbest_fitness[i] >= before.pbest_fitness[i]);
            assert_eq!(state.pbest_fitness[i], objective_value(&state.pbest_positions[i]));
        }
        assert!(state.gbest_fitness >= before.gbest_fitness);
        let best = state.pbest_fitness.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(state.gbest_fitness, best);
    }
}

fn objective_value(b: &BitString) -> f64 {
    b.count_ones() as f64
}

#[test]
fn step_replays_from_recorded_draws() {
    for (s, kind) in TransferKind::ALL.into_iter().enumerate() {
        check_step_replay(kind, true, 1.0, s as u64);
        check_step_replay(kind, false, 0.8, 100 + s as u64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn run_invariants(k in kind(), corrected in any::<bool>(), seed in any::<u64>(), dims in 1usize..80) {
        let inst = generate(InstanceType::Uci, dims, 1000, 0.5, seed).unwrap();
        let objective = KnapsackObjective::new(inst.clone());
        let w = if corrected { WSchedule::ramp(1.2, 0.99) } else { WSchedule::ramp(1.0, 0.4) };
        let mut config = RunConfig::standard(k, corrected, w, dims);
        config.swarm_size = 5;
        config.max_iterations = 60;
        config.seed = seed;
        let trace = run(&config, &objective).unwrap();
        prop_assert_eq!(trace.records.len(), 61);
        let curve: Vec<f64> = trace.records.iter().map(|r| r.gbest_fitness).collect();
        prop_assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        // the final best is a feasible selection worth exactly gbest
        let (weight, profit) = inst.totals(&trace.best_position).unwrap();
        prop_assert!(weight <= inst.capacity);
        prop_assert_eq!(profit as f64, *curve.last().unwrap());
        for pair in trace.records.windows(2) {
            for p in 0..5 {
                prop_assert_eq!(pair[0].positions[p].hamming(&pair[1].positions[p]) as u32, pair[1].flips[p]);
            }
        }
        prop_assert_eq!(run(&config, &objective).unwrap(), trace);
    }

    #[test]
    fn uncorrected_speed_stays_within_vmax(k in kind(), seed in any::<u64>(), vmax in 0.5f64..8.0) {
        let dims = 32;
        let objective = count_ones(dims);
        let mut config = RunConfig::standard(k, false, WSchedule::constant(1.1), dims);
        config.vmax = Some(vmax);
        config.swarm_size = 4;
        let mut rng = SwarmRng::new(seed);
        let mut state = SwarmState::initialize(&config, &objective, &mut rng).unwrap();
        for _ in 0..40 {
            step_swarm(&mut state, &config, &objective, &mut rng).unwrap();
            prop_assert!(state.velocities.iter().all(|v| v.abs() <= vmax));
        }
    }
}

#[test]
fn corrected_vt2_solves_count_ones() {
    let objective = count_ones(16);
    let mut config = RunConfig::standard(TransferKind::Vt2, true, WSchedule::constant(1.0), 16);
    config.max_iterations = 200;
    for seed in 0..5 {
        config.seed = seed;
        let trace = run(&config, &objective).unwrap();
        assert_eq!(trace.final_gbest(), Some(16.0), "seed {seed}");
    }
}
